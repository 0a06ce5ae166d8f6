#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "imprint/config.hpp"

namespace test_support {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fixture " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::string fixture(const std::string& rel) { return read_file(std::string(IMPRINT_FIXTURE_DIR) + "/" + rel); }

inline imprint::config::ConfigNode fixture_node(const std::string& name, imprint::config::Level level) {
  return imprint::config::parse_config(fixture("xynapse/" + name + ".json"), level);
}

inline imprint::config::ResolvedConfig xynapse_config(bool with_title = true) {
  using imprint::config::Level;
  return imprint::config::resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint),
                                  with_title ? fixture_node("title", Level::title)
                                             : imprint::config::ConfigNode(Level::title));
}

// Fresh empty directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(IMPRINT_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace test_support
