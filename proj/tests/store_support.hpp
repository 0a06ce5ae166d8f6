#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "imprint/orchestrator.hpp"
#include "support.hpp"

namespace test_support {

inline const char* kToken = "editor-secret";

// Fixed clock so snapshots are comparable across runs.
inline imprint::orchestrator::TimePoint t0() { return imprint::orchestrator::parse_time("2025-01-01T00:00:00Z"); }

inline imprint::orchestrator::Options store_options(std::string token = kToken) {
  imprint::orchestrator::Options o;
  o.clock = [] { return t0(); };
  o.approve_token = std::move(token);
  return o;
}

inline imprint::orchestrator::Orchestrator fresh_store(const std::string& name, std::string token = kToken) {
  const auto dir = scratch_dir(name);
  imprint::orchestrator::Orchestrator::init(dir, fixture("xynapse/publisher.json"), fixture("xynapse/imprint.json"),
                                            store_options(token));
  return imprint::orchestrator::Orchestrator::open(dir, store_options(token));
}

// A three-quotation pilsa title and a corpus that confirms all but `poisoned` quotations.
struct TitleFiles {
  std::string config;
  std::string quotations;
  std::string corpus;
};

inline TitleFiles small_title(const std::string& isbn = "9798886450019", int poisoned = -1) {
  auto cfg = nlohmann::json::parse(fixture("xynapse/title.json"));
  cfg["codex_types"]["quotation_count"] = 3;
  cfg["metadata"]["isbn"] = isbn;
  nlohmann::json quotes = nlohmann::json::array();
  nlohmann::json corpus = nlohmann::json::array();
  const char* texts[] = {"The unexamined life is not worth living.", "Know thyself.",
                         "Nothing in excess."};
  for (int i = 0; i < 3; ++i) {
    const std::string author = "Author " + std::to_string(i);
    const std::string work = "Work " + std::to_string(i);
    quotes.push_back({{"text", texts[i]},
                      {"author", author},
                      {"source_work", work},
                      {"citation", author + ". 2001. " + work + ". Athens: Press."}});
    if (i != poisoned) {
      corpus.push_back({{"text", texts[i]}, {"author", author}, {"source_work", work}, {"location", "p. " + std::to_string(10 + i)}});
    }
  }
  return {cfg.dump(2), quotes.dump(2), corpus.dump(2)};
}

}  // namespace test_support
