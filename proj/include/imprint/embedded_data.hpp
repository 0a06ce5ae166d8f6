#pragma once

#include <string_view>
#include <vector>

// Data files from data/, compiled into the library so the engine runs without
// an install tree. Names are paths relative to data/, e.g. "templates/system.txt".
namespace imprint::data {

std::string_view file(std::string_view name);
std::vector<std::string_view> names();

}  // namespace imprint::data
