#include "imprint/report.hpp"

#include <algorithm>

namespace imprint {

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::syntactic: return "SYNTACTIC";
    case Layer::semantic: return "SEMANTIC";
    case Layer::business_rule: return "BUSINESS_RULE";
  }
  return "?";
}

std::string_view to_string(Severity severity) { return severity == Severity::error ? "error" : "warning"; }

std::string format_finding(const Finding& f) {
  std::string out;
  out.append(to_string(f.layer)).append(" ").append(to_string(f.severity)).append(" ");
  out.append(f.path).append(": ").append(f.message);
  return out;
}

std::size_t ValidationReport::error_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(findings_.begin(), findings_.end(), [](const Finding& f) { return f.severity == Severity::error; }));
}

std::size_t ValidationReport::count(Layer layer, Severity severity) const noexcept {
  return static_cast<std::size_t>(std::count_if(findings_.begin(), findings_.end(), [&](const Finding& f) {
    return f.layer == layer && f.severity == severity;
  }));
}

void to_json(nlohmann::json& j, const Finding& f) {
  std::string layer(to_string(f.layer));
  std::transform(layer.begin(), layer.end(), layer.begin(), [](unsigned char c) { return std::tolower(c); });
  j = {{"layer", layer}, {"path", f.path}, {"message", f.message}, {"severity", std::string(to_string(f.severity))}};
}

void to_json(nlohmann::json& j, const ValidationReport& report) {
  j = {{"passed", report.passed()}, {"findings", report.findings()}};
}

}  // namespace imprint
