#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace imprint {

enum class Layer { syntactic, semantic, business_rule };
enum class Severity { error, warning };

std::string_view to_string(Layer layer);
std::string_view to_string(Severity severity);

struct Finding {
  Layer layer = Layer::syntactic;
  std::string path;
  std::string message;
  Severity severity = Severity::error;

  bool operator==(const Finding&) const = default;
};

// `LAYER severity path: message`
std::string format_finding(const Finding& finding);

class ValidationReport {
 public:
  ValidationReport() = default;
  explicit ValidationReport(std::vector<Finding> findings) : findings_(std::move(findings)) {}

  void add(Finding finding) { findings_.push_back(std::move(finding)); }
  void add(Layer layer, std::string path, std::string message, Severity severity = Severity::error) {
    findings_.push_back({layer, std::move(path), std::move(message), severity});
  }
  void merge(const ValidationReport& other) {
    findings_.insert(findings_.end(), other.findings_.begin(), other.findings_.end());
  }

  const std::vector<Finding>& findings() const noexcept { return findings_; }
  bool passed() const noexcept { return error_count() == 0; }
  std::size_t error_count() const noexcept;
  std::size_t count(Layer layer, Severity severity = Severity::error) const noexcept;

 private:
  std::vector<Finding> findings_;
};

void to_json(nlohmann::json& j, const Finding& finding);
void to_json(nlohmann::json& j, const ValidationReport& report);

}  // namespace imprint
