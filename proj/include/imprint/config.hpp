#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/report.hpp"

namespace imprint::config {

using nlohmann::json;

enum class Level { publisher, imprint, title };

std::string_view to_string(Level level);
// Throws UsageError for anything but publisher / imprint / title.
Level parse_level(std::string_view name);

enum class Section {
  config_metadata,
  identity,
  branding,
  typography,
  publishing_focus,
  book_defaults,
  pricing,
  distribution,
  metadata,
  production,
  marketing,
  publisher_persona,
  codex_types,
  academic_paper,
  workflow,
  lsi_settings,
  wizard,
  llm_config,
  automation,
  generation_info,
};

inline constexpr std::size_t kSectionCount = 20;
const std::array<Section, kSectionCount>& all_sections();
std::string_view to_string(Section section);
std::optional<Section> section_from_name(std::string_view name);

struct SemanticVersion {
  std::uint32_t major = 0;
  std::uint32_t minor = 0;
  std::uint32_t patch = 0;

  auto operator<=>(const SemanticVersion&) const = default;

  // Accepts "M.m.p" and the two-part "M.m" (normalized to patch 0).
  static SemanticVersion parse(std::string_view text);
  std::string str() const;
};

enum class FieldType { string, integer, number, boolean, string_list, integer_list, object, font, version, date };

std::string_view to_string(FieldType type);

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::string;
  bool required = false;
};

// The closed set of sections and fields, loaded from data/config_schema.json.
class Schema {
 public:
  static const Schema& builtin();
  static Schema from_json(const json& doc);

  const FieldSpec* field(Section section, std::string_view name) const;
  const std::vector<FieldSpec>& fields(Section section) const;
  std::vector<std::string> required_paths() const;

  // Empty when `value` conforms to `type`, otherwise a description of the mismatch.
  static std::optional<std::string> type_problem(FieldType type, const json& value);

 private:
  std::map<Section, std::vector<FieldSpec>> sections_;
};

std::string field_path(Section section, std::string_view field);

// One hierarchy level of the imprint configuration, as written in its file.
class ConfigNode {
 public:
  using Fields = std::map<std::string, json>;

  ConfigNode() = default;
  explicit ConfigNode(Level level) : level_(level) {}

  Level level() const noexcept { return level_; }
  const std::map<Section, Fields>& sections() const noexcept { return sections_; }
  const std::vector<Finding>& findings() const noexcept { return findings_; }

  const json* find(Section section, std::string_view field) const;
  // Throws ContractError for a field outside the schema.
  void set(Section section, const std::string& field, json value, const Schema& schema = Schema::builtin());
  void add_finding(Finding finding) { findings_.push_back(std::move(finding)); }

  json to_json() const;
  bool same_fields(const ConfigNode& other) const { return level_ == other.level_ && sections_ == other.sections_; }

 private:
  friend ConfigNode parse_config(std::string_view, Level, const Schema&);
  friend class ResolvedConfig;
  Fields& mutable_section(Section section) { return sections_[section]; }

  Level level_ = Level::publisher;
  std::map<Section, Fields> sections_;
  std::vector<Finding> findings_;
};

// Throws ParseError (with byte/line/column) for malformed JSON. Unknown
// sections and fields become syntactic findings on the returned node.
ConfigNode parse_config(std::string_view raw, Level level, const Schema& schema = Schema::builtin());
ConfigNode parse_config(std::string_view raw, std::string_view level, const Schema& schema = Schema::builtin());
std::string serialize(const ConfigNode& node);

struct ResolvedField {
  json value;
  Level provenance = Level::publisher;
};

class ResolvedConfig {
 public:
  ResolvedConfig() = default;
  ResolvedConfig(std::map<std::string, ResolvedField> fields, std::vector<Finding> carried)
      : fields_(std::move(fields)), carried_(std::move(carried)) {}

  const std::map<std::string, ResolvedField>& fields() const noexcept { return fields_; }
  // Syntactic findings from the nodes this config was resolved from.
  const std::vector<Finding>& carried_findings() const noexcept { return carried_; }

  bool has(std::string_view path) const { return find(path) != nullptr; }
  const json* find(std::string_view path) const;
  // Throws NotFoundError.
  const json& at(std::string_view path) const;
  Level provenance(std::string_view path) const;

  // Typed access. The optional forms return nullopt when the field is absent
  // or has a different type; the plain forms throw ConfigurationError.
  std::optional<std::string> get_string(std::string_view path) const;
  std::optional<double> get_number(std::string_view path) const;
  std::optional<std::int64_t> get_integer(std::string_view path) const;
  std::optional<bool> get_bool(std::string_view path) const;
  std::optional<std::vector<std::string>> get_strings(std::string_view path) const;
  std::optional<std::vector<std::int64_t>> get_integers(std::string_view path) const;

  std::string string(std::string_view path) const;
  double number(std::string_view path) const;
  std::int64_t integer(std::string_view path) const;
  bool boolean(std::string_view path) const;
  std::vector<std::string> strings(std::string_view path) const;

  // Throws VersionError when config_metadata.version is absent or malformed.
  SemanticVersion version() const;

  // Re-wraps every resolved value as a node at `level`.
  ConfigNode as_node(Level level = Level::publisher) const;

 private:
  std::map<std::string, ResolvedField> fields_;
  std::vector<Finding> carried_;
};

// Per-field merge: title over imprint over publisher. List and object values
// replace wholesale. Throws ContractError on mismatched level tags and
// ResolutionError listing every required path left undefined.
ResolvedConfig resolve(const ConfigNode& publisher, const ConfigNode& imprint, const ConfigNode& title,
                       const Schema& schema = Schema::builtin());

// Business rules live in data files (see data/business_rules.json).
struct Condition {
  enum class Op { equals, not_equals, matches, not_matches, contains, not_contains, is_true, is_false };
  std::string path;
  Op op = Op::equals;
  std::optional<std::string> value;
  std::optional<std::string> value_from;
  bool icase = false;
};

struct BusinessRule {
  std::string id;
  std::string path;
  std::string message;
  Severity severity = Severity::error;
  std::optional<Condition> when;
  Condition require;
};

class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<BusinessRule> rules) : rules_(std::move(rules)) {}

  static RuleSet builtin();
  // Throws ConfigurationError for unknown ops or missing keys.
  static RuleSet from_json(const json& doc);
  static RuleSet parse(std::string_view raw);

  const std::vector<BusinessRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<BusinessRule> rules_;
};

// Runs syntactic, semantic and business-rule layers in that order. Every
// layer runs regardless of what earlier layers found.
ValidationReport validate(const ResolvedConfig& cfg, const RuleSet& rules, const Schema& schema = Schema::builtin());

enum class ChangeKind { structural, feature, fix };
ChangeKind parse_change_kind(std::string_view name);

SemanticVersion bump(SemanticVersion current, ChangeKind change);
SemanticVersion bump_version(const ResolvedConfig& cfg, ChangeKind change);

}  // namespace imprint::config
