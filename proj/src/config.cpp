#include "imprint/config.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "imprint/embedded_data.hpp"
#include "imprint/errors.hpp"
#include "imprint/text.hpp"

namespace imprint::config {

namespace {

constexpr std::array<std::string_view, kSectionCount> kSectionNames = {
    "config_metadata", "identity",          "branding",     "typography",     "publishing_focus",
    "book_defaults",   "pricing",           "distribution", "metadata",       "production",
    "marketing",       "publisher_persona", "codex_types",  "academic_paper", "workflow",
    "lsi_settings",    "wizard",            "llm_config",   "automation",     "generation_info",
};

constexpr std::array<std::string_view, 10> kTypeNames = {
    "string", "integer", "number", "boolean", "string_list", "integer_list", "object", "font", "version", "date",
};

std::pair<std::size_t, std::size_t> line_and_column(std::string_view raw, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < raw.size(); ++i) {
    if (raw[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

bool is_list_of(const json& v, bool (json::*pred)() const noexcept) {
  if (!v.is_array()) return false;
  return std::all_of(v.begin(), v.end(), [&](const json& e) { return (e.*pred)(); });
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::publisher: return "publisher";
    case Level::imprint: return "imprint";
    case Level::title: return "title";
  }
  return "?";
}

Level parse_level(std::string_view name) {
  if (name == "publisher") return Level::publisher;
  if (name == "imprint") return Level::imprint;
  if (name == "title") return Level::title;
  throw UsageError("unknown hierarchy level '" + std::string(name) + "' (expected publisher, imprint or title)");
}

const std::array<Section, kSectionCount>& all_sections() {
  static const std::array<Section, kSectionCount> sections = [] {
    std::array<Section, kSectionCount> out{};
    for (std::size_t i = 0; i < kSectionCount; ++i) out[i] = static_cast<Section>(i);
    return out;
  }();
  return sections;
}

std::string_view to_string(Section section) { return kSectionNames.at(static_cast<std::size_t>(section)); }

std::optional<Section> section_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSectionCount; ++i) {
    if (kSectionNames[i] == name) return static_cast<Section>(i);
  }
  return std::nullopt;
}

std::string_view to_string(FieldType type) { return kTypeNames.at(static_cast<std::size_t>(type)); }

std::string field_path(Section section, std::string_view field) {
  return std::string(to_string(section)) + "." + std::string(field);
}

// ---------------------------------------------------------------------------
// SemanticVersion

SemanticVersion SemanticVersion::parse(std::string_view text) {
  static const std::regex pattern(R"(^(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)(?:\.(0|[1-9][0-9]*))?$)");
  std::string s(text);
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) {
    throw VersionError("'" + s + "' is not a semantic version (expected MAJOR.MINOR[.PATCH])");
  }
  auto number = [&](int group) -> std::uint32_t {
    if (!m[group].matched) return 0;
    auto value = std::stoull(m[group].str());
    if (value > 0xffffffffULL) throw VersionError("version component out of range in '" + s + "'");
    return static_cast<std::uint32_t>(value);
  };
  return {number(1), number(2), number(3)};
}

std::string SemanticVersion::str() const {
  return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

// ---------------------------------------------------------------------------
// Schema

const Schema& Schema::builtin() {
  static const Schema schema = from_json(json::parse(data::file("config_schema.json")));
  return schema;
}

Schema Schema::from_json(const json& doc) {
  Schema schema;
  const auto& sections = doc.at("sections");
  for (auto it = sections.begin(); it != sections.end(); ++it) {
    auto section = section_from_name(it.key());
    if (!section) throw ConfigurationError("schema names unknown section '" + it.key() + "'");
    std::vector<FieldSpec> fields;
    const auto& field_docs = it.value().at("fields");
    for (auto f = field_docs.begin(); f != field_docs.end(); ++f) {
      auto type_name = f.value().at("type").get<std::string>();
      auto pos = std::find(kTypeNames.begin(), kTypeNames.end(), type_name);
      if (pos == kTypeNames.end()) throw ConfigurationError("schema field type '" + type_name + "' is unknown");
      fields.push_back({f.key(), static_cast<FieldType>(pos - kTypeNames.begin()), f.value().value("required", false)});
    }
    schema.sections_[*section] = std::move(fields);
  }
  for (auto section : all_sections()) {
    if (!schema.sections_.count(section)) {
      throw ConfigurationError("schema is missing section '" + std::string(to_string(section)) + "'");
    }
  }
  return schema;
}

const FieldSpec* Schema::field(Section section, std::string_view name) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return nullptr;
  for (const auto& spec : it->second) {
    if (spec.name == name) return &spec;
  }
  return nullptr;
}

const std::vector<FieldSpec>& Schema::fields(Section section) const { return sections_.at(section); }

std::vector<std::string> Schema::required_paths() const {
  std::vector<std::string> out;
  for (const auto& [section, fields] : sections_) {
    for (const auto& spec : fields) {
      if (spec.required) out.push_back(field_path(section, spec.name));
    }
  }
  return out;
}

std::optional<std::string> Schema::type_problem(FieldType type, const json& v) {
  switch (type) {
    case FieldType::string:
      if (v.is_string()) return std::nullopt;
      return "expected a string";
    case FieldType::integer:
      if (v.is_number_integer()) return std::nullopt;
      return "expected an integer";
    case FieldType::number:
      if (v.is_number()) return std::nullopt;
      return "expected a number";
    case FieldType::boolean:
      if (v.is_boolean()) return std::nullopt;
      return "expected a boolean";
    case FieldType::string_list:
      if (is_list_of(v, &json::is_string)) return std::nullopt;
      return "expected a list of strings";
    case FieldType::integer_list:
      if (is_list_of(v, &json::is_number_integer)) return std::nullopt;
      return "expected a list of integers";
    case FieldType::object:
      if (v.is_object()) return std::nullopt;
      return "expected an object";
    case FieldType::font:
      if (v.is_object() && v.contains("name") && v["name"].is_string() &&
          (!v.contains("source") || v["source"].is_string())) {
        return std::nullopt;
      }
      return "expected a font record {\"name\": ..., \"source\": ...}";
    case FieldType::version:
      if (!v.is_string()) return "expected a version string";
      try {
        SemanticVersion::parse(v.get<std::string>());
        return std::nullopt;
      } catch (const VersionError& e) {
        return std::string(e.what());
      }
    case FieldType::date:
      if (v.is_string() && text::is_iso_date(v.get<std::string>())) return std::nullopt;
      return "expected a YYYY-MM-DD date";
  }
  return "unknown type";
}

// ---------------------------------------------------------------------------
// ConfigNode

const json* ConfigNode::find(Section section, std::string_view field) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto f = s->second.find(std::string(field));
  return f == s->second.end() ? nullptr : &f->second;
}

void ConfigNode::set(Section section, const std::string& field, json value, const Schema& schema) {
  if (!schema.field(section, field)) {
    throw ContractError("field '" + field_path(section, field) + "' is not in the schema");
  }
  sections_[section][field] = std::move(value);
}

json ConfigNode::to_json() const {
  json doc = json::object();
  for (const auto& [section, fields] : sections_) {
    json& s = doc[std::string(to_string(section))];
    s = json::object();
    for (const auto& [name, value] : fields) s[name] = value;
  }
  return doc;
}

ConfigNode parse_config(std::string_view raw, Level level, const Schema& schema) {
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    auto [line, column] = line_and_column(raw, byte);
    throw ParseError(std::string("malformed configuration document: ") + e.what(), byte, line, column);
  }
  if (!doc.is_object()) throw ParseError("configuration document must be a JSON object", 0, 1, 1);

  ConfigNode node(level);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    auto section = section_from_name(it.key());
    if (!section) {
      node.add_finding({Layer::syntactic, it.key(), "unknown section '" + it.key() + "'", Severity::error});
      continue;
    }
    if (!it.value().is_object()) {
      node.add_finding({Layer::syntactic, it.key(), "section must be an object", Severity::error});
      continue;
    }
    auto& fields = node.mutable_section(*section);
    for (auto f = it.value().begin(); f != it.value().end(); ++f) {
      auto path = field_path(*section, f.key());
      const FieldSpec* spec = schema.field(*section, f.key());
      if (!spec) {
        node.add_finding({Layer::syntactic, path, "unknown field '" + f.key() + "'", Severity::error});
        continue;
      }
      if (auto problem = Schema::type_problem(spec->type, f.value())) {
        node.add_finding({Layer::syntactic, path, *problem, Severity::error});
      }
      json value = f.value();
      if (spec->type == FieldType::version && value.is_string()) {
        try {
          value = SemanticVersion::parse(value.get<std::string>()).str();
        } catch (const VersionError&) {
        }
      }
      fields[f.key()] = std::move(value);
    }
  }
  return node;
}

ConfigNode parse_config(std::string_view raw, std::string_view level, const Schema& schema) {
  return parse_config(raw, parse_level(level), schema);
}

std::string serialize(const ConfigNode& node) { return node.to_json().dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// ResolvedConfig

const json* ResolvedConfig::find(std::string_view path) const {
  auto it = fields_.find(std::string(path));
  return it == fields_.end() ? nullptr : &it->second.value;
}

const json& ResolvedConfig::at(std::string_view path) const {
  if (const json* v = find(path)) return *v;
  throw NotFoundError("configuration field '" + std::string(path) + "' is not set");
}

Level ResolvedConfig::provenance(std::string_view path) const {
  auto it = fields_.find(std::string(path));
  if (it == fields_.end()) throw NotFoundError("configuration field '" + std::string(path) + "' is not set");
  return it->second.provenance;
}

std::optional<std::string> ResolvedConfig::get_string(std::string_view path) const {
  const json* v = find(path);
  if (!v || !v->is_string()) return std::nullopt;
  return v->get<std::string>();
}

std::optional<double> ResolvedConfig::get_number(std::string_view path) const {
  const json* v = find(path);
  if (!v || !v->is_number()) return std::nullopt;
  return v->get<double>();
}

std::optional<std::int64_t> ResolvedConfig::get_integer(std::string_view path) const {
  const json* v = find(path);
  if (!v || !v->is_number_integer()) return std::nullopt;
  return v->get<std::int64_t>();
}

std::optional<bool> ResolvedConfig::get_bool(std::string_view path) const {
  const json* v = find(path);
  if (!v || !v->is_boolean()) return std::nullopt;
  return v->get<bool>();
}

std::optional<std::vector<std::string>> ResolvedConfig::get_strings(std::string_view path) const {
  const json* v = find(path);
  if (!v || !is_list_of(*v, &json::is_string)) return std::nullopt;
  return v->get<std::vector<std::string>>();
}

std::optional<std::vector<std::int64_t>> ResolvedConfig::get_integers(std::string_view path) const {
  const json* v = find(path);
  if (!v || !is_list_of(*v, &json::is_number_integer)) return std::nullopt;
  return v->get<std::vector<std::int64_t>>();
}

namespace {
template <typename T>
T require_field(const std::optional<T>& value, std::string_view path, std::string_view what) {
  if (!value) {
    throw ConfigurationError("configuration field '" + std::string(path) + "' must be " + std::string(what));
  }
  return *value;
}
}  // namespace

std::string ResolvedConfig::string(std::string_view path) const {
  return require_field(get_string(path), path, "a string");
}
double ResolvedConfig::number(std::string_view path) const { return require_field(get_number(path), path, "a number"); }
std::int64_t ResolvedConfig::integer(std::string_view path) const {
  return require_field(get_integer(path), path, "an integer");
}
bool ResolvedConfig::boolean(std::string_view path) const { return require_field(get_bool(path), path, "a boolean"); }
std::vector<std::string> ResolvedConfig::strings(std::string_view path) const {
  return require_field(get_strings(path), path, "a list of strings");
}

SemanticVersion ResolvedConfig::version() const {
  auto v = get_string("config_metadata.version");
  if (!v) throw VersionError("config_metadata.version is not set");
  return SemanticVersion::parse(*v);
}

ConfigNode ResolvedConfig::as_node(Level level) const {
  ConfigNode node(level);
  for (const auto& [path, field] : fields_) {
    auto dot = path.find('.');
    auto section = section_from_name(std::string_view(path).substr(0, dot));
    if (!section) continue;
    node.mutable_section(*section)[path.substr(dot + 1)] = field.value;
  }
  return node;
}

ResolvedConfig resolve(const ConfigNode& publisher, const ConfigNode& imprint, const ConfigNode& title,
                       const Schema& schema) {
  if (publisher.level() != Level::publisher || imprint.level() != Level::imprint || title.level() != Level::title) {
    throw ContractError("resolve expects nodes tagged publisher, imprint, title (got " +
                        std::string(to_string(publisher.level())) + ", " + std::string(to_string(imprint.level())) +
                        ", " + std::string(to_string(title.level())) + ")");
  }
  std::map<std::string, ResolvedField> fields;
  // Least specific first so later levels overwrite.
  for (const ConfigNode* node : {&publisher, &imprint, &title}) {
    for (const auto& [section, section_fields] : node->sections()) {
      for (const auto& [name, value] : section_fields) {
        fields[field_path(section, name)] = ResolvedField{value, node->level()};
      }
    }
  }
  std::vector<std::string> missing;
  for (const auto& path : schema.required_paths()) {
    if (!fields.count(path)) missing.push_back(path);
  }
  if (!missing.empty()) throw ResolutionError(std::move(missing));

  std::vector<Finding> carried;
  for (const ConfigNode* node : {&publisher, &imprint, &title}) {
    for (auto f : node->findings()) {
      f.path = std::string(to_string(node->level())) + ":" + f.path;
      carried.push_back(std::move(f));
    }
  }
  return ResolvedConfig(std::move(fields), std::move(carried));
}

// ---------------------------------------------------------------------------
// Business rules

namespace {

Condition::Op parse_op(const std::string& op) {
  static const std::map<std::string, Condition::Op> ops = {
      {"equals", Condition::Op::equals},     {"not_equals", Condition::Op::not_equals},
      {"matches", Condition::Op::matches},   {"not_matches", Condition::Op::not_matches},
      {"contains", Condition::Op::contains}, {"not_contains", Condition::Op::not_contains},
      {"is_true", Condition::Op::is_true},   {"is_false", Condition::Op::is_false},
  };
  auto it = ops.find(op);
  if (it == ops.end()) throw ConfigurationError("business rule uses unknown op '" + op + "'");
  return it->second;
}

Condition parse_condition(const json& doc, const std::string& rule_id) {
  if (!doc.is_object() || !doc.contains("path") || !doc.contains("op")) {
    throw ConfigurationError("business rule '" + rule_id + "' has a condition without path/op");
  }
  Condition c;
  c.path = doc.at("path").get<std::string>();
  c.op = parse_op(doc.at("op").get<std::string>());
  if (doc.contains("value")) c.value = doc.at("value").get<std::string>();
  if (doc.contains("value_from")) c.value_from = doc.at("value_from").get<std::string>();
  c.icase = doc.value("icase", false);
  bool needs_operand = c.op != Condition::Op::is_true && c.op != Condition::Op::is_false;
  if (needs_operand && !c.value && !c.value_from) {
    throw ConfigurationError("business rule '" + rule_id + "' condition on '" + c.path + "' needs a value");
  }
  return c;
}

// nullopt: the condition does not apply (a referenced field is absent or not a scalar).
std::optional<bool> evaluate(const Condition& c, const ResolvedConfig& cfg) {
  const json* subject = cfg.find(c.path);
  if (!subject) return std::nullopt;
  if (c.op == Condition::Op::is_true || c.op == Condition::Op::is_false) {
    if (!subject->is_boolean()) return std::nullopt;
    return subject->get<bool>() == (c.op == Condition::Op::is_true);
  }
  if (!subject->is_string()) return std::nullopt;
  std::string lhs = subject->get<std::string>();
  std::string rhs;
  if (c.value_from) {
    auto other = cfg.get_string(*c.value_from);
    if (!other) return std::nullopt;
    rhs = *other;
  } else {
    rhs = *c.value;
  }
  if (c.icase) {
    lhs = text::to_lower_ascii(lhs);
    rhs = text::to_lower_ascii(rhs);
  }
  switch (c.op) {
    case Condition::Op::equals: return lhs == rhs;
    case Condition::Op::not_equals: return lhs != rhs;
    case Condition::Op::contains: return lhs.find(rhs) != std::string::npos;
    case Condition::Op::not_contains: return lhs.find(rhs) == std::string::npos;
    case Condition::Op::matches:
    case Condition::Op::not_matches: {
      bool found = std::regex_search(lhs, std::regex(rhs));
      return c.op == Condition::Op::matches ? found : !found;
    }
    default: return std::nullopt;
  }
}

}  // namespace

RuleSet RuleSet::from_json(const json& doc) {
  std::vector<BusinessRule> rules;
  if (!doc.contains("rules") || !doc["rules"].is_array()) throw ConfigurationError("rule set needs a 'rules' array");
  for (const auto& r : doc["rules"]) {
    BusinessRule rule;
    rule.id = r.at("id").get<std::string>();
    rule.path = r.value("path", std::string());
    rule.message = r.value("message", rule.id);
    auto severity = r.value("severity", std::string("error"));
    if (severity != "error" && severity != "warning") {
      throw ConfigurationError("business rule '" + rule.id + "' has unknown severity '" + severity + "'");
    }
    rule.severity = severity == "error" ? Severity::error : Severity::warning;
    if (r.contains("when")) rule.when = parse_condition(r["when"], rule.id);
    if (!r.contains("require")) throw ConfigurationError("business rule '" + rule.id + "' has no 'require'");
    rule.require = parse_condition(r["require"], rule.id);
    if (rule.path.empty()) rule.path = rule.require.path;
    // Surface bad patterns when the rule set loads, not at validation time.
    for (const Condition* c : {rule.when ? &*rule.when : nullptr, &rule.require}) {
      if (c && (c->op == Condition::Op::matches || c->op == Condition::Op::not_matches) && c->value) {
        try {
          std::regex check(*c->value);
        } catch (const std::regex_error&) {
          throw ConfigurationError("business rule '" + rule.id + "' has an invalid pattern");
        }
      }
    }
    rules.push_back(std::move(rule));
  }
  return RuleSet(std::move(rules));
}

RuleSet RuleSet::parse(std::string_view raw) {
  try {
    return from_json(json::parse(raw.begin(), raw.end()));
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("rule set is malformed: ") + e.what());
  }
}

RuleSet RuleSet::builtin() { return parse(data::file("business_rules.json")); }

// ---------------------------------------------------------------------------
// Validation

namespace {

void syntactic_layer(const ResolvedConfig& cfg, const Schema& schema, ValidationReport& report) {
  std::set<std::pair<std::string, std::string>> seen;
  auto add = [&](Finding f) {
    if (seen.insert({f.path, f.message}).second) report.add(std::move(f));
  };
  for (const auto& f : cfg.carried_findings()) add(f);
  for (const auto& [path, field] : cfg.fields()) {
    auto dot = path.find('.');
    auto section = section_from_name(std::string_view(path).substr(0, dot));
    const FieldSpec* spec = section ? schema.field(*section, std::string_view(path).substr(dot + 1)) : nullptr;
    if (!spec) {
      add({Layer::syntactic, path, "field is not in the schema", Severity::error});
      continue;
    }
    if (auto problem = Schema::type_problem(spec->type, field.value)) {
      // The carried copy of the same problem is prefixed with its level.
      std::string carried_path = std::string(to_string(field.provenance)) + ":" + path;
      if (!seen.count({carried_path, *problem})) add({Layer::syntactic, path, *problem, Severity::error});
    }
  }
}

class SemanticChecker {
 public:
  SemanticChecker(const ResolvedConfig& cfg, ValidationReport& report) : cfg_(cfg), report_(report) {}

  void error(const std::string& path, const std::string& message) {
    report_.add(Layer::semantic, path, message, Severity::error);
  }

  void range(const std::string& path, double lo, double hi) {
    if (auto v = cfg_.get_number(path); v && (*v < lo || *v > hi)) {
      error(path, text::format_number(*v) + " out of range [" + text::format_number(lo) + "," +
                      text::format_number(hi) + "]");
    }
  }

  void at_least(const std::string& path, double lo) {
    if (auto v = cfg_.get_number(path); v && *v < lo) {
      error(path, text::format_number(*v) + " must be at least " + text::format_number(lo));
    }
  }

  void one_of(const std::string& path, std::initializer_list<std::string_view> allowed, bool icase) {
    auto v = cfg_.get_string(path);
    if (!v) return;
    std::string s = icase ? text::to_lower_ascii(*v) : *v;
    for (auto a : allowed) {
      if (s == a) return;
    }
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    error(path, "'" + *v + "' is not one of: " + list);
  }

  void pattern(const std::string& path, const std::regex& re, const std::string& description) {
    if (auto v = cfg_.get_string(path); v && !std::regex_match(*v, re)) {
      error(path, "'" + *v + "' is not " + description);
    }
  }

  void run() {
    range("pricing.wholesale_discount_pct", 0, 100);
    at_least("pricing.markup_pct", 0);
    at_least("pricing.base_cost", 0);
    one_of("pricing.markup_convention", {"cost_plus", "multiplier"}, false);
    if (auto markets = cfg_.get_strings("pricing.markets")) {
      std::set<std::string> unique;
      if (markets->empty()) error("pricing.markets", "at least one market is required");
      for (const auto& m : *markets) {
        if (m.empty()) error("pricing.markets", "market codes must be non-empty");
        if (!unique.insert(m).second) error("pricing.markets", "market '" + m + "' is listed twice");
      }
    }
    if (const json* discounts = cfg_.find("pricing.market_discounts"); discounts && discounts->is_object()) {
      for (auto it = discounts->begin(); it != discounts->end(); ++it) {
        std::string path = "pricing.market_discounts." + it.key();
        if (!it.value().is_number()) {
          error(path, "expected a number");
        } else if (double d = it.value().get<double>(); d < 0 || d > 100) {
          error(path, text::format_number(d) + " out of range [0,100]");
        }
      }
    }

    range("llm_config.temperature", 0, 2);
    if (auto models = cfg_.get_strings("llm_config.preferred_models")) {
      if (models->empty()) error("llm_config.preferred_models", "at least one model is required");
      for (const auto& m : *models) {
        if (text::trim(m).empty()) error("llm_config.preferred_models", "model identifiers must be non-empty");
      }
    }
    if (const json* max_tokens = cfg_.find("llm_config.max_tokens"); max_tokens && max_tokens->is_object()) {
      for (auto it = max_tokens->begin(); it != max_tokens->end(); ++it) {
        std::string path = "llm_config.max_tokens." + it.key();
        if (it.key() != "creative" && it.key() != "analytical" && it.key() != "critical") {
          error(path, "unknown task kind");
        } else if (!it.value().is_number_integer() || it.value().get<std::int64_t>() <= 0) {
          error(path, "must be a positive integer");
        }
      }
    }

    static const std::regex trim(R"(^[0-9]+(\.[0-9]+)?x[0-9]+(\.[0-9]+)?$)");
    pattern("book_defaults.trim_size", trim, "a WIDTHxHEIGHT trim size in inches");
    one_of("book_defaults.binding_type", {"paperback", "hardcover"}, true);
    one_of("publisher_persona.risk_tolerance", {"low", "medium", "high"}, true);
    if (const json* traits = cfg_.find("publisher_persona.traits"); traits && traits->is_object()) {
      for (auto it = traits->begin(); it != traits->end(); ++it) {
        std::string path = "publisher_persona.traits." + it.key();
        static const std::set<std::string> known = {"patience", "openness", "nuance_appreciation",
                                                    "intellectual_rigor"};
        if (!known.count(it.key())) {
          error(path, "unknown trait");
        } else if (!it.value().is_number() || it.value().get<double>() < 0 || it.value().get<double>() > 1) {
          error(path, "trait must be a number in [0,1]");
        }
      }
    }
    for (auto role : {"body", "heading", "korean", "quotations", "mnemonics"}) {
      std::string path = std::string("typography.") + role;
      if (const json* font = cfg_.find(path); font && font->is_object() && font->contains("source")) {
        const auto& source = (*font)["source"];
        if (!source.is_string() || (source != "adobe" && source != "google" && source != "local")) {
          error(path + ".source", "font source must be adobe, google or local");
        }
      }
    }
    if (const json* colors = cfg_.find("branding.brand_colors"); colors && colors->is_object()) {
      static const std::regex hex("^#[0-9A-Fa-f]{6}$");
      for (auto it = colors->begin(); it != colors->end(); ++it) {
        if (!it.value().is_string() || !std::regex_match(it.value().get<std::string>(), hex)) {
          error("branding.brand_colors." + it.key(), "expected a #RRGGBB color");
        }
      }
    }

    at_least("production.dpi", 1);
    at_least("wizard.catalog_size", 1);
    at_least("academic_paper.target_word_count", 1);
    at_least("workflow.batch_size", 1);
    at_least("workflow.review_top_k", 1);
    range("workflow.duplicate_threshold", 0, 1);
    at_least("codex_types.quotation_count", 1);
    if (auto enabled = cfg_.get_strings("codex_types.enabled")) {
      for (const auto& t : *enabled) {
        if (t != "standard" && t != "textbook" && t != "reference" && t != "pilsa") {
          error("codex_types.enabled", "unknown codex type '" + t + "'");
        }
      }
    }
    one_of("automation.frequency", {"daily", "weekly", "monthly", "quarterly", "biannual", "annual"}, true);
    if (auto triggers = cfg_.get_integers("automation.milestone_triggers")) {
      for (std::size_t i = 0; i < triggers->size(); ++i) {
        if ((*triggers)[i] <= 0 || (i > 0 && (*triggers)[i] <= (*triggers)[i - 1])) {
          error("automation.milestone_triggers", "book-count milestones must be positive and strictly increasing");
          break;
        }
      }
    }
    if (auto anniversaries = cfg_.get_strings("automation.anniversary_triggers")) {
      static const std::regex years("^[1-9][0-9]*_years?$");
      for (const auto& a : *anniversaries) {
        if (!std::regex_match(a, years)) error("automation.anniversary_triggers", "'" + a + "' is not N_year(s)");
      }
    }
    if (auto isbn = cfg_.get_string("metadata.isbn"); isbn && !text::is_valid_isbn(*isbn)) {
      error("metadata.isbn", "'" + *isbn + "' fails ISBN check-digit validation");
    }
  }

 private:
  const ResolvedConfig& cfg_;
  ValidationReport& report_;
};

void business_layer(const ResolvedConfig& cfg, const RuleSet& rules, ValidationReport& report) {
  for (const auto& rule : rules.rules()) {
    if (rule.when) {
      auto applies = evaluate(*rule.when, cfg);
      if (!applies || !*applies) continue;
    }
    auto satisfied = evaluate(rule.require, cfg);
    if (satisfied && !*satisfied) {
      report.add(Layer::business_rule, rule.path, rule.message + " [" + rule.id + "]", rule.severity);
    }
  }
}

}  // namespace

ValidationReport validate(const ResolvedConfig& cfg, const RuleSet& rules, const Schema& schema) {
  ValidationReport report;
  syntactic_layer(cfg, schema, report);
  SemanticChecker(cfg, report).run();
  business_layer(cfg, rules, report);
  return report;
}

// ---------------------------------------------------------------------------
// Versioning

ChangeKind parse_change_kind(std::string_view name) {
  if (name == "structural" || name == "major") return ChangeKind::structural;
  if (name == "feature" || name == "minor") return ChangeKind::feature;
  if (name == "fix" || name == "patch") return ChangeKind::fix;
  throw UsageError("unknown change kind '" + std::string(name) + "' (expected structural, feature or fix)");
}

SemanticVersion bump(SemanticVersion v, ChangeKind change) {
  switch (change) {
    case ChangeKind::structural: return {v.major + 1, 0, 0};
    case ChangeKind::feature: return {v.major, v.minor + 1, 0};
    case ChangeKind::fix: return {v.major, v.minor, v.patch + 1};
  }
  return v;
}

SemanticVersion bump_version(const ResolvedConfig& cfg, ChangeKind change) { return bump(cfg.version(), change); }

}  // namespace imprint::config
