#include "imprint/persona.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imprint/embedded_data.hpp"
#include "imprint/errors.hpp"
#include "imprint/text.hpp"

namespace imprint::persona {

std::string_view to_string(RiskTolerance risk) {
  switch (risk) {
    case RiskTolerance::low: return "low";
    case RiskTolerance::medium: return "medium";
    case RiskTolerance::high: return "high";
  }
  return "?";
}

RiskTolerance parse_risk_tolerance(std::string_view name) {
  auto lower = text::to_lower_ascii(name);
  if (lower == "low") return RiskTolerance::low;
  if (lower == "medium") return RiskTolerance::medium;
  if (lower == "high") return RiskTolerance::high;
  throw ContractError("unknown risk tolerance '" + std::string(name) + "'");
}

bool Traits::is_trait(std::string_view name) {
  return name == "patience" || name == "openness" || name == "nuance_appreciation" || name == "intellectual_rigor";
}

double Traits::get(std::string_view name) const {
  if (name == "patience") return patience;
  if (name == "openness") return openness;
  if (name == "nuance_appreciation") return nuance_appreciation;
  if (name == "intellectual_rigor") return intellectual_rigor;
  throw ContractError("unknown trait '" + std::string(name) + "'");
}

void Traits::set(std::string_view name, double value) {
  if (name == "patience") {
    patience = value;
  } else if (name == "openness") {
    openness = value;
  } else if (name == "nuance_appreciation") {
    nuance_appreciation = value;
  } else if (name == "intellectual_rigor") {
    intellectual_rigor = value;
  } else {
    throw ContractError("unknown trait '" + std::string(name) + "'");
  }
}

void PublisherPersona::check() const {
  if (text::trim(name).empty()) throw ContractError("persona name must be non-empty");
  for (auto t : {"patience", "openness", "nuance_appreciation", "intellectual_rigor"}) {
    double v = traits.get(t);
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string("persona trait ") + t + " is outside [0,1]");
  }
}

PublisherPersona PublisherPersona::from_config(const config::ResolvedConfig& cfg) {
  PublisherPersona p;
  p.name = cfg.string("publisher_persona.persona_name");
  p.risk_tolerance = parse_risk_tolerance(cfg.string("publisher_persona.risk_tolerance"));
  p.editorial_philosophy = cfg.string("publisher_persona.editorial_philosophy");
  p.backstory = cfg.get_string("publisher_persona.backstory").value_or("");
  p.decision_style = cfg.get_string("publisher_persona.decision_style").value_or("");
  p.hobby_horses = cfg.get_strings("publisher_persona.hobby_horses").value_or(std::vector<std::string>{});
  if (const auto* traits = cfg.find("publisher_persona.traits"); traits && traits->is_object()) {
    for (auto it = traits->begin(); it != traits->end(); ++it) {
      if (Traits::is_trait(it.key()) && it.value().is_number()) p.traits.set(it.key(), it.value().get<double>());
    }
  }
  p.check();
  return p;
}

// ---------------------------------------------------------------------------
// Templates

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = [] {
    PromptTemplates t;
    for (auto name : data::names()) {
      constexpr std::string_view prefix = "templates/";
      if (name.substr(0, prefix.size()) != prefix || name.size() < prefix.size() + 4) continue;
      auto stem = name.substr(prefix.size(), name.size() - prefix.size() - 4);
      t.templates_[std::string(stem)] = std::string(data::file(name));
    }
    return t;
  }();
  return templates;
}

PromptTemplates PromptTemplates::with_overrides(const std::string& dir) {
  PromptTemplates t = builtin();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    t.templates_[entry.path().stem().string()] = body.str();
  }
  return t;
}

const std::string& PromptTemplates::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigurationError("no prompt template named '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

std::string system_text(const PublisherPersona& p, const PromptTemplates& templates) {
  std::string backstory_block;
  if (!p.backstory.empty()) backstory_block = text::render_template(templates.get("backstory_block"), {{"backstory", p.backstory}});
  std::string topics_block;
  if (!p.hobby_horses.empty()) {
    topics_block = text::render_template(templates.get("topics_block"), {{"topics", text::join(p.hobby_horses, "; ")}});
  }
  return text::render_template(templates.get("system"),
                               {{"persona_name", p.name},
                                {"backstory_block", backstory_block},
                                {"philosophy", p.editorial_philosophy},
                                {"risk_tolerance", std::string(to_string(p.risk_tolerance))},
                                {"decision_style", p.decision_style.empty() ? "unspecified" : p.decision_style},
                                {"patience", text::format_decimal(p.traits.patience, 2)},
                                {"openness", text::format_decimal(p.traits.openness, 2)},
                                {"nuance_appreciation", text::format_decimal(p.traits.nuance_appreciation, 2)},
                                {"intellectual_rigor", text::format_decimal(p.traits.intellectual_rigor, 2)},
                                {"topics_block", topics_block}});
}

void require_kind(TaskKind kind, std::initializer_list<TaskKind> allowed, std::string_view payload) {
  if (std::find(allowed.begin(), allowed.end(), kind) == allowed.end()) {
    throw ContractError(std::string(payload) + " payload cannot be used for a " + std::string(to_string(kind)) +
                        " task");
  }
}

void add_proposal_slots(std::map<std::string, std::string>& slots, const std::string& prefix, const BookProposal& p) {
  slots[prefix + "id"] = p.id;
  slots[prefix + "title"] = p.working_title;
  slots[prefix + "abstract"] = p.abstract;
  slots[prefix + "audience"] = p.target_audience;
  slots[prefix + "scope"] = p.estimated_scope;
  slots[prefix + "outline"] = text::join(p.outline, "; ");
}

struct UserText {
  TaskKind kind;
  const PromptTemplates& templates;

  std::string operator()(const GenerationPayload& g) const {
    require_kind(kind, {TaskKind::creative}, "generation");
    if (g.count <= 0) throw ContractError("generation payload needs a positive count");
    std::string avoid_block;
    if (!g.avoid.empty()) {
      std::string lines;
      for (const auto& a : g.avoid) lines += "- " + a + "\n";
      lines.pop_back();
      avoid_block = text::render_template(templates.get("avoid_block"), {{"avoid", lines}});
    }
    return text::render_template(templates.get("generation"), {{"count", std::to_string(g.count)},
                                                                {"imprint", g.imprint},
                                                                {"genres", text::join(g.genres, ", ")},
                                                                {"audience", g.audience},
                                                                {"avoid_block", avoid_block}});
  }

  std::string operator()(const MatchupPayload& m) const {
    require_kind(kind, {TaskKind::critical, TaskKind::analytical}, "matchup");
    std::map<std::string, std::string> slots;
    add_proposal_slots(slots, "a_", m.a);
    add_proposal_slots(slots, "b_", m.b);
    slots["criteria"] = criteria_sentence();
    std::vector<std::string> keys;
    for (const auto& c : kCriteria) keys.emplace_back(c.key);
    slots["criteria_keys"] = text::join(keys, ", ");
    return text::render_template(templates.get("matchup"), slots);
  }

  std::string operator()(const ReviewPayload& r) const {
    require_kind(kind, {TaskKind::analytical, TaskKind::critical}, "review");
    return text::render_template(templates.get("review"), {{"manuscript", r.manuscript}});
  }

  std::string operator()(const VerificationPayload& v) const {
    require_kind(kind, {TaskKind::analytical, TaskKind::critical}, "verification");
    return text::render_template(templates.get("verification"), {{"quotation", v.quotation},
                                                                  {"author", v.author},
                                                                  {"source_work", v.source_work},
                                                                  {"citation", v.citation}});
  }
};

}  // namespace

PromptBundle assemble_prompt(const PublisherPersona& persona, TaskKind kind, const Payload& payload,
                             const PromptTemplates& templates) {
  persona.check();
  PromptBundle bundle;
  bundle.task_kind = kind;
  bundle.user_text = std::visit(UserText{kind, templates}, payload);
  bundle.system_text = system_text(persona, templates);
  return bundle;
}

// ---------------------------------------------------------------------------
// Trait evolution

const SignalMapping& SignalMapping::builtin() {
  static const SignalMapping mapping = from_json(nlohmann::json::parse(data::file("trait_signals.json")));
  return mapping;
}

SignalMapping SignalMapping::from_json(const nlohmann::json& doc) {
  SignalMapping m;
  m.alpha = doc.value("alpha", 0.1);
  for (auto it = doc.at("signals").begin(); it != doc.at("signals").end(); ++it) {
    auto action = parse_decision_action(it.key());
    for (auto t = it.value().begin(); t != it.value().end(); ++t) {
      if (!Traits::is_trait(t.key())) throw ConfigurationError("signal mapping names unknown trait '" + t.key() + "'");
      double signal = t.value().get<double>();
      if (signal < 0.0 || signal > 1.0) throw ConfigurationError("trait signals must lie in [0,1]");
      m.signals[action][t.key()] = signal;
    }
  }
  return m;
}

PublisherPersona update_traits(const PublisherPersona& persona, std::span<const EditorialDecision> decisions,
                               double alpha, const SignalMapping& mapping) {
  if (decisions.empty()) throw ContractError("update_traits needs at least one decision");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("smoothing factor must lie in [0,1]");
  PublisherPersona out = persona;
  for (const auto& decision : decisions) {
    auto it = mapping.signals.find(decision.action);
    if (it == mapping.signals.end()) continue;
    for (const auto& [trait, signal] : it->second) {
      double current = out.traits.get(trait);
      out.traits.set(trait, std::clamp(current + alpha * (signal - current), 0.0, 1.0));
    }
  }
  return out;
}

PublisherPersona update_traits(const PublisherPersona& persona, std::span<const EditorialDecision> decisions,
                               const SignalMapping& mapping) {
  return update_traits(persona, decisions, mapping.alpha, mapping);
}

}  // namespace imprint::persona
