#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imprint/config.hpp"
#include "imprint/proposal.hpp"
#include "imprint/task.hpp"

namespace imprint::persona {

enum class RiskTolerance { low, medium, high };

std::string_view to_string(RiskTolerance risk);
// Case-insensitive; throws ContractError otherwise.
RiskTolerance parse_risk_tolerance(std::string_view name);

struct Traits {
  double patience = 0.5;
  double openness = 0.5;
  double nuance_appreciation = 0.5;
  double intellectual_rigor = 0.5;

  bool operator==(const Traits&) const = default;

  static bool is_trait(std::string_view name);
  double get(std::string_view name) const;
  void set(std::string_view name, double value);
};

struct PublisherPersona {
  std::string name;
  std::string backstory;
  RiskTolerance risk_tolerance = RiskTolerance::medium;
  std::string decision_style;
  std::vector<std::string> hobby_horses;
  std::string editorial_philosophy;
  Traits traits;

  bool operator==(const PublisherPersona&) const = default;

  // Throws ContractError for an empty name or a trait outside [0,1].
  void check() const;
  // Reads the publisher_persona section of a resolved configuration.
  static PublisherPersona from_config(const config::ResolvedConfig& cfg);
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  TaskKind task_kind = TaskKind::creative;

  bool operator==(const PromptBundle&) const = default;
};

// Task payloads. Each accepts only the task kinds listed next to it.
struct GenerationPayload {  // creative
  int count = 0;
  std::string imprint;
  std::vector<std::string> genres;
  std::string audience;
  std::vector<std::string> avoid;  // one line per rejected proposal
};

struct MatchupPayload {  // critical, analytical
  BookProposal a;
  BookProposal b;
};

struct ReviewPayload {  // analytical, critical
  std::string manuscript;
};

struct VerificationPayload {  // analytical, critical
  std::string quotation;
  std::string author;
  std::string source_work;
  std::string citation;
};

using Payload = std::variant<GenerationPayload, MatchupPayload, ReviewPayload, VerificationPayload>;

// Named text templates with `{slot}` placeholders (data/templates/*.txt).
class PromptTemplates {
 public:
  static const PromptTemplates& builtin();
  // Files named <template>.txt in `dir` replace the built-in template of that name.
  static PromptTemplates with_overrides(const std::string& dir);

  const std::string& get(const std::string& name) const;

 private:
  std::map<std::string, std::string> templates_;
};

// Pure: identical inputs give byte-identical bundles. Throws ContractError when
// the payload does not belong to `kind`.
PromptBundle assemble_prompt(const PublisherPersona& persona, TaskKind kind, const Payload& payload,
                             const PromptTemplates& templates = PromptTemplates::builtin());

// Per-decision trait targets, loaded from data/trait_signals.json.
struct SignalMapping {
  double alpha = 0.1;
  std::map<DecisionAction, std::map<std::string, double>> signals;

  static const SignalMapping& builtin();
  static SignalMapping from_json(const nlohmann::json& doc);
};

// Moves each mapped trait toward its signal by an exponential moving average,
// one decision at a time: t <- t + alpha * (signal - t). Throws ContractError
// for an empty decision list or alpha outside [0,1].
PublisherPersona update_traits(const PublisherPersona& persona, std::span<const EditorialDecision> decisions,
                               double alpha, const SignalMapping& mapping = SignalMapping::builtin());
PublisherPersona update_traits(const PublisherPersona& persona, std::span<const EditorialDecision> decisions,
                               const SignalMapping& mapping = SignalMapping::builtin());

}  // namespace imprint::persona
