#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace imprint {

using ProposalId = std::string;

enum class ProposalStatus { candidate, flagged, approved, needs_modification, returned_for_refinement, rejected, archived };
enum class DecisionAction { approve, request_modifications, return_for_refinement, reject };

std::string_view to_string(ProposalStatus status);
ProposalStatus parse_proposal_status(std::string_view name);
std::string_view to_string(DecisionAction action);
DecisionAction parse_decision_action(std::string_view name);
ProposalStatus status_after(DecisionAction action);

struct BookProposal {
  ProposalId id;
  std::string working_title;
  std::string abstract;
  std::string target_audience;
  std::string estimated_scope;
  std::vector<std::string> outline;
  std::string origin_cycle;
  ProposalStatus status = ProposalStatus::candidate;

  bool operator==(const BookProposal&) const = default;
};

// Throws ContractError when the title or abstract is empty.
void check_proposal(const BookProposal& proposal);

struct EditorialDecision {
  ProposalId proposal_id;
  DecisionAction action = DecisionAction::approve;
  std::string feedback;
  std::string actor;
  std::string timestamp;

  bool operator==(const EditorialDecision&) const = default;
};

// Matchup criteria, in the order they are presented to the evaluator.
struct Criterion {
  std::string_view key;
  std::string_view label;
};

inline constexpr std::array<Criterion, 5> kCriteria = {{
    {"scholarly_contribution", "scholarly contribution"},
    {"market_viability", "market viability"},
    {"philosophy_alignment", "alignment with the imprint's philosophy"},
    {"resource_requirements", "resource requirements"},
    {"potential_impact", "potential impact"},
}};

// "a, b, c, d, and e" over the criterion labels.
std::string criteria_sentence();

void to_json(nlohmann::json& j, const BookProposal& p);
void from_json(const nlohmann::json& j, BookProposal& p);
void to_json(nlohmann::json& j, const EditorialDecision& d);
void from_json(const nlohmann::json& j, EditorialDecision& d);

}  // namespace imprint
