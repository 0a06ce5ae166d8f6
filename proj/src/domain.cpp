#include <array>

#include "imprint/errors.hpp"
#include "imprint/proposal.hpp"
#include "imprint/task.hpp"

namespace imprint {

namespace {

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::string_view, N>& names, std::string_view name, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  throw UsageError("unknown " + std::string(what) + " '" + std::string(name) + "'");
}

constexpr std::array<std::string_view, 3> kTaskKinds = {"creative", "analytical", "critical"};
constexpr std::array<std::string_view, 7> kStatuses = {
    "candidate", "flagged", "approved", "needs_modification", "returned_for_refinement", "rejected", "archived"};
constexpr std::array<std::string_view, 4> kActions = {"approve", "request_modifications", "return_for_refinement",
                                                      "reject"};

}  // namespace

std::string_view to_string(TaskKind kind) { return kTaskKinds.at(static_cast<std::size_t>(kind)); }
TaskKind parse_task_kind(std::string_view name) { return lookup<TaskKind>(kTaskKinds, name, "task kind"); }

std::string_view to_string(ProposalStatus status) { return kStatuses.at(static_cast<std::size_t>(status)); }
ProposalStatus parse_proposal_status(std::string_view name) {
  return lookup<ProposalStatus>(kStatuses, name, "proposal status");
}
std::string_view to_string(DecisionAction action) { return kActions.at(static_cast<std::size_t>(action)); }
DecisionAction parse_decision_action(std::string_view name) {
  return lookup<DecisionAction>(kActions, name, "decision action");
}

ProposalStatus status_after(DecisionAction action) {
  switch (action) {
    case DecisionAction::approve: return ProposalStatus::approved;
    case DecisionAction::request_modifications: return ProposalStatus::needs_modification;
    case DecisionAction::return_for_refinement: return ProposalStatus::returned_for_refinement;
    case DecisionAction::reject: return ProposalStatus::rejected;
  }
  return ProposalStatus::candidate;
}

void check_proposal(const BookProposal& p) {
  if (p.working_title.empty()) throw ContractError("proposal '" + p.id + "' has an empty working title");
  if (p.abstract.empty()) throw ContractError("proposal '" + p.id + "' has an empty abstract");
}

std::string criteria_sentence() {
  std::string out;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (i > 0) out += (i + 1 == kCriteria.size()) ? ", and " : ", ";
    out += kCriteria[i].label;
  }
  return out;
}

void to_json(nlohmann::json& j, const BookProposal& p) {
  j = {{"id", p.id},
       {"working_title", p.working_title},
       {"abstract", p.abstract},
       {"target_audience", p.target_audience},
       {"estimated_scope", p.estimated_scope},
       {"outline", p.outline},
       {"origin_cycle", p.origin_cycle},
       {"status", std::string(to_string(p.status))}};
}

void from_json(const nlohmann::json& j, BookProposal& p) {
  p.id = j.value("id", std::string());
  p.working_title = j.at("working_title").get<std::string>();
  p.abstract = j.at("abstract").get<std::string>();
  p.target_audience = j.value("target_audience", std::string());
  p.estimated_scope = j.value("estimated_scope", std::string());
  p.outline = j.value("outline", std::vector<std::string>{});
  p.origin_cycle = j.value("origin_cycle", std::string());
  p.status = parse_proposal_status(j.value("status", std::string("candidate")));
}

void to_json(nlohmann::json& j, const EditorialDecision& d) {
  j = {{"proposal_id", d.proposal_id},
       {"action", std::string(to_string(d.action))},
       {"feedback", d.feedback},
       {"actor", d.actor},
       {"timestamp", d.timestamp}};
}

void from_json(const nlohmann::json& j, EditorialDecision& d) {
  d.proposal_id = j.at("proposal_id").get<std::string>();
  d.action = parse_decision_action(j.at("action").get<std::string>());
  d.feedback = j.value("feedback", std::string());
  d.actor = j.value("actor", std::string());
  d.timestamp = j.value("timestamp", std::string());
}

}  // namespace imprint
