#include <algorithm>
#include <cstdio>

#include "imprint/ideation.hpp"
#include "imprint/text.hpp"

namespace imprint::ideation {

void to_json(nlohmann::json& j, const ProjectRecord& p) {
  j = {{"project_id", p.project_id}, {"proposal_id", p.proposal_id}, {"week", p.week}};
}

void from_json(const nlohmann::json& j, ProjectRecord& p) {
  p.project_id = j.at("project_id").get<std::string>();
  p.proposal_id = j.at("proposal_id").get<std::string>();
  p.week = j.at("week").get<int>();
}

ProposalArchive ProposalArchive::replay(const std::vector<nlohmann::json>& events) {
  ProposalArchive archive;
  for (const auto& e : events) archive.apply(e);
  return archive;
}

void ProposalArchive::emit(nlohmann::json event) {
  apply(event);
  if (sink_) sink_(events_.back());
}

void ProposalArchive::apply(const nlohmann::json& event) {
  if (!event.is_object() || !event.contains("type")) throw StoreError("event without a type: " + event.dump());
  const auto type = event["type"].get<std::string>();
  try {
    if (type == "proposal_added") {
      auto p = event.at("proposal").get<BookProposal>();
      proposals_[p.id] = p;
    } else if (type == "tournament_recorded") {
      tournaments_.push_back(event.at("result").get<TournamentResult>());
    } else if (type == "review_flagged") {
      for (const auto& id : event.at("flagged")) proposals_.at(id.get<std::string>()).status = ProposalStatus::flagged;
      for (const auto& id : event.at("archived")) proposals_.at(id.get<std::string>()).status = ProposalStatus::archived;
      const auto tid = event.at("tournament_id").get<std::string>();
      for (const auto& e : event.value("entries", nlohmann::json::array())) {
        reviews_[e.at("id").get<std::string>()] = {tid, e.at("rank").get<int>(), e.at("rationale").get<std::string>()};
      }
    } else if (type == "decision_recorded") {
      auto d = event.at("decision").get<EditorialDecision>();
      proposals_.at(d.proposal_id).status = status_after(d.action);
      decisions_.push_back(std::move(d));
    } else if (type == "project_assigned") {
      projects_.push_back(event.at("project").get<ProjectRecord>());
    } else {
      throw StoreError("unknown event type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw StoreError("malformed " + type + " event: " + e.what());
  } catch (const std::out_of_range& e) {
    throw StoreError(type + " event references an unknown proposal");
  }
  events_.push_back(event);
}

void ProposalArchive::add_proposal(const BookProposal& proposal) {
  check_proposal(proposal);
  if (proposal.id.empty()) throw ContractError("proposal id must be non-empty");
  if (contains(proposal.id)) throw ContractError("proposal id already in the archive: " + proposal.id);
  emit({{"type", "proposal_added"}, {"proposal", proposal}});
}

void ProposalArchive::record_tournament(const TournamentResult& result) {
  for (const auto& id : result.bracket.entrants) {
    if (!contains(id)) throw NotFoundError("tournament entrant not in the archive: " + id);
  }
  for (const auto& t : tournaments_) {
    if (t.id == result.id) throw ContractError("tournament already recorded: " + result.id);
  }
  emit({{"type", "tournament_recorded"}, {"result", result}});
}

void ProposalArchive::apply_review(const ReviewPacket& packet) {
  const auto& result = tournament(packet.tournament_id);
  std::set<ProposalId> flagged;
  for (const auto& e : packet.entries) flagged.insert(e.proposal.id);
  nlohmann::json archived = nlohmann::json::array();
  for (const auto& id : result.ranked_ids()) {
    if (!flagged.count(id) && proposal(id).status == ProposalStatus::candidate) archived.push_back(id);
  }
  nlohmann::json flagged_ids = nlohmann::json::array();
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : packet.entries) {
    if (!contains(e.proposal.id)) throw NotFoundError("flagged proposal not in the archive: " + e.proposal.id);
    flagged_ids.push_back(e.proposal.id);
    entries.push_back({{"id", e.proposal.id}, {"rank", e.rank}, {"rationale", e.rationale}});
  }
  emit({{"type", "review_flagged"}, {"tournament_id", packet.tournament_id}, {"flagged", flagged_ids},
        {"archived", archived}, {"entries", entries}});
}

void ProposalArchive::record_decision(const EditorialDecision& decision) {
  if (!contains(decision.proposal_id)) throw NotFoundError("no proposal with id " + decision.proposal_id);
  if (text::trim(decision.actor).empty()) throw ContractError("a decision needs a named actor");
  if (decision.action != DecisionAction::approve && text::trim(decision.feedback).empty()) {
    throw ContractError(std::string("feedback is required for ") + std::string(to_string(decision.action)));
  }
  emit({{"type", "decision_recorded"}, {"decision", decision}});
}

ProjectRecord ProposalArchive::assign_project(const ProposalId& id) {
  const auto& p = proposal(id);
  if (p.status != ProposalStatus::approved) {
    throw StateError("proposal " + id + " is " + std::string(to_string(p.status)) + ", not approved");
  }
  if (project_for(id)) throw StateError("proposal " + id + " is already scheduled");
  std::set<int> taken;
  for (const auto& r : projects_) taken.insert(r.week);
  int week = 1;
  while (taken.count(week)) ++week;
  char buf[16];
  std::snprintf(buf, sizeof buf, "PRJ-%04zu", projects_.size() + 1);
  ProjectRecord record{buf, id, week};
  emit({{"type", "project_assigned"}, {"project", record}});
  return record;
}

const BookProposal& ProposalArchive::proposal(const ProposalId& id) const {
  auto it = proposals_.find(id);
  if (it == proposals_.end()) throw NotFoundError("no proposal with id " + id);
  return it->second;
}

std::vector<EditorialDecision> ProposalArchive::decisions_for(const ProposalId& id) const {
  std::vector<EditorialDecision> out;
  for (const auto& d : decisions_) {
    if (d.proposal_id == id) out.push_back(d);
  }
  return out;
}

const TournamentResult& ProposalArchive::tournament(const std::string& id) const {
  for (const auto& t : tournaments_) {
    if (t.id == id) return t;
  }
  throw NotFoundError("no tournament with id " + id);
}

std::optional<ProjectRecord> ProposalArchive::project_for(const ProposalId& id) const {
  for (const auto& r : projects_) {
    if (r.proposal_id == id) return r;
  }
  return std::nullopt;
}

std::optional<ReviewNote> ProposalArchive::review_note(const ProposalId& id) const {
  auto it = reviews_.find(id);
  if (it == reviews_.end()) return std::nullopt;
  return it->second;
}

std::vector<BookProposal> ProposalArchive::with_status(ProposalStatus status) const {
  std::vector<BookProposal> out;
  for (const auto& [id, p] : proposals_) {
    if (p.status == status) out.push_back(p);
  }
  return out;
}

std::vector<std::string> ProposalArchive::avoid_list() const {
  std::vector<std::string> out;
  for (const auto& p : with_status(ProposalStatus::rejected)) {
    std::string feedback;
    for (const auto& d : decisions_for(p.id)) {
      if (d.action == DecisionAction::reject) feedback = d.feedback;
    }
    out.push_back("- " + p.working_title + (feedback.empty() ? "" : " (rejected: " + feedback + ")"));
  }
  return out;
}

nlohmann::json ProposalArchive::snapshot() const {
  nlohmann::json proposals = nlohmann::json::array();
  for (const auto& [id, p] : proposals_) proposals.push_back(p);
  nlohmann::json tournaments = nlohmann::json::array();
  for (const auto& t : tournaments_) tournaments.push_back(t.id);
  return {{"event_count", events_.size()},
          {"proposals", proposals},
          {"decisions", decisions_},
          {"tournaments", tournaments},
          {"projects", projects_}};
}

}  // namespace imprint::ideation
