#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/config.hpp"
#include "imprint/errors.hpp"
#include "imprint/gateway.hpp"
#include "imprint/persona.hpp"
#include "imprint/proposal.hpp"

namespace imprint::ideation {

// ---------------------------------------------------------------------------
// Similarity

class SimilarityEngine {
 public:
  virtual ~SimilarityEngine() = default;
  // Must be symmetric, in [0,1], and 1.0 for field-identical proposals.
  virtual double score(const BookProposal& a, const BookProposal& b) const = 0;
};

// Lowercased title + abstract + outline, ASCII punctuation treated as space.
std::set<std::string> normalized_tokens(const BookProposal& p);

class JaccardSimilarity : public SimilarityEngine {
 public:
  double score(const BookProposal& a, const BookProposal& b) const override;
};

const SimilarityEngine& default_similarity();
double similarity(const BookProposal& a, const BookProposal& b, const SimilarityEngine& engine = default_similarity());

// ---------------------------------------------------------------------------
// Tournament data

struct CriterionJudgment {
  std::string criterion;  // one of kCriteria keys
  ProposalId prefers;
  std::string justification;

  bool operator==(const CriterionJudgment&) const = default;
};

struct MatchOutcome {
  ProposalId a;
  ProposalId b;
  ProposalId winner;
  std::string rationale;
  std::vector<CriterionJudgment> judgments;  // kCriteria order
  int round = 0;                             // 1-based

  const ProposalId& loser() const { return winner == a ? b : a; }
  bool operator==(const MatchOutcome&) const = default;
};

struct Bracket {
  std::uint64_t seed = 0;
  std::vector<ProposalId> entrants;  // seeded order
  std::vector<ProposalId> byes;      // first (2^rounds - N) entrants
  int rounds = 0;
  std::map<ProposalId, BookProposal> proposals;

  bool operator==(const Bracket&) const = default;
};

struct RoundRecord {
  int number = 0;
  std::vector<ProposalId> byes;
  std::vector<std::size_t> matches;  // indexes into transcripts

  bool operator==(const RoundRecord&) const = default;
};

struct Standing {
  ProposalId id;
  int eliminated_in = 0;  // round lost; rounds + 1 for the champion
  int wins = 0;
  std::size_t seed_position = 0;

  bool operator==(const Standing&) const = default;
};

struct TournamentResult {
  std::string id;
  Bracket bracket;
  std::vector<RoundRecord> rounds;
  std::vector<MatchOutcome> transcripts;  // play order
  std::vector<Standing> ranking;          // best first
  ProposalId champion;

  std::vector<ProposalId> ranked_ids() const;
  // Matches the proposal took part in, in play order.
  std::vector<MatchOutcome> matches_of(const ProposalId& id) const;
  bool operator==(const TournamentResult&) const = default;
};

void to_json(nlohmann::json& j, const CriterionJudgment& c);
void from_json(const nlohmann::json& j, CriterionJudgment& c);
void to_json(nlohmann::json& j, const MatchOutcome& m);
void from_json(const nlohmann::json& j, MatchOutcome& m);
void to_json(nlohmann::json& j, const Bracket& b);
void from_json(const nlohmann::json& j, Bracket& b);
void to_json(nlohmann::json& j, const TournamentResult& r);
void from_json(const nlohmann::json& j, TournamentResult& r);

// ---------------------------------------------------------------------------
// Evaluators

class PairwiseEvaluator {
 public:
  virtual ~PairwiseEvaluator() = default;
  virtual MatchOutcome evaluate(const BookProposal& a, const BookProposal& b) const = 0;
  // Stateless evaluators may be called concurrently within a round.
  virtual bool stateless() const { return true; }
};

// Decides by a predicate: `a_wins(a, b)` true means a advances.
class ComparatorEvaluator : public PairwiseEvaluator {
 public:
  using Predicate = std::function<bool(const BookProposal&, const BookProposal&)>;
  explicit ComparatorEvaluator(Predicate a_wins, std::string label = "comparator");
  MatchOutcome evaluate(const BookProposal& a, const BookProposal& b) const override;

 private:
  Predicate a_wins_;
  std::string label_;
};

// The lexicographically smaller working title wins; ids break ties.
class MockEvaluator : public ComparatorEvaluator {
 public:
  MockEvaluator();
};

// Asks a model through the gateway at the critical-task temperature.
class GatewayEvaluator : public PairwiseEvaluator {
 public:
  GatewayEvaluator(const gateway::Gateway& gateway, persona::PublisherPersona persona, const config::ResolvedConfig& cfg,
                   const persona::PromptTemplates& templates = persona::PromptTemplates::builtin());
  MatchOutcome evaluate(const BookProposal& a, const BookProposal& b) const override;

 private:
  const gateway::Gateway& gateway_;
  persona::PublisherPersona persona_;
  gateway::PromptRequest base_;
  const persona::PromptTemplates& templates_;
};

// Reads {"winner","rationale","criteria":{key:{"prefers","justification"}}} with
// sides given as "A"/"B" or as proposal ids. Surrounding prose and code fences
// are tolerated. Throws EvaluationError carrying `raw` otherwise.
MatchOutcome parse_judgment(const std::string& raw, const BookProposal& a, const BookProposal& b);

// Validates the evaluator's output. Throws ContractError when a and b share an id,
// EvaluationError when the outcome is malformed.
MatchOutcome run_matchup(const BookProposal& a, const BookProposal& b, const PairwiseEvaluator& evaluator);

// ---------------------------------------------------------------------------
// Brackets and tournaments

// Throws ContractError for an empty list or duplicate ids.
Bracket seed_bracket(const std::vector<BookProposal>& proposals, std::uint64_t seed);

int rounds_for(std::size_t entrants);

class TournamentAborted : public Error {
 public:
  TournamentAborted(const std::string& cause, std::vector<MatchOutcome> partial)
      : Error("evaluation", "tournament aborted: " + cause), partial_(std::move(partial)) {}
  const std::vector<MatchOutcome>& partial_transcripts() const noexcept { return partial_; }

 private:
  std::vector<MatchOutcome> partial_;
};

struct TournamentOptions {
  std::string id;       // derived from the bracket when empty
  int concurrency = 1;  // matches evaluated in parallel within a round
};

TournamentResult run_tournament(const Bracket& bracket, const PairwiseEvaluator& evaluator,
                                const TournamentOptions& options = {});

struct ReviewEntry {
  int rank = 0;
  BookProposal proposal;
  std::string rationale;
  std::vector<MatchOutcome> transcripts;
};

struct ReviewPacket {
  std::string tournament_id;
  std::vector<ReviewEntry> entries;
};

void to_json(nlohmann::json& j, const ReviewPacket& p);

// Top k of the ranking. Throws UsageError unless 1 <= k <= entrants.
ReviewPacket flag_for_review(const TournamentResult& result, int k);

// ---------------------------------------------------------------------------
// Archive

struct ProjectRecord {
  std::string project_id;  // PRJ-0001, ...
  ProposalId proposal_id;
  int week = 0;            // 1-based weekly release slot

  bool operator==(const ProjectRecord&) const = default;
};

void to_json(nlohmann::json& j, const ProjectRecord& p);
void from_json(const nlohmann::json& j, ProjectRecord& p);

struct ReviewNote {
  std::string tournament_id;
  int rank = 0;
  std::string rationale;
  bool operator==(const ReviewNote&) const = default;
};

// Event-sourced store of proposals, tournaments, decisions and projects. Every
// mutation is validated, turned into an event and applied; replaying the
// events reproduces the state. Not thread-safe: callers serialize writes.
class ProposalArchive {
 public:
  using EventSink = std::function<void(const nlohmann::json&)>;

  ProposalArchive() = default;
  static ProposalArchive replay(const std::vector<nlohmann::json>& events);

  // Called after each applied event, for persistence.
  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

  // Throws ContractError for an invalid proposal or a repeated id.
  void add_proposal(const BookProposal& proposal);
  void record_tournament(const TournamentResult& result);
  // Flagged entries become `flagged`; every other entrant still a candidate is archived.
  void apply_review(const ReviewPacket& packet);
  // NotFoundError for an unknown id; ContractError for missing feedback or actor.
  void record_decision(const EditorialDecision& decision);
  // StateError unless approved and not yet scheduled.
  ProjectRecord assign_project(const ProposalId& id);

  const BookProposal& proposal(const ProposalId& id) const;  // NotFoundError
  bool contains(const ProposalId& id) const { return proposals_.count(id) > 0; }
  const std::map<ProposalId, BookProposal>& proposals() const noexcept { return proposals_; }
  const std::vector<EditorialDecision>& decisions() const noexcept { return decisions_; }
  std::vector<EditorialDecision> decisions_for(const ProposalId& id) const;
  const std::vector<TournamentResult>& tournaments() const noexcept { return tournaments_; }
  const TournamentResult& tournament(const std::string& id) const;  // NotFoundError
  const std::vector<ProjectRecord>& projects() const noexcept { return projects_; }
  std::optional<ProjectRecord> project_for(const ProposalId& id) const;
  // Latest review flag for the proposal, if any.
  std::optional<ReviewNote> review_note(const ProposalId& id) const;
  std::vector<BookProposal> with_status(ProposalStatus status) const;
  // One line per rejected proposal with its latest feedback, for generation prompts.
  std::vector<std::string> avoid_list() const;

  const std::vector<nlohmann::json>& events() const noexcept { return events_; }
  nlohmann::json snapshot() const;

  // Applies a recorded event without validation beyond shape. Throws StoreError
  // for unknown event types.
  void apply(const nlohmann::json& event);

 private:
  void emit(nlohmann::json event);

  std::map<ProposalId, BookProposal> proposals_;
  std::vector<EditorialDecision> decisions_;
  std::vector<TournamentResult> tournaments_;
  std::vector<ProjectRecord> projects_;
  std::map<ProposalId, ReviewNote> reviews_;
  std::vector<nlohmann::json> events_;
  EventSink sink_;
};

// ---------------------------------------------------------------------------
// Generation

class ProposalGenerator {
 public:
  virtual ~ProposalGenerator() = default;
  // Ids, origin cycle and status are assigned by generate_batch.
  virtual std::vector<BookProposal> generate(const persona::PublisherPersona& persona,
                                             const persona::GenerationPayload& payload) = 0;
};

// Seeded stand-in: the same seed and count always give the same proposals,
// and titles within one batch never repeat.
class MockGenerator : public ProposalGenerator {
 public:
  explicit MockGenerator(std::uint64_t seed) : seed_(seed) {}
  std::vector<BookProposal> generate(const persona::PublisherPersona& persona,
                                     const persona::GenerationPayload& payload) override;

 private:
  std::uint64_t seed_;
};

class GatewayGenerator : public ProposalGenerator {
 public:
  GatewayGenerator(const gateway::Gateway& gateway, const config::ResolvedConfig& cfg,
                   const persona::PromptTemplates& templates = persona::PromptTemplates::builtin());
  std::vector<BookProposal> generate(const persona::PublisherPersona& persona,
                                     const persona::GenerationPayload& payload) override;

 private:
  const gateway::Gateway& gateway_;
  const config::ResolvedConfig& cfg_;
  const persona::PromptTemplates& templates_;
};

// Parses a JSON array of proposals (fences and surrounding prose tolerated).
// Throws EvaluationError carrying `raw` when the shape is wrong.
std::vector<BookProposal> parse_proposals(const std::string& raw);

struct Batch {
  std::vector<BookProposal> proposals;
  std::size_t generated = 0;
  std::vector<BookProposal> discarded;  // too close to a rejected proposal
};

struct BatchOptions {
  std::string cycle_id = "C0001";
  double duplicate_threshold = 0.8;
  const SimilarityEngine* engine = nullptr;  // default_similarity() when null
};

// Threshold from workflow.duplicate_threshold when set.
BatchOptions batch_options(const config::ResolvedConfig& cfg, std::string cycle_id);

// Throws UsageError for n < 1. Proposals beyond n are dropped, ids are
// <cycle>-NNN, and anything scoring at or above the threshold against a
// rejected archive proposal is discarded.
Batch generate_batch(const config::ResolvedConfig& cfg, const persona::PublisherPersona& persona,
                     const ProposalArchive& archive, int n, ProposalGenerator& generator,
                     const BatchOptions& options);

}  // namespace imprint::ideation
