#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/codex.hpp"
#include "imprint/config.hpp"
#include "imprint/gateway.hpp"
#include "imprint/ideation.hpp"
#include "imprint/persona.hpp"
#include "imprint/qa.hpp"

namespace imprint::orchestrator {

using Clock = std::chrono::system_clock;
using TimePoint = std::chrono::sys_seconds;

// "2024-07-18T00:00:00Z" both ways. ParseError for anything else.
std::string format_time(TimePoint t);
TimePoint parse_time(std::string_view iso);

// ---------------------------------------------------------------------------
// Cycles

// Carries no wall-clock data, so equal inputs give byte-equal reports.
struct CycleReport {
  std::string cycle_id;
  std::uint64_t seed = 0;
  std::size_t generated = 0;
  std::size_t deduplicated = 0;  // discarded as too close to rejected proposals
  std::size_t entrants = 0;
  std::string tournament_id;     // empty when nothing reached the bracket
  int rounds = 0;
  std::string champion;
  std::vector<ProposalId> flagged;
  bool awaiting_review = false;
  std::vector<std::string> warnings;
  std::string status = "completed";  // or "aborted"
  std::string error;

  bool operator==(const CycleReport&) const = default;
  std::string canonical() const;  // compact JSON, fixed key order
};

void to_json(nlohmann::json& j, const CycleReport& r);
void from_json(const nlohmann::json& j, CycleReport& r);

// How cycles produce and judge proposals. The factories are called once per
// cycle so gateway-backed engines see the current persona.
struct Engines {
  std::function<std::unique_ptr<ideation::ProposalGenerator>(std::uint64_t seed)> generator;
  std::function<std::unique_ptr<ideation::PairwiseEvaluator>(const persona::PublisherPersona&)> evaluator;

  static Engines mock();
  // Keeps `gateway` and `cfg` alive for as long as the engines exist.
  static Engines with_gateway(std::shared_ptr<const gateway::Gateway> gateway,
                              std::shared_ptr<const config::ResolvedConfig> cfg);
};

// ---------------------------------------------------------------------------
// Milestones and scheduling

enum class MilestoneKind { book_count, anniversary };
std::string_view to_string(MilestoneKind kind);

struct MilestoneTrigger {
  MilestoneKind kind = MilestoneKind::book_count;
  int threshold = 0;  // books, or years
  std::string fired_at;

  std::string key() const;  // "book_count:10", "anniversary:1"
  bool operator==(const MilestoneTrigger&) const = default;
};

void to_json(nlohmann::json& j, const MilestoneTrigger& m);

struct MilestonePlan {
  std::vector<int> book_counts;
  std::vector<int> anniversary_years;
  // automation.milestone_triggers and automation.anniversary_triggers ("2_years").
  static MilestonePlan from_config(const config::ResolvedConfig& cfg);
};

// Thresholds reached and not yet in `fired`, books first, ascending. An
// anniversary is 365 days per year.
std::vector<MilestoneTrigger> milestone_check(std::size_t catalog_size, std::chrono::days elapsed,
                                              const std::set<std::string>& fired, const MilestonePlan& plan,
                                              const std::string& fired_at = {});

// daily 1, weekly 7, monthly 30, quarterly 91, biannual 182, annual 365. UsageError otherwise.
std::chrono::days cycle_interval(std::string_view frequency);

// ---------------------------------------------------------------------------
// Titles and export

struct Readiness {
  std::string title_id;
  ValidationReport report;
  std::size_t quotations = 0;
  std::size_t verified = 0;
  bool ready() const { return report.passed(); }
};

void to_json(nlohmann::json& j, const Readiness& r);

struct ExportReceipt {
  std::vector<std::string> titles;
  std::string file;  // relative to the store root
  std::string csv;
  gateway::ApprovalRecord approval;
};

// QA refused the export. Carries every title's readiness.
class ExportRefused : public Error {
 public:
  explicit ExportRefused(std::vector<Readiness> blocking);
  const std::vector<Readiness>& blocking() const noexcept { return blocking_; }

 private:
  std::vector<Readiness> blocking_;
};

struct DecisionReceipt {
  EditorialDecision decision;
  ProposalStatus status = ProposalStatus::candidate;
  std::optional<ideation::ProjectRecord> project;
};

struct TickResult {
  std::optional<CycleReport> cycle;
  std::vector<MilestoneTrigger> milestones;
};

// ---------------------------------------------------------------------------
// State and store

// Everything derived from the event log. Copyable, so readers can hold an
// immutable snapshot while the writer moves on.
struct State {
  config::ResolvedConfig config;  // publisher over imprint, no title level
  ideation::ProposalArchive archive;
  std::vector<CycleReport> cycles;
  std::vector<MilestoneTrigger> milestones;
  std::vector<std::string> titles;
  std::vector<nlohmann::json> exports;
  std::string founded_at;
  std::string last_cycle_at;
  std::size_t event_count = 0;

  persona::PublisherPersona persona() const;  // config persona evolved by every decision
  std::set<std::string> fired() const;
  std::size_t catalog_size() const { return titles.size() + archive.projects().size(); }
  bool has_title(const std::string& id) const;
  nlohmann::json snapshot() const;
};

struct Options {
  std::function<TimePoint()> clock;  // defaults to the system clock
  Engines engines = Engines::mock();
  std::string approve_token;         // overrides service.json and IMPRINT_APPROVE_TOKEN when set
  int batch_size = 0;                // overrides workflow.batch_size when positive
};

// Store layout under `root`:
//   config/publisher.json, config/imprint.json, config/service.json (optional)
//   events.ndjson     append-only log, one event per line
//   snapshot.json     derived state after the last command
//   audit.ndjson      human and gated actions
//   gateway_audit.ndjson
//   titles/<id>/{config.json, quotations.json, corpus.json, verification.json}
//   exports/*.csv
class Orchestrator {
 public:
  // Copies the two configuration files into a fresh store. StoreError if one exists.
  static void init(const std::string& root, const std::string& publisher_json, const std::string& imprint_json,
                   Options options = {});
  // Replays the log. A torn final line is ignored; any other bad line is a StoreError.
  static Orchestrator open(const std::string& root, Options options = {});

  const std::string& root() const noexcept { return root_; }
  const State& state() const noexcept { return state_; }
  void set_engines(Engines engines) { options_.engines = std::move(engines); }
  std::shared_ptr<const State> snapshot_copy() const { return std::make_shared<const State>(state_); }

  // generate -> dedup -> bracket -> tournament -> review flags. Never approves
  // anything. Stage failures are recorded as an aborted cycle and reported,
  // not thrown.
  CycleReport run_cycle(std::uint64_t seed);
  CycleReport run_cycle(std::uint64_t seed, ideation::ProposalGenerator& generator,
                        const ideation::PairwiseEvaluator& evaluator);

  // Runs a cycle when the configured interval has elapsed since the last one,
  // then fires any milestone that is due.
  TickResult tick(TimePoint now);

  // Only flagged proposals and those sent back for changes can be decided.
  // Approval schedules a project in the same command.
  DecisionReceipt decide(const ProposalId& id, DecisionAction action, const std::string& feedback,
                         const std::string& actor);

  void add_title(const std::string& id, const std::string& title_config_json, const std::string& quotations_json,
                 const std::optional<std::string>& corpus_json = std::nullopt);
  config::ResolvedConfig title_config(const std::string& id) const;
  std::vector<codex::QuotationRecord> quotations(const std::string& id) const;
  std::vector<qa::VerificationRecord> verification(const std::string& id) const;  // empty when never run
  std::vector<qa::VerificationRecord> verify_title(const std::string& id, const qa::SourceChecker& checker);
  // Uses titles/<id>/corpus.json. NotFoundError when the title has none.
  std::vector<qa::VerificationRecord> verify_title(const std::string& id);
  Readiness readiness(const std::string& id) const;
  codex::CodexBuild build_title(const std::string& id, const codex::FontAvailability& fonts) const;

  // GateError for a missing or wrong token; ExportRefused when any title is
  // not ready. Nothing is written in either case.
  ExportReceipt export_titles(const std::vector<std::string>& ids, const std::string& approve_token,
                              const std::string& actor);

  // Appends to audit.ndjson.
  void audit(nlohmann::json entry);
  std::vector<nlohmann::json> audit_entries() const;

 private:
  Orchestrator(std::string root, Options options);
  CycleReport cycle(std::uint64_t seed, ideation::ProposalGenerator& generator,
                    const ideation::PairwiseEvaluator& evaluator, const std::string& at);
  void write_line(const nlohmann::json& event);
  void append(nlohmann::json event);
  void apply(const nlohmann::json& event);
  void persist_snapshot() const;
  std::string now_iso() const;
  std::string configured_token() const;
  std::string title_dir(const std::string& id) const;
  const std::string& require_title(const std::string& id) const;

  std::string root_;
  Options options_;
  State state_;
  std::uint64_t next_seq_ = 1;
};

// Adapter registry for the configured chain. IMPRINT_LLM_BASE_URL selects
// HTTP adapters against that endpoint; otherwise every provider gets the
// deterministic mock.
gateway::AdapterRegistry registry_from_env(const config::ResolvedConfig& cfg);

// ---------------------------------------------------------------------------
// HTTP API

// Serves the review API over one orchestrator. All writes go through a single
// writer thread; reads use the snapshot published after the last write.
class Service {
 public:
  explicit Service(Orchestrator orchestrator);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Throws an Error of kind "startup" naming the address when the bind fails.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  std::shared_ptr<const State> state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace imprint::orchestrator
