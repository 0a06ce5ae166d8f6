#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "imprint/orchestrator.hpp"
#include "store_support.hpp"

using namespace imprint;
using namespace imprint::orchestrator;
using test_support::fresh_store;
using test_support::store_options;
using test_support::t0;

namespace fs = std::filesystem;

namespace {

MilestonePlan xynapse_plan() { return {{10, 25, 50}, {1, 2}}; }

std::vector<std::string> keys(const std::vector<MilestoneTrigger>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.key());
  return out;
}

// Replays what a cycle should do, one library stage at a time, on a fresh archive.
struct StageOracle {
  ideation::Batch batch;
  ideation::TournamentResult result;
  ideation::ReviewPacket packet;
};

StageOracle stage_by_stage(std::uint64_t seed) {
  auto cfg = test_support::xynapse_config(false);
  auto persona = persona::PublisherPersona::from_config(cfg);
  ideation::ProposalArchive archive;
  ideation::MockGenerator gen(seed);
  StageOracle o;
  o.batch = ideation::generate_batch(cfg, persona, archive, 24, gen, ideation::batch_options(cfg, "C0001"));
  auto bracket = ideation::seed_bracket(o.batch.proposals, seed);
  ideation::TournamentOptions opts;
  opts.id = "C0001-T";
  o.result = ideation::run_tournament(bracket, ideation::MockEvaluator(), opts);
  o.packet = ideation::flag_for_review(o.result, 3);
  return o;
}

class EchoRejected : public ideation::ProposalGenerator {
 public:
  explicit EchoRejected(std::vector<BookProposal> rejected) : rejected_(std::move(rejected)) {}
  std::vector<BookProposal> generate(const persona::PublisherPersona&, const persona::GenerationPayload&) override {
    return rejected_;
  }

 private:
  std::vector<BookProposal> rejected_;
};

class FailingEvaluator : public ideation::PairwiseEvaluator {
 public:
  ideation::MatchOutcome evaluate(const BookProposal& a, const BookProposal& b) const override {
    if (++calls_ > 5) throw EvaluationError("model returned prose", "I like both");
    return inner_.evaluate(a, b);
  }
  bool stateless() const override { return false; }

 private:
  ideation::MockEvaluator inner_;
  mutable int calls_ = 0;
};

std::size_t count_files(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

}  // namespace

TEST_CASE("timestamps round-trip") {
  auto t = parse_time("2024-02-29T23:59:58Z");
  CHECK(format_time(t) == "2024-02-29T23:59:58Z");
  CHECK(format_time(t + std::chrono::seconds{2}) == "2024-03-01T00:00:00Z");
  CHECK_THROWS_AS(parse_time("2024-02-30T00:00:00Z"), ParseError);
  CHECK_THROWS_AS(parse_time("yesterday"), ParseError);
}

TEST_CASE("milestone_check examples") {
  const auto plan = xynapse_plan();
  CHECK(keys(milestone_check(10, std::chrono::days{0}, {}, plan)) == std::vector<std::string>{"book_count:10"});
  CHECK(milestone_check(9, std::chrono::days{0}, {}, plan).empty());
  CHECK(keys(milestone_check(50, std::chrono::days{0}, {"book_count:10", "book_count:25"}, plan)) ==
        std::vector<std::string>{"book_count:50"});
  CHECK(keys(milestone_check(0, std::chrono::days{364}, {}, plan)).empty());
  CHECK(keys(milestone_check(0, std::chrono::days{730}, {}, plan)) ==
        std::vector<std::string>{"anniversary:1", "anniversary:2"});

  auto cfg = test_support::xynapse_config(false);
  auto from_cfg = MilestonePlan::from_config(cfg);
  CHECK(from_cfg.book_counts == plan.book_counts);
  CHECK(from_cfg.anniversary_years == plan.anniversary_years);
}

TEST_CASE("milestones fire at most once over random event sequences") {
  std::mt19937_64 gen(11);
  const auto plan = xynapse_plan();
  for (int trial = 0; trial < 300; ++trial) {
    std::set<std::string> fired;
    std::vector<std::string> log;
    std::size_t catalog = 0;
    int days = 0;
    for (int step = 0; step < 40; ++step) {
      catalog += gen() % 4;
      if (gen() % 5 == 0 && catalog > 0) --catalog;  // catalog sizes may shrink; thresholds stay fired
      days += static_cast<int>(gen() % 60);
      for (const auto& m : milestone_check(catalog, std::chrono::days{days}, fired, plan)) {
        log.push_back(m.key());
        fired.insert(m.key());
      }
    }
    std::set<std::string> unique(log.begin(), log.end());
    REQUIRE(unique.size() == log.size());
    // Every fired book milestone was actually reached at some point.
    for (const auto& k : log) CHECK((k.rfind("book_count:", 0) == 0 || k.rfind("anniversary:", 0) == 0));
  }
}

TEST_CASE("cycle interval") {
  CHECK(cycle_interval("biannual") == std::chrono::days{182});
  CHECK(cycle_interval("weekly") == std::chrono::days{7});
  CHECK_THROWS_AS(cycle_interval("biennial"), UsageError);
}

TEST_CASE("run_cycle matches the stage-by-stage oracle") {
  auto store = fresh_store("cycle_oracle");
  auto report = store.run_cycle(42);
  auto oracle = stage_by_stage(42);

  CHECK(report.cycle_id == "C0001");
  CHECK(report.status == "completed");
  CHECK(report.generated == 24);
  CHECK(report.entrants == 24);
  CHECK(report.rounds == 5);
  CHECK(report.tournament_id == "C0001-T");
  CHECK(report.champion == oracle.result.champion);
  std::vector<ProposalId> flagged;
  for (const auto& e : oracle.packet.entries) flagged.push_back(e.proposal.id);
  CHECK(report.flagged == flagged);
  CHECK(report.flagged.size() == 3);
  CHECK(report.awaiting_review);

  // Brute force: the mock evaluator prefers the smaller (title, id), so the champion is the minimum.
  const BookProposal* best = nullptr;
  for (const auto& p : oracle.batch.proposals) {
    if (!best || std::tie(p.working_title, p.id) < std::tie(best->working_title, best->id)) best = &p;
  }
  CHECK(report.champion == best->id);

  // Every intermediate artifact is in the archive, nothing is approved.
  const auto& archive = store.state().archive;
  CHECK(archive.proposals().size() == 24);
  CHECK(archive.tournament("C0001-T") == oracle.result);
  CHECK(archive.with_status(ProposalStatus::flagged).size() == 3);
  CHECK(archive.with_status(ProposalStatus::archived).size() == 21);
  CHECK(archive.with_status(ProposalStatus::approved).empty());
  CHECK(archive.review_note(flagged[0])->rank == 1);
}

TEST_CASE("cycle reports are byte-identical across stores and restarts") {
  auto a = fresh_store("det_a");
  auto b = fresh_store("det_b");
  const auto ra = a.run_cycle(7);
  const auto rb = b.run_cycle(7);
  CHECK(ra.canonical() == rb.canonical());

  auto reopened = Orchestrator::open(a.root(), store_options());
  REQUIRE(reopened.state().cycles.size() == 1);
  CHECK(reopened.state().cycles[0].canonical() == ra.canonical());
  CHECK(reopened.state().snapshot().dump() == a.state().snapshot().dump());

  // The next cycle after a restart equals the next cycle without one.
  const auto after_restart = reopened.run_cycle(8);
  const auto continued = b.run_cycle(8);
  CHECK(after_restart.canonical() == continued.canonical());
  CHECK(after_restart.cycle_id == "C0002");
  CHECK(Orchestrator::open(a.root(), store_options()).state().snapshot().dump() == b.state().snapshot().dump());

  // A different seed changes the bracket.
  auto c = fresh_store("det_c");
  CHECK(c.run_cycle(9).canonical() != ra.canonical());
}

TEST_CASE("duplicates of rejected proposals leave an empty tournament") {
  auto store = fresh_store("dedup");
  auto first = store.run_cycle(3);
  std::vector<BookProposal> rejected;
  for (const auto& id : first.flagged) {
    store.decide(id, DecisionAction::reject, "too derivative", "editor");
    rejected.push_back(store.state().archive.proposal(id));
  }
  EchoRejected echo(rejected);
  ideation::MockEvaluator judge;
  auto report = store.run_cycle(4, echo, judge);
  CHECK(report.status == "completed");
  CHECK(report.generated == 3);
  CHECK(report.deduplicated == 3);
  CHECK(report.entrants == 0);
  CHECK(report.tournament_id.empty());
  CHECK(report.flagged.empty());
  CHECK_FALSE(report.awaiting_review);
  REQUIRE(report.warnings.size() == 1);
}

TEST_CASE("a stage failure aborts the cycle with partial state persisted") {
  auto store = fresh_store("abort");
  ideation::MockGenerator gen(5);
  FailingEvaluator judge;
  auto report = store.run_cycle(5, gen, judge);
  CHECK(report.status == "aborted");
  CHECK(report.error.find("evaluation") == 0);
  CHECK(report.flagged.empty());
  CHECK(store.state().archive.proposals().size() == 24);
  CHECK(store.state().archive.tournaments().empty());

  std::ifstream log(fs::path(store.root()) / "events.ndjson");
  std::string line, last;
  while (std::getline(log, line)) last = line;
  auto event = nlohmann::json::parse(last);
  CHECK(event["type"] == "cycle_aborted");
  CHECK(event["partial_transcripts"].size() == 5);

  auto reopened = Orchestrator::open(store.root(), store_options());
  CHECK(reopened.state().cycles.back().canonical() == report.canonical());
  CHECK(reopened.run_cycle(6).cycle_id == "C0002");
}

TEST_CASE("decisions go through review and are logged") {
  auto store = fresh_store("decide");
  auto report = store.run_cycle(21);
  const auto top = report.flagged[0];

  auto receipt = store.decide(top, DecisionAction::approve, "", "editor");
  CHECK(receipt.status == ProposalStatus::approved);
  REQUIRE(receipt.project);
  CHECK(receipt.project->project_id == "PRJ-0001");
  CHECK(receipt.project->week == 1);
  CHECK_THROWS_AS(store.decide(top, DecisionAction::approve, "", "editor"), StateError);

  CHECK_THROWS_AS(store.decide(report.flagged[1], DecisionAction::reject, "  ", "editor"), ContractError);
  CHECK_THROWS_AS(store.decide(report.flagged[1], DecisionAction::approve, "", ""), ContractError);
  CHECK_THROWS_AS(store.decide("C9999-001", DecisionAction::approve, "", "editor"), NotFoundError);

  // Archived candidates never reached review and cannot be approved.
  const auto archived = store.state().archive.with_status(ProposalStatus::archived);
  REQUIRE_FALSE(archived.empty());
  CHECK_THROWS_AS(store.decide(archived[0].id, DecisionAction::approve, "", "editor"), StateError);

  auto modify = store.decide(report.flagged[1], DecisionAction::request_modifications, "narrow the scope", "editor");
  CHECK(modify.status == ProposalStatus::needs_modification);
  CHECK(store.decide(report.flagged[1], DecisionAction::approve, "", "editor").project->week == 2);

  // Checkpoint soundness over the whole log: every approval has a logged decision before it.
  auto reopened = Orchestrator::open(store.root(), store_options());
  for (const auto& p : reopened.state().archive.with_status(ProposalStatus::approved)) {
    auto ds = reopened.state().archive.decisions_for(p.id);
    REQUIRE_FALSE(ds.empty());
    CHECK(ds.back().action == DecisionAction::approve);
    CHECK_FALSE(ds.back().actor.empty());
  }
  // Traits moved with the decisions and survive replay.
  CHECK(reopened.state().persona() == store.state().persona());
  CHECK_FALSE(reopened.state().persona().traits == persona::PublisherPersona::from_config(store.state().config).traits);

  std::size_t refused = 0, recorded = 0;
  for (const auto& e : store.audit_entries()) {
    if (e["action"] != "decision") continue;
    (e["outcome"] == "recorded" ? recorded : refused)++;
  }
  CHECK(recorded == 3);
  CHECK(refused == 5);
}

TEST_CASE("tick schedules biannual cycles and fires milestones once") {
  auto store = fresh_store("tick");
  auto r = store.tick(t0() + std::chrono::days{181});
  CHECK_FALSE(r.cycle);
  CHECK(r.milestones.empty());

  r = store.tick(t0() + std::chrono::days{182});
  REQUIRE(r.cycle);
  CHECK(r.cycle->cycle_id == "C0001");
  CHECK(store.state().last_cycle_at == format_time(t0() + std::chrono::days{182}));
  CHECK_FALSE(store.tick(t0() + std::chrono::days{300}).cycle);
  CHECK(store.tick(t0() + std::chrono::days{364}).cycle);

  auto year = store.tick(t0() + std::chrono::days{365});
  CHECK(keys(year.milestones) == std::vector<std::string>{"anniversary:1"});
  CHECK(store.tick(t0() + std::chrono::days{366}).milestones.empty());

  // Ten scheduled projects reach the first book milestone.
  for (int i = 0; i < 4; ++i) {
    for (const auto& id : store.state().cycles[store.state().cycles.size() - 1].flagged) {
      if (store.state().archive.project_for(id)) continue;
      store.decide(id, DecisionAction::approve, "", "editor");
    }
    if (store.state().catalog_size() >= 10) break;
    store.run_cycle(100 + i);
  }
  REQUIRE(store.state().catalog_size() >= 10);
  auto books = store.tick(t0() + std::chrono::days{367});
  CHECK(keys(books.milestones) == std::vector<std::string>{"book_count:10"});

  auto reopened = Orchestrator::open(store.root(), store_options());
  CHECK(reopened.state().fired() == std::set<std::string>{"anniversary:1", "book_count:10"});
  CHECK(reopened.tick(t0() + std::chrono::days{368}).milestones.empty());
}

TEST_CASE("event log replay tolerates only a torn tail") {
  auto store = fresh_store("torn");
  store.run_cycle(1);
  const auto log = fs::path(store.root()) / "events.ndjson";
  const auto size = fs::file_size(log);
  std::ofstream(log, std::ios::app) << R"({"type":"decision_rec)";
  auto reopened = Orchestrator::open(store.root(), store_options());
  CHECK(fs::file_size(log) == size);
  CHECK(reopened.state().snapshot().dump() == store.state().snapshot().dump());
  CHECK(reopened.run_cycle(2).cycle_id == "C0002");

  std::string raw;
  {
    std::ifstream in(log);
    raw.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto cut = raw.find('\n') + 1;
  std::ofstream(log, std::ios::trunc) << raw.substr(0, cut) << "garbage\n" << raw.substr(cut);
  CHECK_THROWS_AS(Orchestrator::open(store.root(), store_options()), StoreError);
}

TEST_CASE("store initialization") {
  const auto dir = test_support::scratch_dir("init");
  CHECK_THROWS_AS(Orchestrator::open(dir, store_options()), StoreError);
  CHECK_THROWS_AS(Orchestrator::init(dir, "{", test_support::fixture("xynapse/imprint.json")), ParseError);
  Orchestrator::init(dir, test_support::fixture("xynapse/publisher.json"), test_support::fixture("xynapse/imprint.json"),
                     store_options());
  CHECK_THROWS_AS(Orchestrator::init(dir, test_support::fixture("xynapse/publisher.json"),
                                     test_support::fixture("xynapse/imprint.json")),
                  StoreError);
  auto o = Orchestrator::open(dir, store_options());
  CHECK(o.state().founded_at == "2025-01-01T00:00:00Z");
  CHECK(fs::exists(fs::path(dir) / "snapshot.json"));
}

TEST_CASE("fail-closed QA: a poisoned title never reaches export") {
  auto store = fresh_store("export");
  auto good = test_support::small_title();
  auto poisoned = test_support::small_title("9798886450026", 1);
  store.add_title("good", good.config, good.quotations, good.corpus);
  store.add_title("poisoned", poisoned.config, poisoned.quotations, poisoned.corpus);
  CHECK_THROWS_AS(store.add_title("good", good.config, good.quotations), ContractError);
  CHECK_THROWS_AS(store.add_title("../up", good.config, good.quotations), ContractError);

  // Nothing verified yet: not ready.
  auto before = store.readiness("good");
  CHECK_FALSE(before.ready());
  CHECK(before.verified == 0);
  CHECK(before.report.error_count() == 3);

  store.verify_title("good");
  auto records = store.verify_title("poisoned");
  CHECK(records[1].status == qa::VerificationStatus::failed);
  auto ready = store.readiness("good");
  INFO(nlohmann::json(ready).dump());
  CHECK(ready.ready());
  CHECK(ready.verified == 3);
  auto red = store.readiness("poisoned");
  CHECK_FALSE(red.ready());
  REQUIRE(red.report.error_count() == 1);
  CHECK(red.report.findings()[0].path == "quotations[1].verified");

  const auto exports = fs::path(store.root()) / "exports";
  CHECK_THROWS_AS(store.export_titles({"good"}, "", "editor"), GateError);
  CHECK_THROWS_AS(store.export_titles({"good"}, "guess", "editor"), GateError);
  try {
    store.export_titles({"good", "poisoned"}, test_support::kToken, "editor");
    FAIL("poisoned export went through");
  } catch (const ExportRefused& e) {
    REQUIRE(e.blocking().size() == 1);
    CHECK(e.blocking()[0].title_id == "poisoned");
  }
  CHECK(count_files(exports) == 0);

  auto receipt = store.export_titles({"good"}, test_support::kToken, "editor");
  CHECK(receipt.file == "exports/EXP-0001.csv");
  CHECK(count_files(exports) == 1);
  auto rows = qa::parse_distribution_csv(receipt.csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].isbn == "9798886450019");
  CHECK(rows[0].markets[0].list_cents == 1000);

  // Gate soundness as the audit log sees it.
  std::size_t exported = 0;
  for (const auto& e : store.audit_entries()) {
    if (e["action"] != "distribution_submission") continue;
    if (e["outcome"] == "exported") {
      ++exported;
      CHECK(e["approval"]["actor"] == "editor");
    } else {
      CHECK_FALSE(e.contains("approval"));
    }
  }
  CHECK(exported == 1);
  CHECK(Orchestrator::open(store.root(), store_options()).state().exports.size() == 1);
}

TEST_CASE("export is impossible without a configured token") {
  auto store = fresh_store("no_token", "");
  auto t = test_support::small_title();
  store.add_title("t", t.config, t.quotations, t.corpus);
  store.verify_title("t");
  CHECK(store.readiness("t").ready());
  CHECK_THROWS_AS(store.export_titles({"t"}, "", "editor"), GateError);
  CHECK_THROWS_AS(store.export_titles({"t"}, "anything", "editor"), GateError);
}

TEST_CASE("codex build for a stored title") {
  auto store = fresh_store("codex");
  auto t = test_support::small_title();
  store.add_title("t", t.config, t.quotations, t.corpus);
  store.verify_title("t");
  auto build = store.build_title("t", codex::FontSet({}));
  CHECK(build.report.passed());
  CHECK(build.layout.pages.size() == 6);
  CHECK(build.interior.find("\\pilsaspread") != std::string::npos);
  CHECK_FALSE(build.cover.empty());
}
