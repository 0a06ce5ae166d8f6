#include "imprint/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "imprint/text.hpp"

namespace imprint::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Time

std::string format_time(TimePoint t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

TimePoint parse_time(std::string_view iso) {
  static const std::regex shape(R"((\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})Z)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(iso.begin(), iso.end(), m, shape)) {
    throw ParseError("not a UTC timestamp: '" + std::string(iso) + "'", 0, 1, 1);
  }
  auto num = [&](int i) { return std::stoi(m[i].str()); };
  const std::chrono::year_month_day ymd{std::chrono::year{num(1)}, std::chrono::month{static_cast<unsigned>(num(2))},
                                        std::chrono::day{static_cast<unsigned>(num(3))}};
  if (!ymd.ok() || num(4) > 23 || num(5) > 59 || num(6) > 60) {
    throw ParseError("not a calendar timestamp: '" + std::string(iso) + "'", 0, 1, 1);
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{num(4)} + std::chrono::minutes{num(5)} +
         std::chrono::seconds{num(6)};
}

// ---------------------------------------------------------------------------
// Reports and milestones

void to_json(json& j, const CycleReport& r) {
  j = {{"cycle_id", r.cycle_id},
       {"seed", r.seed},
       {"generated", r.generated},
       {"deduplicated", r.deduplicated},
       {"entrants", r.entrants},
       {"tournament_id", r.tournament_id},
       {"rounds", r.rounds},
       {"champion", r.champion},
       {"flagged", r.flagged},
       {"awaiting_review", r.awaiting_review},
       {"warnings", r.warnings},
       {"status", r.status}};
  if (!r.error.empty()) j["error"] = r.error;
}

void from_json(const json& j, CycleReport& r) {
  r.cycle_id = j.at("cycle_id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.generated = j.at("generated").get<std::size_t>();
  r.deduplicated = j.at("deduplicated").get<std::size_t>();
  r.entrants = j.at("entrants").get<std::size_t>();
  r.tournament_id = j.at("tournament_id").get<std::string>();
  r.rounds = j.at("rounds").get<int>();
  r.champion = j.at("champion").get<std::string>();
  r.flagged = j.at("flagged").get<std::vector<ProposalId>>();
  r.awaiting_review = j.at("awaiting_review").get<bool>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.status = j.at("status").get<std::string>();
  r.error = j.value("error", std::string());
}

std::string CycleReport::canonical() const { return json(*this).dump(); }

std::string_view to_string(MilestoneKind kind) {
  return kind == MilestoneKind::book_count ? "book_count" : "anniversary";
}

std::string MilestoneTrigger::key() const { return std::string(to_string(kind)) + ":" + std::to_string(threshold); }

void to_json(json& j, const MilestoneTrigger& m) {
  j = {{"kind", to_string(m.kind)}, {"threshold", m.threshold}, {"key", m.key()}, {"fired_at", m.fired_at}};
}

namespace {

MilestoneTrigger milestone_from_json(const json& j) {
  MilestoneTrigger m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "book_count") {
    m.kind = MilestoneKind::book_count;
  } else if (kind == "anniversary") {
    m.kind = MilestoneKind::anniversary;
  } else {
    throw StoreError("unknown milestone kind '" + kind + "'");
  }
  m.threshold = j.at("threshold").get<int>();
  m.fired_at = j.value("fired_at", std::string());
  return m;
}

}  // namespace

MilestonePlan MilestonePlan::from_config(const config::ResolvedConfig& cfg) {
  MilestonePlan plan;
  if (auto books = cfg.get_integers("automation.milestone_triggers")) {
    for (auto n : *books) plan.book_counts.push_back(static_cast<int>(n));
  }
  static const std::regex years(R"((\d+)_years?)");
  if (auto anniversaries = cfg.get_strings("automation.anniversary_triggers")) {
    for (const auto& a : *anniversaries) {
      std::smatch m;
      if (!std::regex_match(a, m, years)) throw ConfigurationError("anniversary trigger '" + a + "' is not N_years");
      plan.anniversary_years.push_back(std::stoi(m[1].str()));
    }
  }
  std::sort(plan.book_counts.begin(), plan.book_counts.end());
  std::sort(plan.anniversary_years.begin(), plan.anniversary_years.end());
  return plan;
}

std::vector<MilestoneTrigger> milestone_check(std::size_t catalog_size, std::chrono::days elapsed,
                                              const std::set<std::string>& fired, const MilestonePlan& plan,
                                              const std::string& fired_at) {
  std::vector<MilestoneTrigger> out;
  auto consider = [&](MilestoneKind kind, int threshold, bool reached) {
    MilestoneTrigger t{kind, threshold, fired_at};
    if (!reached || fired.count(t.key())) return;
    for (const auto& seen : out) {
      if (seen.key() == t.key()) return;
    }
    out.push_back(t);
  };
  auto books = plan.book_counts;
  std::sort(books.begin(), books.end());
  for (int n : books) consider(MilestoneKind::book_count, n, n >= 0 && catalog_size >= static_cast<std::size_t>(n));
  auto years = plan.anniversary_years;
  std::sort(years.begin(), years.end());
  for (int y : years) consider(MilestoneKind::anniversary, y, elapsed.count() >= 365LL * y);
  return out;
}

std::chrono::days cycle_interval(std::string_view frequency) {
  static const std::map<std::string, int, std::less<>> table = {
      {"daily", 1}, {"weekly", 7}, {"monthly", 30}, {"quarterly", 91}, {"biannual", 182}, {"annual", 365}};
  auto it = table.find(frequency);
  if (it == table.end()) throw UsageError("unknown cycle frequency '" + std::string(frequency) + "'");
  return std::chrono::days{it->second};
}

// ---------------------------------------------------------------------------
// Engines

Engines Engines::mock() {
  Engines e;
  e.generator = [](std::uint64_t seed) { return std::make_unique<ideation::MockGenerator>(seed); };
  e.evaluator = [](const persona::PublisherPersona&) { return std::make_unique<ideation::MockEvaluator>(); };
  return e;
}

Engines Engines::with_gateway(std::shared_ptr<const gateway::Gateway> gw, std::shared_ptr<const config::ResolvedConfig> cfg) {
  Engines e;
  e.generator = [gw, cfg](std::uint64_t) { return std::make_unique<ideation::GatewayGenerator>(*gw, *cfg); };
  e.evaluator = [gw, cfg](const persona::PublisherPersona& p) {
    return std::make_unique<ideation::GatewayEvaluator>(*gw, p, *cfg);
  };
  return e;
}

gateway::AdapterRegistry registry_from_env(const config::ResolvedConfig& cfg) {
  gateway::AdapterRegistry registry;
  const char* base = std::getenv("IMPRINT_LLM_BASE_URL");
  const char* seed = std::getenv("IMPRINT_MOCK_SEED");
  std::set<std::string> done;
  for (const auto& spec : gateway::ModelChain::from_config(cfg).specs()) {
    if (!done.insert(spec.provider).second) continue;
    if (base && *base) {
      registry.add(spec.provider, std::make_shared<gateway::HttpAdapter>(base));
    } else {
      registry.add(spec.provider, std::make_shared<gateway::MockAdapter>(seed ? std::strtoull(seed, nullptr, 10) : 0));
    }
  }
  return registry;
}

// ---------------------------------------------------------------------------
// Readiness and export errors

void to_json(json& j, const Readiness& r) {
  j = {{"title_id", r.title_id},
       {"ready", r.ready()},
       {"quotations", r.quotations},
       {"verified", r.verified},
       {"findings", r.report.findings()}};
}

namespace {

std::string describe_blocking(const std::vector<Readiness>& blocking) {
  std::string out = "export refused by QA:";
  for (const auto& r : blocking) {
    out += " " + r.title_id + " (" + std::to_string(r.report.error_count()) + " errors)";
  }
  return out;
}

}  // namespace

ExportRefused::ExportRefused(std::vector<Readiness> blocking)
    : Error("qa", describe_blocking(blocking)), blocking_(std::move(blocking)) {}

// ---------------------------------------------------------------------------
// State

persona::PublisherPersona State::persona() const {
  auto p = persona::PublisherPersona::from_config(config);
  const auto& decisions = archive.decisions();
  if (!decisions.empty()) p = persona::update_traits(p, decisions);
  return p;
}

std::set<std::string> State::fired() const {
  std::set<std::string> out;
  for (const auto& m : milestones) out.insert(m.key());
  return out;
}

bool State::has_title(const std::string& id) const {
  return std::find(titles.begin(), titles.end(), id) != titles.end();
}

json State::snapshot() const {
  const auto p = persona();
  return {{"founded_at", founded_at},
          {"event_count", event_count},
          {"archive", archive.snapshot()},
          {"cycles", cycles},
          {"milestones", milestones},
          {"titles", titles},
          {"exports", exports},
          {"last_cycle_at", last_cycle_at},
          {"traits",
           {{"patience", p.traits.patience},
            {"openness", p.traits.openness},
            {"nuance_appreciation", p.traits.nuance_appreciation},
            {"intellectual_rigor", p.traits.intellectual_rigor}}}};
}

// ---------------------------------------------------------------------------
// Store helpers

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Write-then-rename so readers never see half a file.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw StoreError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

config::ResolvedConfig resolve_store_config(const fs::path& root, const std::optional<std::string>& title_raw) {
  using config::Level;
  auto publisher = config::parse_config(read_text(root / "config" / "publisher.json"), Level::publisher);
  auto imprint = config::parse_config(read_text(root / "config" / "imprint.json"), Level::imprint);
  auto title = title_raw ? config::parse_config(*title_raw, Level::title) : config::ConfigNode(Level::title);
  return config::resolve(publisher, imprint, title);
}

// Routes archive events to the log for the duration of one command.
class SinkGuard {
 public:
  SinkGuard(ideation::ProposalArchive& archive, ideation::ProposalArchive::EventSink sink) : archive_(archive) {
    archive_.set_event_sink(std::move(sink));
  }
  ~SinkGuard() { archive_.set_event_sink(nullptr); }
  SinkGuard(const SinkGuard&) = delete;
  SinkGuard& operator=(const SinkGuard&) = delete;

 private:
  ideation::ProposalArchive& archive_;
};

const std::set<std::string>& own_event_types() {
  static const std::set<std::string> types = {"store_initialized", "cycle_completed", "cycle_aborted",
                                              "milestone_fired",   "title_added",     "title_verified",
                                              "export_completed"};
  return types;
}

bool tokens_match(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  return diff == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Orchestrator

Orchestrator::Orchestrator(std::string root, Options options) : root_(std::move(root)), options_(std::move(options)) {
  if (!options_.clock) {
    options_.clock = [] { return std::chrono::floor<std::chrono::seconds>(Clock::now()); };
  }
  if (!options_.engines.generator || !options_.engines.evaluator) options_.engines = Engines::mock();
}

void Orchestrator::init(const std::string& root, const std::string& publisher_json, const std::string& imprint_json,
                        Options options) {
  const fs::path dir(root);
  if (fs::exists(dir / "events.ndjson")) throw StoreError("a store already exists at " + root);
  // Refuse configurations that do not resolve before touching the disk.
  config::resolve(config::parse_config(publisher_json, config::Level::publisher),
                  config::parse_config(imprint_json, config::Level::imprint),
                  config::ConfigNode(config::Level::title));
  fs::create_directories(dir / "titles");
  fs::create_directories(dir / "exports");
  write_atomic(dir / "config" / "publisher.json", publisher_json);
  write_atomic(dir / "config" / "imprint.json", imprint_json);
  Orchestrator o(root, std::move(options));
  o.state_.config = resolve_store_config(dir, std::nullopt);
  o.append({{"type", "store_initialized"}, {"founded_at", o.now_iso()}});
  o.persist_snapshot();
}

Orchestrator Orchestrator::open(const std::string& root, Options options) {
  const fs::path dir(root);
  const auto log = dir / "events.ndjson";
  if (!fs::exists(log)) throw StoreError("no store at " + root + " (run init first)");
  Orchestrator o(root, std::move(options));
  o.state_.config = resolve_store_config(dir, std::nullopt);

  const auto raw = read_text(log);
  std::size_t pos = 0, line_no = 0, good_end = 0;
  while (pos < raw.size()) {
    const auto nl = raw.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const auto line = raw.substr(pos, complete ? nl - pos : std::string::npos);
    ++line_no;
    json event;
    try {
      event = json::parse(line);
    } catch (const json::parse_error&) {
      if (!complete) break;  // torn tail from an interrupted append
      throw StoreError("events.ndjson line " + std::to_string(line_no) + " is not JSON");
    }
    if (!complete) {
      // A parseable line without its newline is still a torn write: keep it, finish the line.
      std::ofstream(log, std::ios::binary | std::ios::app) << '\n';
    }
    o.apply(event);
    o.next_seq_ = std::max<std::uint64_t>(o.next_seq_, event.value("seq", std::uint64_t{0}) + 1);
    pos = complete ? nl + 1 : raw.size();
    good_end = pos;
  }
  if (good_end < raw.size()) fs::resize_file(log, good_end);
  if (o.state_.founded_at.empty()) throw StoreError("event log does not start with store_initialized");
  return o;
}

std::string Orchestrator::now_iso() const { return format_time(options_.clock()); }

void Orchestrator::write_line(const json& event) {
  std::ofstream out(fs::path(root_) / "events.ndjson", std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot append to the event log in " + root_);
  out << event.dump() << '\n';
  if (!out.flush()) throw StoreError("event log write failed in " + root_);
}

void Orchestrator::append(json event) {
  event["seq"] = next_seq_++;
  write_line(event);
  apply(event);
}

void Orchestrator::apply(const json& event) {
  const auto type = event.value("type", std::string());
  if (!own_event_types().count(type)) {
    state_.archive.apply(event);
    ++state_.event_count;
    return;
  }
  try {
    if (type == "store_initialized") {
      state_.founded_at = event.at("founded_at").get<std::string>();
    } else if (type == "cycle_completed" || type == "cycle_aborted") {
      state_.cycles.push_back(event.at("report").get<CycleReport>());
      state_.last_cycle_at = event.at("at").get<std::string>();
    } else if (type == "milestone_fired") {
      state_.milestones.push_back(milestone_from_json(event.at("milestone")));
    } else if (type == "title_added") {
      state_.titles.push_back(event.at("title_id").get<std::string>());
    } else if (type == "export_completed") {
      state_.exports.push_back(event);
    }
  } catch (const json::exception& e) {
    throw StoreError("malformed " + type + " event: " + e.what());
  }
  ++state_.event_count;
}

void Orchestrator::persist_snapshot() const {
  write_atomic(fs::path(root_) / "snapshot.json", state_.snapshot().dump(2) + "\n");
}

void Orchestrator::audit(json entry) {
  if (!entry.contains("timestamp")) entry["timestamp"] = now_iso();
  gateway::FileAuditLog((fs::path(root_) / "audit.ndjson").string()).record(entry);
}

std::vector<json> Orchestrator::audit_entries() const {
  std::vector<json> out;
  std::ifstream in(fs::path(root_) / "audit.ndjson");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cycles

CycleReport Orchestrator::run_cycle(std::uint64_t seed) {
  auto generator = options_.engines.generator(seed);
  auto evaluator = options_.engines.evaluator(state_.persona());
  return cycle(seed, *generator, *evaluator, now_iso());
}

CycleReport Orchestrator::run_cycle(std::uint64_t seed, ideation::ProposalGenerator& generator,
                                    const ideation::PairwiseEvaluator& evaluator) {
  return cycle(seed, generator, evaluator, now_iso());
}

CycleReport Orchestrator::cycle(std::uint64_t seed, ideation::ProposalGenerator& generator,
                                const ideation::PairwiseEvaluator& evaluator, const std::string& at) {
  char id[16];
  std::snprintf(id, sizeof id, "C%04zu", state_.cycles.size() + 1);
  CycleReport report;
  report.cycle_id = id;
  report.seed = seed;

  const auto& cfg = state_.config;
  auto& archive = state_.archive;
  std::vector<ideation::MatchOutcome> partial;
  {
    SinkGuard guard(archive, [this](const json& e) {
      auto line = e;
      line["seq"] = next_seq_++;
      write_line(line);
      ++state_.event_count;
    });
    try {
      const auto persona = state_.persona();
      const int n = options_.batch_size > 0 ? options_.batch_size
                                            : static_cast<int>(cfg.get_integer("workflow.batch_size").value_or(24));
      auto batch = ideation::generate_batch(cfg, persona, archive, n, generator, ideation::batch_options(cfg, id));
      report.generated = batch.generated;
      report.deduplicated = batch.discarded.size();
      for (const auto& p : batch.proposals) archive.add_proposal(p);
      report.entrants = batch.proposals.size();
      if (batch.proposals.empty()) {
        report.warnings.push_back("no entrants after deduplication; tournament skipped");
      } else {
        auto bracket = ideation::seed_bracket(batch.proposals, seed);
        ideation::TournamentOptions topts;
        topts.id = std::string(id) + "-T";
        auto result = ideation::run_tournament(bracket, evaluator, topts);
        archive.record_tournament(result);
        report.tournament_id = result.id;
        report.rounds = static_cast<int>(result.rounds.size());
        report.champion = result.champion;

        const int wanted = static_cast<int>(cfg.get_integer("workflow.review_top_k").value_or(3));
        const int k = std::min<int>(wanted, static_cast<int>(report.entrants));
        if (k < wanted) {
          report.warnings.push_back("only " + std::to_string(report.entrants) + " entrants; flagging " +
                                    std::to_string(k));
        }
        auto packet = ideation::flag_for_review(result, k);
        archive.apply_review(packet);
        for (const auto& e : packet.entries) report.flagged.push_back(e.proposal.id);
        report.awaiting_review = !report.flagged.empty();
      }
    } catch (const ideation::TournamentAborted& e) {
      report.status = "aborted";
      report.error = e.kind() + ": " + e.what();
      partial = e.partial_transcripts();
    } catch (const Error& e) {
      report.status = "aborted";
      report.error = e.kind() + ": " + e.what();
    } catch (const std::exception& e) {
      report.status = "aborted";
      report.error = std::string("internal: ") + e.what();
    }
  }

  json event = {{"type", report.status == "aborted" ? "cycle_aborted" : "cycle_completed"},
                {"at", at},
                {"report", report}};
  if (!partial.empty()) event["partial_transcripts"] = partial;
  append(std::move(event));
  persist_snapshot();
  return report;
}

TickResult Orchestrator::tick(TimePoint now) {
  TickResult result;
  const auto& cfg = state_.config;
  const auto interval = cycle_interval(cfg.get_string("automation.frequency").value_or("biannual"));
  const auto founded = parse_time(state_.founded_at);
  const auto last = state_.last_cycle_at.empty() ? founded : parse_time(state_.last_cycle_at);
  const auto stamp = format_time(now);

  if (now - last >= interval) {
    char id[16];
    std::snprintf(id, sizeof id, "C%04zu", state_.cycles.size() + 1);
    const auto seed = text::fnv1a64(std::string("scheduled|") + id);
    auto generator = options_.engines.generator(seed);
    auto evaluator = options_.engines.evaluator(state_.persona());
    result.cycle = cycle(seed, *generator, *evaluator, stamp);
  }

  const auto elapsed = std::chrono::floor<std::chrono::days>(now - founded);
  result.milestones =
      milestone_check(state_.catalog_size(), elapsed, state_.fired(), MilestonePlan::from_config(cfg), stamp);
  for (const auto& m : result.milestones) append({{"type", "milestone_fired"}, {"at", stamp}, {"milestone", m}});
  if (!result.milestones.empty()) persist_snapshot();
  return result;
}

// ---------------------------------------------------------------------------
// Decisions

DecisionReceipt Orchestrator::decide(const ProposalId& id, DecisionAction action, const std::string& feedback,
                                     const std::string& actor) {
  json entry = {{"action", "decision"}, {"target", id}, {"decision", to_string(action)}, {"actor", actor}};
  try {
    const auto& p = state_.archive.proposal(id);
    if (state_.archive.project_for(id)) throw StateError("proposal " + id + " is already scheduled");
    if (p.status != ProposalStatus::flagged && p.status != ProposalStatus::needs_modification &&
        p.status != ProposalStatus::returned_for_refinement) {
      throw StateError("proposal " + id + " is " + std::string(to_string(p.status)) + " and not awaiting review");
    }
    EditorialDecision decision{id, action, feedback, actor, now_iso()};
    DecisionReceipt receipt;
    {
      SinkGuard guard(state_.archive, [this](const json& e) {
        auto line = e;
        line["seq"] = next_seq_++;
        write_line(line);
        ++state_.event_count;
      });
      state_.archive.record_decision(decision);
      if (action == DecisionAction::approve) receipt.project = state_.archive.assign_project(id);
    }
    receipt.decision = decision;
    receipt.status = state_.archive.proposal(id).status;
    entry["outcome"] = "recorded";
    entry["status"] = to_string(receipt.status);
    if (receipt.project) entry["project"] = receipt.project->project_id;
    audit(entry);
    persist_snapshot();
    return receipt;
  } catch (const Error& e) {
    entry["outcome"] = "refused";
    entry["error"] = e.kind();
    audit(entry);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Titles

std::string Orchestrator::title_dir(const std::string& id) const { return (fs::path(root_) / "titles" / id).string(); }

const std::string& Orchestrator::require_title(const std::string& id) const {
  auto it = std::find(state_.titles.begin(), state_.titles.end(), id);
  if (it == state_.titles.end()) throw NotFoundError("no title with id " + id);
  return *it;
}

void Orchestrator::add_title(const std::string& id, const std::string& title_config_json,
                             const std::string& quotations_json, const std::optional<std::string>& corpus_json) {
  static const std::regex valid(R"([A-Za-z0-9][A-Za-z0-9._-]*)");
  if (!std::regex_match(id, valid)) throw ContractError("title id '" + id + "' must be [A-Za-z0-9._-]");
  if (state_.has_title(id)) throw ContractError("title already in the catalog: " + id);
  resolve_store_config(root_, title_config_json);
  codex::parse_quotations(quotations_json);
  if (corpus_json) qa::FixtureChecker::from_json(json::parse(*corpus_json));

  const fs::path dir(title_dir(id));
  write_atomic(dir / "config.json", title_config_json);
  write_atomic(dir / "quotations.json", quotations_json);
  if (corpus_json) write_atomic(dir / "corpus.json", *corpus_json);
  append({{"type", "title_added"}, {"title_id", id}, {"at", now_iso()}});
  persist_snapshot();
}

config::ResolvedConfig Orchestrator::title_config(const std::string& id) const {
  require_title(id);
  return resolve_store_config(root_, read_text(fs::path(title_dir(id)) / "config.json"));
}

std::vector<codex::QuotationRecord> Orchestrator::quotations(const std::string& id) const {
  require_title(id);
  return codex::parse_quotations(read_text(fs::path(title_dir(id)) / "quotations.json"));
}

std::vector<qa::VerificationRecord> Orchestrator::verification(const std::string& id) const {
  require_title(id);
  const auto path = fs::path(title_dir(id)) / "verification.json";
  if (!fs::exists(path)) return {};
  return json::parse(read_text(path)).at("records").get<std::vector<qa::VerificationRecord>>();
}

std::vector<qa::VerificationRecord> Orchestrator::verify_title(const std::string& id, const qa::SourceChecker& checker) {
  auto quotes = quotations(id);
  auto records = qa::verify_all(quotes, checker);
  std::size_t verified = 0;
  for (const auto& r : records) verified += r.status == qa::VerificationStatus::verified;
  json doc = {{"title_id", id}, {"method", checker.method()}, {"records", records}};
  write_atomic(fs::path(title_dir(id)) / "verification.json", doc.dump(2) + "\n");
  append({{"type", "title_verified"},
          {"title_id", id},
          {"at", now_iso()},
          {"verified", verified},
          {"total", records.size()}});
  persist_snapshot();
  return records;
}

std::vector<qa::VerificationRecord> Orchestrator::verify_title(const std::string& id) {
  require_title(id);
  const auto path = fs::path(title_dir(id)) / "corpus.json";
  if (!fs::exists(path)) throw NotFoundError("title " + id + " has no corpus.json to verify against");
  return verify_title(id, qa::FixtureChecker::from_json(json::parse(read_text(path))));
}

namespace {

// Quotations carry the verified flag only when the stored verification says so.
std::vector<codex::QuotationRecord> with_verification(std::vector<codex::QuotationRecord> quotes,
                                                      const std::vector<qa::VerificationRecord>& records) {
  for (auto& q : quotes) q.verified = false;
  if (!records.empty()) qa::apply_verification(quotes, records);
  return quotes;
}

codex::CodexManifest manifest_for(const config::ResolvedConfig& cfg) {
  auto manifest = codex::CodexManifest::pilsa_default();
  if (auto n = cfg.get_integer("codex_types.quotation_count")) manifest.quotation_count = static_cast<int>(*n);
  return manifest;
}

bool is_pilsa(const config::ResolvedConfig& cfg) {
  auto enabled = cfg.get_strings("codex_types.enabled").value_or(std::vector<std::string>{});
  return std::find(enabled.begin(), enabled.end(), "pilsa") != enabled.end();
}

}  // namespace

Readiness Orchestrator::readiness(const std::string& id) const {
  Readiness r;
  r.title_id = id;
  const auto cfg = title_config(id);
  r.report.merge(config::validate(cfg, config::RuleSet::builtin()));

  auto records = verification(id);
  auto quotes = with_verification(quotations(id), records);
  r.quotations = quotes.size();
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    std::string status = "unverified";
    for (const auto& rec : records) {
      if (rec.quotation_index == i) status = std::string(qa::to_string(rec.status));
    }
    if (quotes[i].verified) {
      ++r.verified;
    } else {
      r.report.add(Layer::business_rule, "quotations[" + std::to_string(i) + "].verified",
                   "quotation " + std::to_string(i) + " is " + status + "; export needs every quotation verified");
    }
  }
  if (is_pilsa(cfg)) {
    // Structure only; verification was reported above.
    auto structural = quotes;
    for (auto& q : structural) q.verified = true;
    r.report.merge(codex::validate_manifest(manifest_for(cfg), structural, manifest_for(cfg).quotation_count));
  }
  try {
    const auto row = qa::row_from_config(cfg);
    r.report.merge(qa::validate_rows(std::vector<qa::DistributionRow>{row}, cfg.strings("pricing.markets")));
  } catch (const Error& e) {
    r.report.add(Layer::semantic, "pricing", e.what());
  }
  return r;
}

codex::CodexBuild Orchestrator::build_title(const std::string& id, const codex::FontAvailability& fonts) const {
  const auto cfg = title_config(id);
  const auto quotes = with_verification(quotations(id), verification(id));
  return codex::build_codex(cfg, manifest_for(cfg), quotes, fonts);
}

// ---------------------------------------------------------------------------
// Export

std::string Orchestrator::configured_token() const {
  if (!options_.approve_token.empty()) return options_.approve_token;
  if (const char* env = std::getenv("IMPRINT_APPROVE_TOKEN"); env && *env) return env;
  const auto path = fs::path(root_) / "config" / "service.json";
  if (fs::exists(path)) {
    try {
      return json::parse(read_text(path)).value("approve_token", std::string());
    } catch (const json::exception& e) {
      throw StoreError("config/service.json: " + std::string(e.what()));
    }
  }
  return {};
}

ExportReceipt Orchestrator::export_titles(const std::vector<std::string>& ids, const std::string& approve_token,
                                          const std::string& actor) {
  json entry = {{"action", "distribution_submission"}, {"titles", ids}, {"actor", actor}};
  auto refuse = [&](const std::string& outcome, const Error& e) {
    entry["outcome"] = outcome;
    entry["error"] = e.kind();
    audit(entry);
  };
  try {
    auto requirement = gateway::gate("distribution_submission");
    const auto expected = configured_token();
    if (expected.empty()) throw GateError("no approval token is configured for this store; export is disabled");
    if (approve_token.empty() || !tokens_match(approve_token, expected)) {
      throw GateError("distribution submission needs a valid human approval token");
    }
    if (ids.empty()) throw UsageError("name at least one title to export");
    requirement.approve(actor, now_iso(), "approval token presented");

    std::vector<Readiness> blocking;
    std::vector<qa::DistributionRow> rows;
    std::optional<config::ResolvedConfig> first;
    for (const auto& id : ids) {
      auto ready = readiness(id);
      if (!ready.ready()) {
        blocking.push_back(std::move(ready));
        continue;
      }
      auto cfg = title_config(id);
      if (first && cfg.strings("pricing.markets") != first->strings("pricing.markets")) {
        throw ContractError("titles in one export must share the market list; " + id + " differs");
      }
      if (!first) first = cfg;
      rows.push_back(qa::row_from_config(cfg));
    }
    if (!blocking.empty()) throw ExportRefused(std::move(blocking));

    auto exported = qa::export_distribution_csv(rows, *first, requirement);
    if (!exported.csv) {
      Readiness r;
      r.title_id = text::join(ids, ",");
      r.report = exported.report;
      throw ExportRefused({r});
    }
    char name[32];
    std::snprintf(name, sizeof name, "EXP-%04zu.csv", state_.exports.size() + 1);
    const auto rel = std::string("exports/") + name;
    write_atomic(fs::path(root_) / rel, *exported.csv);

    ExportReceipt receipt{ids, rel, *exported.csv, *requirement.approval};
    json approval = {{"actor", receipt.approval.actor}, {"timestamp", receipt.approval.timestamp}};
    append({{"type", "export_completed"}, {"at", receipt.approval.timestamp}, {"titles", ids}, {"file", rel},
            {"approval", approval}});
    entry["outcome"] = "exported";
    entry["file"] = rel;
    entry["approval"] = approval;
    audit(entry);
    persist_snapshot();
    return receipt;
  } catch (const GateError& e) {
    refuse("refused_gate", e);
    throw;
  } catch (const ExportRefused& e) {
    refuse("refused_qa", e);
    throw;
  } catch (const Error& e) {
    refuse("refused", e);
    throw;
  }
}

}  // namespace imprint::orchestrator
