// imprintctl: command-line front end for an imprint store.
#include <cstdlib>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "imprint/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace imprint;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 refused or failed checks, 2 bad input, 3 gate, 4 not found, 5 state conflict.
int exit_code_for(const std::string& kind) {
  if (kind == "usage" || kind == "contract" || kind == "parse" || kind == "range" || kind == "resolution") return 2;
  if (kind == "gate") return 3;
  if (kind == "not_found") return 4;
  if (kind == "state") return 5;
  return 1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

bool live_models() { return !env_or("IMPRINT_LLM_BASE_URL", "").empty(); }

std::shared_ptr<gateway::Gateway> make_gateway(const std::string& store, const config::ResolvedConfig& cfg) {
  auto audit = std::make_shared<gateway::FileAuditLog>((fs::path(store) / "gateway_audit.ndjson").string());
  return std::make_shared<gateway::Gateway>(orchestrator::registry_from_env(cfg), gateway::GatewayOptions{}, audit);
}

orchestrator::Orchestrator open_store(const std::string& store, int batch = 0) {
  orchestrator::Options options;
  options.batch_size = batch;
  auto o = orchestrator::Orchestrator::open(store, options);
  if (live_models()) {
    auto cfg = std::make_shared<const config::ResolvedConfig>(o.state().config);
    o.set_engines(orchestrator::Engines::with_gateway(make_gateway(store, *cfg), cfg));
  }
  return o;
}

json status_json(const orchestrator::State& s) {
  std::map<std::string, int> by_status;
  for (const auto& [id, p] : s.archive.proposals()) ++by_status[std::string(to_string(p.status))];
  return {{"founded_at", s.founded_at},
          {"events", s.event_count},
          {"cycles", s.cycles.size()},
          {"last_cycle", s.cycles.empty() ? json(nullptr) : json(s.cycles.back())},
          {"proposals", by_status},
          {"awaiting_review", s.archive.with_status(ProposalStatus::flagged).size()},
          {"projects", s.archive.projects().size()},
          {"titles", s.titles},
          {"exports", s.exports.size()},
          {"milestones", s.milestones}};
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imprint pipeline: configuration, ideation, QA, distribution and the review API"};
  app.require_subcommand(1);
  std::string store = env_or("IMPRINT_STORE", "imprint-store");
  app.add_option("--store", store, "Store directory (env IMPRINT_STORE)");

  // init
  auto* init = app.add_subcommand("init", "Create a store from publisher and imprint configuration files");
  std::string init_publisher, init_imprint, init_token;
  init->add_option("--publisher", init_publisher)->required()->check(CLI::ExistingFile);
  init->add_option("--imprint", init_imprint)->required()->check(CLI::ExistingFile);
  init->add_option("--approve-token", init_token, "Written to config/service.json");

  // config validate
  auto* config_cmd = app.add_subcommand("config", "Configuration tools");
  config_cmd->require_subcommand(1);
  auto* validate = config_cmd->add_subcommand("validate", "Resolve and validate a three-level hierarchy");
  std::string v_publisher, v_imprint, v_title;
  validate->add_option("publisher", v_publisher)->required()->check(CLI::ExistingFile);
  validate->add_option("imprint", v_imprint)->required()->check(CLI::ExistingFile);
  validate->add_option("title", v_title)->check(CLI::ExistingFile);

  // ideate / cycle / tick
  auto* ideate = app.add_subcommand("ideate", "Proposal ideation");
  ideate->require_subcommand(1);
  auto* ideate_run = ideate->add_subcommand("run", "Run one ideation cycle with an explicit batch size");
  int batch = 0;
  std::uint64_t seed = 0;
  ideate_run->add_option("--batch", batch)->required()->check(CLI::PositiveNumber);
  ideate_run->add_option("--seed", seed)->required();

  auto* cycle = app.add_subcommand("cycle", "Scheduled cycles");
  cycle->require_subcommand(1);
  auto* cycle_run = cycle->add_subcommand("run", "Run one cycle now");
  cycle_run->add_option("--seed", seed)->required();

  auto* tick = app.add_subcommand("tick", "Run due work: a cycle when the interval has elapsed, then milestones");
  std::string tick_now;
  tick->add_option("--now", tick_now, "UTC timestamp, default the current time");

  // tournament show
  auto* tournament = app.add_subcommand("tournament", "Tournament records");
  tournament->require_subcommand(1);
  auto* show = tournament->add_subcommand("show", "Print a tournament with its transcripts");
  std::string tournament_id;
  show->add_option("id", tournament_id)->required();

  // decide
  auto* decide = app.add_subcommand("decide", "Record an editorial decision on a flagged proposal");
  std::string proposal_id, action, feedback, actor = env_or("IMPRINT_ACTOR", env_or("USER", ""));
  decide->add_option("proposal", proposal_id)->required();
  decide->add_option("--action", action, "approve | request_modifications | return_for_refinement | reject")
      ->required();
  decide->add_option("--feedback", feedback);
  decide->add_option("--actor", actor, "Defaults to IMPRINT_ACTOR or USER");

  // title add
  auto* title = app.add_subcommand("title", "Catalog titles");
  title->require_subcommand(1);
  auto* title_add = title->add_subcommand("add", "Add a title with its quotations");
  std::string title_id, title_config, title_quotes, title_corpus;
  title_add->add_option("id", title_id)->required();
  title_add->add_option("--config", title_config, "Title-level configuration")->required()->check(CLI::ExistingFile);
  title_add->add_option("--quotations", title_quotes)->required()->check(CLI::ExistingFile);
  title_add->add_option("--corpus", title_corpus, "Source corpus for verification")->check(CLI::ExistingFile);

  // qa
  auto* qa_cmd = app.add_subcommand("qa", "Quality assurance");
  qa_cmd->require_subcommand(1);
  auto* verify = qa_cmd->add_subcommand("verify", "Verify a title's quotations");
  verify->add_option("title", title_id)->required();
  auto* ready = qa_cmd->add_subcommand("readiness", "Show what blocks a title from export");
  ready->add_option("title", title_id)->required();

  // export csv
  auto* export_cmd = app.add_subcommand("export", "Distribution export");
  export_cmd->require_subcommand(1);
  auto* csv = export_cmd->add_subcommand("csv", "Export distribution rows for QA-green titles");
  std::vector<std::string> export_ids;
  std::string token;
  csv->add_option("titles", export_ids)->required();
  csv->add_option("--approve-token", token, "Human approval token (required by the gate)");
  csv->add_option("--actor", actor);

  // codex build
  auto* codex_cmd = app.add_subcommand("codex", "Codex production");
  codex_cmd->require_subcommand(1);
  auto* build = codex_cmd->add_subcommand("build", "Emit interior and cover sources for a title");
  std::vector<std::string> fonts;
  build->add_option("title", title_id)->required();
  build->add_option("--available-font", fonts, "Installed font names; others fall back to free substitutes");

  // serve / status
  auto* serve = app.add_subcommand("serve", "Serve the review API");
  int port = std::atoi(env_or("IMPRINT_PORT", "8080").c_str());
  std::string host = "127.0.0.1";
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  auto* status = app.add_subcommand("status", "Summarize the store");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) {
      orchestrator::Orchestrator::init(store, slurp(init_publisher), slurp(init_imprint));
      if (!init_token.empty()) {
        std::ofstream(fs::path(store) / "config" / "service.json") << json{{"approve_token", init_token}}.dump(2)
                                                                   << "\n";
      }
      std::cout << "initialized " << store << "\n";
    } else if (*validate) {
      using config::Level;
      auto cfg = config::resolve(config::parse_config(slurp(v_publisher), Level::publisher),
                                 config::parse_config(slurp(v_imprint), Level::imprint),
                                 v_title.empty() ? config::ConfigNode(Level::title)
                                                 : config::parse_config(slurp(v_title), Level::title));
      auto report = config::validate(cfg, config::RuleSet::builtin());
      for (const auto& f : report.findings()) std::cout << format_finding(f) << "\n";
      return report.passed() ? 0 : 1;
    } else if (*ideate_run) {
      auto o = open_store(store, batch);
      auto r = o.run_cycle(seed);
      print(r);
      return r.status == "completed" ? 0 : 1;
    } else if (*cycle_run) {
      auto o = open_store(store);
      auto r = o.run_cycle(seed);
      print(r);
      return r.status == "completed" ? 0 : 1;
    } else if (*tick) {
      auto o = open_store(store);
      auto now = tick_now.empty() ? std::chrono::floor<std::chrono::seconds>(orchestrator::Clock::now())
                                  : orchestrator::parse_time(tick_now);
      auto r = o.tick(now);
      print({{"cycle", r.cycle ? json(*r.cycle) : json(nullptr)}, {"milestones", r.milestones}});
    } else if (*show) {
      auto o = open_store(store);
      print(o.state().archive.tournament(tournament_id));
    } else if (*decide) {
      auto o = open_store(store);
      auto r = o.decide(proposal_id, parse_decision_action(action), feedback, actor);
      print({{"decision", r.decision},
             {"status", to_string(r.status)},
             {"project", r.project ? json(*r.project) : json(nullptr)}});
    } else if (*title_add) {
      auto o = open_store(store);
      std::optional<std::string> corpus;
      if (!title_corpus.empty()) corpus = slurp(title_corpus);
      o.add_title(title_id, slurp(title_config), slurp(title_quotes), corpus);
      std::cout << "added " << title_id << "\n";
    } else if (*verify) {
      auto o = open_store(store);
      std::vector<qa::VerificationRecord> records;
      if (fs::exists(fs::path(store) / "titles" / title_id / "corpus.json")) {
        records = o.verify_title(title_id);
      } else {
        auto cfg = o.title_config(title_id);
        auto gw = make_gateway(store, cfg);
        records = o.verify_title(title_id, qa::GatewayChecker(*gw, o.state().persona(), cfg));
      }
      std::size_t verified = 0;
      for (const auto& r : records) {
        verified += r.status == qa::VerificationStatus::verified;
        std::cout << r.quotation_index + 1 << "\t" << qa::to_string(r.status) << "\t" << r.appendix_entry << "\n";
      }
      return verified == records.size() ? 0 : 1;
    } else if (*ready) {
      auto o = open_store(store);
      auto r = o.readiness(title_id);
      for (const auto& f : r.report.findings()) std::cout << format_finding(f) << "\n";
      std::cout << (r.ready() ? "ready" : "blocked") << " (" << r.verified << "/" << r.quotations
                << " quotations verified)\n";
      return r.ready() ? 0 : 1;
    } else if (*csv) {
      auto o = open_store(store);
      try {
        auto receipt = o.export_titles(export_ids, token, actor);
        std::cout << "wrote " << (fs::path(store) / receipt.file).string() << " (approved by "
                  << receipt.approval.actor << ")\n";
      } catch (const orchestrator::ExportRefused& e) {
        for (const auto& r : e.blocking()) {
          for (const auto& f : r.report.findings()) std::cout << r.title_id << ": " << format_finding(f) << "\n";
        }
        throw;
      }
    } else if (*build) {
      auto o = open_store(store);
      auto result = o.build_title(title_id, codex::FontSet(std::set<std::string>(fonts.begin(), fonts.end())));
      for (const auto& f : result.report.findings()) std::cout << format_finding(f) << "\n";
      if (!result.report.passed()) return 1;
      const auto dir = fs::path(store) / "titles" / title_id / "build";
      fs::create_directories(dir);
      std::ofstream(dir / "interior.tex", std::ios::binary) << result.interior;
      std::ofstream(dir / "cover.tex", std::ios::binary) << result.cover;
      std::cout << "wrote " << (dir / "interior.tex").string() << " and cover.tex (" << result.layout.pages.size()
                << " quotation-block pages, cover " << result.color.hex() << ")\n";
    } else if (*serve) {
      orchestrator::Service service(open_store(store));
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      const int bound = service.start(host, port);
      std::cout << "serving " << store << " on http://" << host << ":" << bound << "\n" << std::flush;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      service.stop();
    } else if (*status) {
      print(status_json(open_store(store).state()));
    }
  } catch (const Error& e) {
    std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
