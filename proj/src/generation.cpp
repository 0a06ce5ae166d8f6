#include <array>
#include <cstdio>
#include <set>

#include "imprint/ideation.hpp"
#include "imprint/random.hpp"
#include "imprint/text.hpp"

namespace imprint::ideation {

namespace {

// Word pools for the mock. Large enough that two random proposals share few tokens.
constexpr std::array<std::string_view, 32> kAdjectives = {
    "Silent",   "Luminous", "Fractured", "Patient",  "Hidden",   "Quantum",   "Ancient",  "Restless",
    "Woven",    "Distant",  "Burning",   "Hollow",   "Gentle",   "Recursive", "Frozen",   "Untold",
    "Scattered", "Verdant", "Crimson",   "Measured", "Wandering", "Luminal",  "Brittle",  "Tidal",
    "Ordinary", "Sovereign", "Layered",  "Porous",   "Errant",   "Quiet",     "Radiant",  "Obscure"};
constexpr std::array<std::string_view, 32> kNouns = {
    "Archive",  "Lattice",   "Meridian", "Harbor",   "Cipher",   "Orchard",  "Ledger",   "Compass",
    "Kiln",     "Vessel",    "Margin",   "Threshold", "Garden",  "Engine",   "Atlas",    "Chorus",
    "Mirror",   "Bridge",    "Signal",   "Tapestry", "Frontier", "Almanac",  "Circuit",  "Estuary",
    "Monastery", "Observatory", "Canopy", "Furnace", "Library",  "Horizon",  "Refuge",   "Cartography"};
constexpr std::array<std::string_view, 24> kSubjects = {
    "attention",  "memory",    "climate",   "language",   "machines",   "grief",     "cities",   "oceans",
    "trust",      "scarcity",  "ritual",    "translation", "forests",   "numbers",   "silence",  "migration",
    "craft",      "prediction", "solitude", "inheritance", "repair",    "borders",   "weather",  "dreams"};
constexpr std::array<std::string_view, 48> kAbstractWords = {
    "explores",   "traces",    "maps",      "questions", "recovers",  "reframes",  "catalogs",   "contrasts",
    "practices",  "histories", "methods",   "futures",   "communities", "institutions", "tools",  "habits",
    "evidence",   "archives",  "letters",   "field",     "notes",     "experiments", "interviews", "essays",
    "readers",    "scholars",  "builders",  "teachers",  "engineers", "poets",     "farmers",    "pilgrims",
    "resilience", "uncertainty", "care",    "risk",      "time",      "scale",     "belonging",  "patience",
    "century",    "decade",    "island",    "valley",    "coast",     "frontier",  "network",    "household"};
constexpr std::array<std::string_view, 6> kScopes = {"45,000 words", "60,000 words", "75,000 words",
                                                     "90,000 words", "120 pages",    "200 pages"};
constexpr std::array<std::string_view, 5> kParts = {"Origins", "Method", "Cases", "Tensions", "Prospects"};

std::string pick(std::mt19937_64& gen, const auto& pool) {
  return std::string(pool[rng::below(gen, pool.size())]);
}

}  // namespace

std::vector<BookProposal> MockGenerator::generate(const persona::PublisherPersona&,
                                                  const persona::GenerationPayload& payload) {
  std::mt19937_64 gen(seed_ ^ 0x5eedf00dULL);
  std::set<std::string> titles;
  std::vector<BookProposal> out;
  const std::string audience = payload.audience.empty() ? "general readers" : payload.audience;
  while (static_cast<int>(out.size()) < payload.count) {
    BookProposal p;
    auto subject = pick(gen, kSubjects);
    p.working_title = "The " + pick(gen, kAdjectives) + " " + pick(gen, kNouns) + " of " + subject;
    if (!titles.insert(p.working_title).second) continue;
    std::string abstract = "A study of " + subject;
    for (int i = 0; i < 10; ++i) abstract += " " + pick(gen, kAbstractWords);
    p.abstract = abstract + ".";
    p.target_audience = audience;
    p.estimated_scope = pick(gen, kScopes);
    for (const auto& part : kParts) {
      if (rng::below(gen, 2) == 0) p.outline.push_back(std::string(part) + ": " + pick(gen, kAbstractWords));
    }
    if (p.outline.empty()) p.outline.push_back("Origins: " + subject);
    out.push_back(std::move(p));
  }
  return out;
}

GatewayGenerator::GatewayGenerator(const gateway::Gateway& gateway, const config::ResolvedConfig& cfg,
                                   const persona::PromptTemplates& templates)
    : gateway_(gateway), cfg_(cfg), templates_(templates) {}

std::vector<BookProposal> GatewayGenerator::generate(const persona::PublisherPersona& persona,
                                                     const persona::GenerationPayload& payload) {
  auto bundle = persona::assemble_prompt(persona, TaskKind::creative, payload, templates_);
  auto res = gateway_.call(gateway::make_request(std::move(bundle), cfg_));
  return parse_proposals(res.text);
}

BatchOptions batch_options(const config::ResolvedConfig& cfg, std::string cycle_id) {
  BatchOptions opts;
  opts.cycle_id = std::move(cycle_id);
  if (auto t = cfg.get_number("workflow.duplicate_threshold")) opts.duplicate_threshold = *t;
  return opts;
}

Batch generate_batch(const config::ResolvedConfig& cfg, const persona::PublisherPersona& persona,
                     const ProposalArchive& archive, int n, ProposalGenerator& generator,
                     const BatchOptions& options) {
  if (n < 1) throw UsageError("batch size must be at least 1, got " + std::to_string(n));
  if (!(options.duplicate_threshold >= 0.0 && options.duplicate_threshold <= 1.0)) {
    throw UsageError("duplicate threshold must lie in [0,1]");
  }
  const SimilarityEngine& engine = options.engine ? *options.engine : default_similarity();

  persona::GenerationPayload payload;
  payload.count = n;
  payload.imprint = cfg.string("identity.imprint");
  payload.genres = cfg.strings("publishing_focus.primary_genres");
  payload.audience = cfg.string("publishing_focus.target_audience");
  payload.avoid = archive.avoid_list();

  auto raw = generator.generate(persona, payload);
  if (raw.size() > static_cast<std::size_t>(n)) raw.resize(static_cast<std::size_t>(n));

  const auto rejected = archive.with_status(ProposalStatus::rejected);
  Batch batch;
  batch.generated = raw.size();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto p = std::move(raw[i]);
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-%03zu", i + 1);
    p.id = options.cycle_id + suffix;
    p.origin_cycle = options.cycle_id;
    p.status = ProposalStatus::candidate;
    check_proposal(p);
    bool duplicate = false;
    for (const auto& r : rejected) {
      if (engine.score(p, r) >= options.duplicate_threshold) {
        duplicate = true;
        break;
      }
    }
    (duplicate ? batch.discarded : batch.proposals).push_back(std::move(p));
  }
  return batch;
}

}  // namespace imprint::ideation
