#include <algorithm>
#include <cctype>
#include <future>

#include "imprint/ideation.hpp"
#include "imprint/random.hpp"
#include "imprint/text.hpp"

namespace imprint::ideation {

// ---------------------------------------------------------------------------
// Similarity

std::set<std::string> normalized_tokens(const BookProposal& p) {
  std::string joined = p.working_title + " " + p.abstract;
  for (const auto& section : p.outline) joined += " " + section;
  for (char& c : joined) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && !std::isalnum(u)) c = ' ';
  }
  auto words = text::split_whitespace(text::to_lower_ascii(joined));
  return {words.begin(), words.end()};
}

double JaccardSimilarity::score(const BookProposal& a, const BookProposal& b) const {
  auto ta = normalized_tokens(a);
  auto tb = normalized_tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  return static_cast<double>(common) / static_cast<double>(ta.size() + tb.size() - common);
}

const SimilarityEngine& default_similarity() {
  static const JaccardSimilarity engine;
  return engine;
}

double similarity(const BookProposal& a, const BookProposal& b, const SimilarityEngine& engine) {
  return engine.score(a, b);
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const CriterionJudgment& c) {
  j = {{"criterion", c.criterion}, {"prefers", c.prefers}, {"justification", c.justification}};
}
void from_json(const nlohmann::json& j, CriterionJudgment& c) {
  c.criterion = j.at("criterion").get<std::string>();
  c.prefers = j.at("prefers").get<std::string>();
  c.justification = j.value("justification", std::string());
}

void to_json(nlohmann::json& j, const MatchOutcome& m) {
  j = {{"a", m.a},           {"b", m.b},           {"winner", m.winner},
       {"rationale", m.rationale}, {"judgments", m.judgments}, {"round", m.round}};
}
void from_json(const nlohmann::json& j, MatchOutcome& m) {
  m.a = j.at("a").get<std::string>();
  m.b = j.at("b").get<std::string>();
  m.winner = j.at("winner").get<std::string>();
  m.rationale = j.value("rationale", std::string());
  m.judgments = j.value("judgments", std::vector<CriterionJudgment>{});
  m.round = j.value("round", 0);
}

void to_json(nlohmann::json& j, const Bracket& b) {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& id : b.entrants) props.push_back(b.proposals.at(id));
  j = {{"seed", b.seed}, {"entrants", b.entrants}, {"byes", b.byes}, {"rounds", b.rounds}, {"proposals", props}};
}
void from_json(const nlohmann::json& j, Bracket& b) {
  b.seed = j.at("seed").get<std::uint64_t>();
  b.entrants = j.at("entrants").get<std::vector<std::string>>();
  b.byes = j.at("byes").get<std::vector<std::string>>();
  b.rounds = j.at("rounds").get<int>();
  b.proposals.clear();
  for (const auto& p : j.at("proposals")) {
    auto proposal = p.get<BookProposal>();
    b.proposals[proposal.id] = proposal;
  }
}

void to_json(nlohmann::json& j, const TournamentResult& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& rr : r.rounds) rounds.push_back({{"number", rr.number}, {"byes", rr.byes}, {"matches", rr.matches}});
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& s : r.ranking) {
    ranking.push_back(
        {{"id", s.id}, {"eliminated_in", s.eliminated_in}, {"wins", s.wins}, {"seed_position", s.seed_position}});
  }
  j = {{"id", r.id},       {"bracket", r.bracket}, {"rounds", rounds}, {"transcripts", r.transcripts},
       {"ranking", ranking}, {"champion", r.champion}};
}
void from_json(const nlohmann::json& j, TournamentResult& r) {
  r.id = j.at("id").get<std::string>();
  r.bracket = j.at("bracket").get<Bracket>();
  r.rounds.clear();
  for (const auto& rr : j.at("rounds")) {
    r.rounds.push_back({rr.at("number").get<int>(), rr.at("byes").get<std::vector<std::string>>(),
                        rr.at("matches").get<std::vector<std::size_t>>()});
  }
  r.transcripts = j.at("transcripts").get<std::vector<MatchOutcome>>();
  r.ranking.clear();
  for (const auto& s : j.at("ranking")) {
    r.ranking.push_back({s.at("id").get<std::string>(), s.at("eliminated_in").get<int>(), s.at("wins").get<int>(),
                         s.at("seed_position").get<std::size_t>()});
  }
  r.champion = j.at("champion").get<std::string>();
}

std::vector<ProposalId> TournamentResult::ranked_ids() const {
  std::vector<ProposalId> out;
  for (const auto& s : ranking) out.push_back(s.id);
  return out;
}

std::vector<MatchOutcome> TournamentResult::matches_of(const ProposalId& id) const {
  std::vector<MatchOutcome> out;
  for (const auto& m : transcripts) {
    if (m.a == id || m.b == id) out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluators

ComparatorEvaluator::ComparatorEvaluator(Predicate a_wins, std::string label)
    : a_wins_(std::move(a_wins)), label_(std::move(label)) {}

MatchOutcome ComparatorEvaluator::evaluate(const BookProposal& a, const BookProposal& b) const {
  const bool a_wins = a_wins_(a, b);
  const auto& w = a_wins ? a : b;
  MatchOutcome out;
  out.a = a.id;
  out.b = b.id;
  out.winner = w.id;
  out.rationale = label_ + " prefers \"" + w.working_title + "\"";
  for (const auto& c : kCriteria) {
    out.judgments.push_back({std::string(c.key), w.id, label_ + " decision applied to " + std::string(c.label)});
  }
  return out;
}

MockEvaluator::MockEvaluator()
    : ComparatorEvaluator(
          [](const BookProposal& a, const BookProposal& b) {
            if (a.working_title != b.working_title) return a.working_title < b.working_title;
            return a.id < b.id;
          },
          "lexicographic mock") {}

namespace {

// First balanced {...} or [...] region, so fenced or chatty replies still parse.
std::optional<nlohmann::json> extract_json(const std::string& raw, char open, char close) {
  auto start = raw.find(open);
  auto end = raw.rfind(close);
  if (start == std::string::npos || end == std::string::npos || end < start) return std::nullopt;
  auto parsed = nlohmann::json::parse(raw.substr(start, end - start + 1), nullptr, false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

}  // namespace

std::vector<BookProposal> parse_proposals(const std::string& raw) {
  auto doc = extract_json(raw, '[', ']');
  if (!doc || !doc->is_array()) throw EvaluationError("generator reply is not a JSON array of proposals", raw);
  std::vector<BookProposal> out;
  for (const auto& item : *doc) {
    try {
      BookProposal p;
      p.working_title = text::trim(item.at("working_title").get<std::string>());
      p.abstract = text::trim(item.at("abstract").get<std::string>());
      p.target_audience = item.value("target_audience", std::string());
      p.estimated_scope = item.value("estimated_scope", std::string());
      if (item.contains("estimated_scope") && !item["estimated_scope"].is_string()) {
        p.estimated_scope = item["estimated_scope"].dump();
      }
      p.outline = item.value("outline", std::vector<std::string>{});
      check_proposal(p);
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw EvaluationError(std::string("generator reply has a malformed proposal: ") + e.what(), raw);
    } catch (const ContractError& e) {
      throw EvaluationError(std::string("generator reply has an incomplete proposal: ") + e.what(), raw);
    }
  }
  return out;
}

MatchOutcome parse_judgment(const std::string& raw, const BookProposal& a, const BookProposal& b) {
  auto doc = extract_json(raw, '{', '}');
  if (!doc || !doc->is_object()) throw EvaluationError("evaluator reply is not a JSON object", raw);
  auto side = [&](const nlohmann::json& v, const char* what) -> ProposalId {
    if (!v.is_string()) throw EvaluationError(std::string("evaluator reply has no usable ") + what, raw);
    auto s = text::trim(v.get<std::string>());
    if (s == "A" || s == "a" || s == a.id) return a.id;
    if (s == "B" || s == "b" || s == b.id) return b.id;
    throw EvaluationError(std::string("evaluator reply names an unknown side for ") + what + ": " + s, raw);
  };
  MatchOutcome out;
  out.a = a.id;
  out.b = b.id;
  out.winner = side(doc->value("winner", nlohmann::json()), "winner");
  auto rationale = doc->value("rationale", nlohmann::json());
  if (!rationale.is_string() || text::trim(rationale.get<std::string>()).empty()) {
    throw EvaluationError("evaluator reply has no rationale", raw);
  }
  out.rationale = rationale.get<std::string>();
  auto criteria = doc->value("criteria", nlohmann::json());
  if (!criteria.is_object()) throw EvaluationError("evaluator reply has no criteria object", raw);
  for (const auto& c : kCriteria) {
    auto key = std::string(c.key);
    if (!criteria.contains(key) || !criteria[key].is_object()) {
      throw EvaluationError("evaluator reply lacks criterion " + key, raw);
    }
    const auto& entry = criteria[key];
    out.judgments.push_back({key, side(entry.value("prefers", nlohmann::json()), c.key.data()),
                             entry.value("justification", std::string())});
  }
  return out;
}

GatewayEvaluator::GatewayEvaluator(const gateway::Gateway& gateway, persona::PublisherPersona persona,
                                   const config::ResolvedConfig& cfg, const persona::PromptTemplates& templates)
    : gateway_(gateway),
      persona_(std::move(persona)),
      base_(gateway::make_request({{}, {}, TaskKind::critical}, cfg)),
      templates_(templates) {}

MatchOutcome GatewayEvaluator::evaluate(const BookProposal& a, const BookProposal& b) const {
  auto req = base_;
  req.bundle = persona::assemble_prompt(persona_, TaskKind::critical, persona::MatchupPayload{a, b}, templates_);
  auto res = gateway_.call(req);
  return parse_judgment(res.text, a, b);
}

MatchOutcome run_matchup(const BookProposal& a, const BookProposal& b, const PairwiseEvaluator& evaluator) {
  if (a.id == b.id) throw ContractError("a proposal cannot meet itself: " + a.id);
  auto out = evaluator.evaluate(a, b);
  std::string shape = out.a == a.id && out.b == b.id ? "" : "evaluator swapped or renamed the contestants";
  if (shape.empty() && out.winner != a.id && out.winner != b.id) shape = "winner is neither contestant";
  if (shape.empty() && out.judgments.size() != kCriteria.size()) shape = "expected five criterion judgments";
  for (std::size_t i = 0; shape.empty() && i < out.judgments.size(); ++i) {
    const auto& j = out.judgments[i];
    if (j.criterion != kCriteria[i].key) shape = "criterion judgments out of order at " + j.criterion;
    else if (j.prefers != a.id && j.prefers != b.id) shape = "criterion " + j.criterion + " prefers neither side";
  }
  if (!shape.empty()) throw EvaluationError(shape, nlohmann::json(out).dump());
  return out;
}

// ---------------------------------------------------------------------------
// Brackets

int rounds_for(std::size_t entrants) {
  int r = 0;
  while ((std::size_t{1} << r) < entrants) ++r;
  return r;
}

Bracket seed_bracket(const std::vector<BookProposal>& proposals, std::uint64_t seed) {
  if (proposals.empty()) throw ContractError("a bracket needs at least one proposal");
  Bracket b;
  b.seed = seed;
  for (const auto& p : proposals) {
    if (!b.proposals.emplace(p.id, p).second) throw ContractError("duplicate proposal id in bracket: " + p.id);
    b.entrants.push_back(p.id);
  }
  std::mt19937_64 gen(seed);
  rng::shuffle(b.entrants, gen);
  b.rounds = rounds_for(b.entrants.size());
  std::size_t byes = (std::size_t{1} << b.rounds) - b.entrants.size();
  b.byes.assign(b.entrants.begin(), b.entrants.begin() + static_cast<std::ptrdiff_t>(byes));
  return b;
}

TournamentResult run_tournament(const Bracket& bracket, const PairwiseEvaluator& evaluator,
                                const TournamentOptions& options) {
  if (bracket.entrants.empty()) throw ContractError("bracket has no entrants");
  if (bracket.rounds != rounds_for(bracket.entrants.size()) ||
      bracket.byes.size() != (std::size_t{1} << bracket.rounds) - bracket.entrants.size()) {
    throw ContractError("bracket round or bye count is inconsistent with its entrants");
  }
  for (std::size_t i = 0; i < bracket.byes.size(); ++i) {
    if (bracket.byes[i] != bracket.entrants[i]) throw ContractError("byes must be the first seeded entrants");
  }

  TournamentResult result;
  result.bracket = bracket;
  if (options.id.empty()) {
    std::string key = std::to_string(bracket.seed);
    for (const auto& id : bracket.entrants) key += "|" + id;
    result.id = "T-" + text::hex64(text::fnv1a64(key)).substr(0, 12);
  } else {
    result.id = options.id;
  }

  std::map<ProposalId, Standing> standings;
  for (std::size_t i = 0; i < bracket.entrants.size(); ++i) {
    standings[bracket.entrants[i]] = {bracket.entrants[i], bracket.rounds + 1, 0, i};
  }

  std::vector<ProposalId> alive = bracket.entrants;
  const bool parallel = options.concurrency > 1 && evaluator.stateless();
  for (int round = 1; round <= bracket.rounds; ++round) {
    RoundRecord record;
    record.number = round;
    std::size_t byes = round == 1 ? bracket.byes.size() : 0;
    record.byes.assign(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(byes));

    std::vector<std::pair<ProposalId, ProposalId>> pairs;
    for (std::size_t i = byes; i + 1 < alive.size(); i += 2) pairs.emplace_back(alive[i], alive[i + 1]);

    std::vector<std::optional<MatchOutcome>> outcomes(pairs.size());
    std::string failure;
    auto play = [&](std::size_t i) {
      return run_matchup(bracket.proposals.at(pairs[i].first), bracket.proposals.at(pairs[i].second), evaluator);
    };
    if (parallel) {
      for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(options.concurrency)) {
        std::size_t stop = std::min(pairs.size(), start + static_cast<std::size_t>(options.concurrency));
        std::vector<std::future<MatchOutcome>> futures;
        for (std::size_t i = start; i < stop; ++i) futures.push_back(std::async(std::launch::async, play, i));
        for (std::size_t i = start; i < stop; ++i) {
          try {
            outcomes[i] = futures[i - start].get();
          } catch (const std::exception& e) {
            if (failure.empty()) failure = e.what();
          }
        }
        if (!failure.empty()) break;
      }
    } else {
      for (std::size_t i = 0; i < pairs.size() && failure.empty(); ++i) {
        try {
          outcomes[i] = play(i);
        } catch (const std::exception& e) {
          failure = e.what();
        }
      }
    }

    std::vector<ProposalId> next = record.byes;
    for (auto& o : outcomes) {
      if (!o) continue;
      o->round = round;
      record.matches.push_back(result.transcripts.size());
      result.transcripts.push_back(*o);
      standings[o->winner].wins += 1;
      standings[o->loser()].eliminated_in = round;
      next.push_back(o->winner);
    }
    if (!failure.empty()) throw TournamentAborted(failure, result.transcripts);
    result.rounds.push_back(std::move(record));
    alive = std::move(next);
  }

  result.champion = alive.front();
  for (auto& [id, s] : standings) result.ranking.push_back(s);
  std::sort(result.ranking.begin(), result.ranking.end(), [](const Standing& x, const Standing& y) {
    if (x.eliminated_in != y.eliminated_in) return x.eliminated_in > y.eliminated_in;
    if (x.wins != y.wins) return x.wins > y.wins;
    return x.seed_position < y.seed_position;
  });
  return result;
}

// ---------------------------------------------------------------------------
// Review packets

namespace {

std::string selection_rationale(const TournamentResult& result, const Standing& s, int rank) {
  std::string out = "Ranked " + std::to_string(rank) + " of " + std::to_string(result.ranking.size()) + ". ";
  if (s.id == result.champion) {
    out += "Won the tournament";
  } else {
    out += "Eliminated in round " + std::to_string(s.eliminated_in) + " of " + std::to_string(result.bracket.rounds);
  }
  out += " with " + std::to_string(s.wins) + (s.wins == 1 ? " win." : " wins.");
  for (const auto& m : result.matches_of(s.id)) {
    const auto& other = m.a == s.id ? m.b : m.a;
    out += " Round " + std::to_string(m.round) + (m.winner == s.id ? " beat " : " lost to ") + other + ": " +
           m.rationale;
    if (!out.empty() && out.back() != '.') out += '.';
  }
  return out;
}

}  // namespace

ReviewPacket flag_for_review(const TournamentResult& result, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > result.ranking.size()) {
    throw UsageError("k must lie in [1, " + std::to_string(result.ranking.size()) + "], got " + std::to_string(k));
  }
  ReviewPacket packet;
  packet.tournament_id = result.id;
  for (int i = 0; i < k; ++i) {
    const auto& s = result.ranking[static_cast<std::size_t>(i)];
    ReviewEntry entry;
    entry.rank = i + 1;
    entry.proposal = result.bracket.proposals.at(s.id);
    entry.proposal.status = ProposalStatus::flagged;
    entry.rationale = selection_rationale(result, s, i + 1);
    entry.transcripts = result.matches_of(s.id);
    packet.entries.push_back(std::move(entry));
  }
  return packet;
}

void to_json(nlohmann::json& j, const ReviewPacket& p) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : p.entries) {
    entries.push_back(
        {{"rank", e.rank}, {"proposal", e.proposal}, {"rationale", e.rationale}, {"transcripts", e.transcripts}});
  }
  j = {{"tournament_id", p.tournament_id}, {"entries", entries}};
}

}  // namespace imprint::ideation
