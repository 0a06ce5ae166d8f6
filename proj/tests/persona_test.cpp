#include <doctest.h>

#include <random>

#include "imprint/errors.hpp"
#include "imprint/persona.hpp"
#include "support.hpp"

using namespace imprint;
using namespace imprint::persona;

namespace {

PublisherPersona seon() { return PublisherPersona::from_config(test_support::xynapse_config()); }

EditorialDecision decision(DecisionAction action) {
  return {"p-1", action, action == DecisionAction::approve ? "" : "needs work", "editor", "2025-01-01T00:00:00Z"};
}

BookProposal proposal(const std::string& id, const std::string& title) {
  BookProposal p;
  p.id = id;
  p.working_title = title;
  p.abstract = "An abstract for " + title;
  p.target_audience = "Researchers";
  p.estimated_scope = "60,000 words";
  p.outline = {"Opening", "Middle", "Close"};
  return p;
}

// Independent recurrence: the weighted-average form of the same smoothing step.
double ema_fold(double start, const std::vector<double>& signals, double alpha) {
  double t = start;
  for (double s : signals) t = (1.0 - alpha) * t + alpha * s;
  return t;
}

}  // namespace

TEST_CASE("persona loads from the fixture persona section") {
  auto p = seon();
  CHECK(p.name == "Seon");
  CHECK(p.risk_tolerance == RiskTolerance::high);
  CHECK(p.editorial_philosophy.rfind("Every profound question contains its own answer", 0) == 0);
  CHECK(p.traits.patience == doctest::Approx(0.9));
}

TEST_CASE("assemble_prompt") {
  auto p = seon();
  SUBCASE("matchup payload embeds the five criteria verbatim") {
    auto bundle = assemble_prompt(p, TaskKind::critical, MatchupPayload{proposal("a", "Alpha"), proposal("b", "Beta")});
    CHECK(bundle.user_text.find("scholarly contribution, market viability, alignment with the imprint's philosophy, "
                                "resource requirements, and potential impact") != std::string::npos);
    CHECK(bundle.user_text.find("Alpha") != std::string::npos);
    CHECK(bundle.task_kind == TaskKind::critical);
  }
  SUBCASE("system text embeds name, philosophy, risk tolerance and traits") {
    auto bundle = assemble_prompt(p, TaskKind::analytical, ReviewPayload{"text"});
    CHECK(bundle.system_text.find("Seon") != std::string::npos);
    CHECK(bundle.system_text.find(p.editorial_philosophy) != std::string::npos);
    CHECK(bundle.system_text.find("Risk tolerance: high") != std::string::npos);
    CHECK(bundle.system_text.find("patience 0.90") != std::string::npos);
    CHECK(bundle.system_text.find("Preferred topics: human survival") != std::string::npos);
  }
  SUBCASE("empty hobby horses omit the preferred-topics block") {
    auto bare = p;
    bare.hobby_horses.clear();
    auto bundle = assemble_prompt(bare, TaskKind::analytical, ReviewPayload{"text"});
    CHECK(bundle.system_text.find("Preferred topics") == std::string::npos);
    CHECK(bundle.user_text.find("Preferred topics") == std::string::npos);
  }
  SUBCASE("identical inputs give byte-identical bundles") {
    GenerationPayload g{24, "Xynapse Traces", {"Technology", "Science"}, "Academic", {"Old idea (feedback: stale)"}};
    CHECK(assemble_prompt(p, TaskKind::creative, g) == assemble_prompt(p, TaskKind::creative, g));
  }
  SUBCASE("payload and task kind must agree") {
    CHECK_THROWS_AS(assemble_prompt(p, TaskKind::creative, ReviewPayload{"x"}), ContractError);
    CHECK_THROWS_AS(assemble_prompt(p, TaskKind::analytical, GenerationPayload{3, "X", {}, "", {}}), ContractError);
  }
  SUBCASE("slot values are not rescanned") {
    auto bundle = assemble_prompt(p, TaskKind::analytical, ReviewPayload{"literal {manuscript} braces"});
    CHECK(bundle.user_text.find("literal {manuscript} braces") != std::string::npos);
  }
  SUBCASE("avoid list appears only when there is something to avoid") {
    auto with = assemble_prompt(p, TaskKind::creative, GenerationPayload{2, "X", {}, "", {"Dead end"}});
    auto without = assemble_prompt(p, TaskKind::creative, GenerationPayload{2, "X", {}, "", {}});
    CHECK(with.user_text.find("- Dead end") != std::string::npos);
    CHECK(without.user_text.find("rejected") == std::string::npos);
  }
}

TEST_CASE("update_traits") {
  auto p = seon();
  std::vector<EditorialDecision> approvals = {decision(DecisionAction::approve)};
  SUBCASE("alpha 0 leaves the persona unchanged") {
    std::vector<EditorialDecision> many = {decision(DecisionAction::approve), decision(DecisionAction::reject),
                                           decision(DecisionAction::request_modifications)};
    CHECK(update_traits(p, many, 0.0) == p);
  }
  SUBCASE("alpha 1 replaces the trait with the signal") {
    CHECK(update_traits(p, approvals, 1.0).traits.openness == doctest::Approx(1.0));
  }
  SUBCASE("alpha 0.5 from 0.4 with two signals of 1.0") {
    p.traits.openness = 0.4;
    auto once = update_traits(p, approvals, 0.5);
    CHECK(once.traits.openness == doctest::Approx(ema_fold(0.4, {1.0}, 0.5)));
    CHECK(once.traits.openness == doctest::Approx(0.7));
    std::vector<EditorialDecision> twice = {decision(DecisionAction::approve), decision(DecisionAction::approve)};
    CHECK(update_traits(p, twice, 0.5).traits.openness == doctest::Approx(ema_fold(0.4, {1.0, 1.0}, 0.5)));
    CHECK(update_traits(p, twice, 0.5).traits.openness == doctest::Approx(0.85));
  }
  SUBCASE("rejection moves rigor, not openness") {
    p.traits.intellectual_rigor = 0.2;
    std::vector<EditorialDecision> reject = {decision(DecisionAction::reject)};
    auto out = update_traits(p, reject, 0.5);
    CHECK(out.traits.intellectual_rigor == doctest::Approx(0.6));
    CHECK(out.traits.openness == p.traits.openness);
  }
  SUBCASE("empty decisions and bad alpha are contract errors") {
    CHECK_THROWS_AS(update_traits(p, std::vector<EditorialDecision>{}, 0.1), ContractError);
    CHECK_THROWS_AS(update_traits(p, approvals, 1.5), ContractError);
  }
  SUBCASE("default alpha comes from the shipped mapping") {
    CHECK(SignalMapping::builtin().alpha == doctest::Approx(0.1));
    p.traits.openness = 0.0;
    CHECK(update_traits(p, approvals).traits.openness == doctest::Approx(0.1));
  }
}

TEST_CASE("property: traits stay in [0,1] and move toward higher signals") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<DecisionAction, 4> actions = {DecisionAction::approve, DecisionAction::request_modifications,
                                                 DecisionAction::return_for_refinement, DecisionAction::reject};
  for (int trial = 0; trial < 500; ++trial) {
    SignalMapping mapping;
    for (auto a : actions) {
      for (auto t : {"patience", "openness", "nuance_appreciation", "intellectual_rigor"}) {
        if (rng() % 2) mapping.signals[a][t] = unit(rng);
      }
    }
    PublisherPersona p = seon();
    p.traits = {unit(rng), unit(rng), unit(rng), unit(rng)};
    double alpha = unit(rng);
    std::vector<EditorialDecision> decisions;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 8); i < n; ++i) decisions.push_back(decision(actions[rng() % 4]));
    auto out = update_traits(p, decisions, alpha, mapping);
    for (auto t : {"patience", "openness", "nuance_appreciation", "intellectual_rigor"}) {
      CHECK(out.traits.get(t) >= 0.0);
      CHECK(out.traits.get(t) <= 1.0);
    }
    // single decision: a signal above the current value never lowers it
    auto one = std::vector<EditorialDecision>{decisions.front()};
    auto stepped = update_traits(p, one, alpha, mapping);
    auto it = mapping.signals.find(decisions.front().action);
    if (it != mapping.signals.end()) {
      for (const auto& [trait, signal] : it->second) {
        if (signal >= p.traits.get(trait)) CHECK(stepped.traits.get(trait) >= p.traits.get(trait));
      }
    }
  }
}
