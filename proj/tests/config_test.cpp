#include <doctest.h>

#include <random>

#include "imprint/config.hpp"
#include "imprint/errors.hpp"
#include "support.hpp"

using namespace imprint;
using namespace imprint::config;
using test_support::fixture;
using test_support::fixture_node;
using test_support::xynapse_config;

namespace {

ConfigNode empty(Level level) { return ConfigNode(level); }

ConfigNode with_override(Level level, Section section, const std::string& field, json value) {
  ConfigNode node(level);
  node.set(section, field, std::move(value));
  return node;
}

}  // namespace

TEST_CASE("parse_config reads the xynapse imprint fixture") {
  auto node = fixture_node("imprint", Level::imprint);
  CHECK(node.level() == Level::imprint);
  CHECK(node.findings().empty());
  CHECK(node.sections().size() == kSectionCount);
  CHECK(*node.find(Section::identity, "imprint") == "Xynapse Traces");
  CHECK(*node.find(Section::identity, "publisher") == "Nimble Books LLC");
  CHECK(*node.find(Section::config_metadata, "version") == "1.0.0");  // "1.0" normalizes
  CHECK(*node.find(Section::config_metadata, "last_updated") == "2024-07-18");
}

TEST_CASE("parse_config edge cases") {
  SUBCASE("empty document has zero sections") {
    auto node = parse_config("{}", Level::title);
    CHECK(node.sections().empty());
    CHECK(node.findings().empty());
  }
  SUBCASE("misspelled section is a syntactic finding naming the key") {
    auto node = parse_config(R"({"brandng": {"tagline": "x"}})", Level::imprint);
    CHECK(node.sections().empty());
    REQUIRE(node.findings().size() == 1);
    CHECK(node.findings()[0].layer == Layer::syntactic);
    CHECK(node.findings()[0].severity == Severity::error);
    CHECK(node.findings()[0].path == "brandng");
    CHECK(node.findings()[0].message.find("brandng") != std::string::npos);
  }
  SUBCASE("unknown field inside a known section") {
    auto node = parse_config(R"({"branding": {"tagine": "x"}})", Level::imprint);
    REQUIRE(node.findings().size() == 1);
    CHECK(node.findings()[0].path == "branding.tagine");
  }
  SUBCASE("malformed JSON reports a position") {
    try {
      parse_config("{\n  \"identity\": {\n    \"imprint\": ,\n  }\n}", Level::imprint);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(e.byte() > 0);
    }
  }
  SUBCASE("non-object top level") { CHECK_THROWS_AS(parse_config("[1, 2]", Level::title), ParseError); }
  SUBCASE("unknown hierarchy level is a usage error") {
    CHECK_THROWS_AS(parse_config("{}", std::string_view("series")), UsageError);
  }
  SUBCASE("bad version string is recorded on the node") {
    auto node = parse_config(R"({"config_metadata": {"version": "v1"}})", Level::imprint);
    REQUIRE(node.findings().size() == 1);
    CHECK(node.findings()[0].path == "config_metadata.version");
  }
}

TEST_CASE("resolve applies title over imprint over publisher") {
  SUBCASE("title override wins with title provenance") {
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint),
                       with_override(Level::title, Section::book_defaults, "trim_size", "5x8"));
    CHECK(cfg.string("book_defaults.trim_size") == "5x8");
    CHECK(cfg.provenance("book_defaults.trim_size") == Level::title);
  }
  SUBCASE("imprint values over publisher defaults with an empty title") {
    auto cfg = xynapse_config(false);
    CHECK(cfg.strings("llm_config.preferred_models") == std::vector<std::string>{"gemini/gemini-2.5-pro"});
    CHECK(cfg.number("llm_config.temperature") == doctest::Approx(0.6));
    CHECK(cfg.provenance("llm_config.temperature") == Level::imprint);
    // publisher-only fields fall through
    CHECK(cfg.provenance("llm_config.fallback_models") == Level::publisher);
    CHECK(cfg.string("identity.contact") == "info@nimblebooks.com");
  }
  SUBCASE("all three nodes empty enumerates every required field") {
    try {
      resolve(empty(Level::publisher), empty(Level::imprint), empty(Level::title));
      FAIL("expected ResolutionError");
    } catch (const ResolutionError& e) {
      CHECK(e.missing_paths() == Schema::builtin().required_paths());
      CHECK(e.missing_paths().size() > 40);
    }
  }
  SUBCASE("mismatched level tags") {
    CHECK_THROWS_AS(resolve(empty(Level::imprint), empty(Level::imprint), empty(Level::title)), ContractError);
  }
  SUBCASE("lists replace wholesale") {
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint),
                       with_override(Level::title, Section::pricing, "markets", json::array({"US"})));
    CHECK(cfg.strings("pricing.markets") == std::vector<std::string>{"US"});
  }
}

TEST_CASE("validate runs three layers") {
  auto rules = RuleSet::builtin();
  SUBCASE("xynapse fixture passes; discount 40 and markup 150 are in range") {
    auto report = validate(xynapse_config(), rules);
    for (const auto& f : report.findings()) INFO(format_finding(f));
    CHECK(report.passed());
    CHECK(report.error_count() == 0);
  }
  SUBCASE("discount 140 is a semantic range error") {
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint),
                       with_override(Level::title, Section::pricing, "wholesale_discount_pct", 140));
    auto report = validate(cfg, rules);
    CHECK_FALSE(report.passed());
    REQUIRE(report.error_count() == 1);
    CHECK(report.findings()[0].layer == Layer::semantic);
    CHECK(report.findings()[0].path == "pricing.wholesale_discount_pct");
    CHECK(report.findings()[0].message.find("out of range [0,100]") != std::string::npos);
  }
  SUBCASE("hardcover against a paperback rendition is a business-rule error") {
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint),
                       with_override(Level::title, Section::book_defaults, "binding_type", "hardcover"));
    auto report = validate(cfg, rules);
    REQUIRE(report.error_count() == 1);
    CHECK(report.findings()[0].layer == Layer::business_rule);
    CHECK(report.findings()[0].path == "book_defaults.binding_type");
  }
  SUBCASE("one error per layer yields exactly three findings") {
    ConfigNode title(Level::title);
    title.set(Section::production, "dpi", "300");  // wrong type
    title.set(Section::pricing, "wholesale_discount_pct", 140);
    title.set(Section::book_defaults, "binding_type", "hardcover");
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint), title);
    auto report = validate(cfg, rules);
    CHECK(report.findings().size() == 3);
    CHECK(report.count(Layer::syntactic) == 1);
    CHECK(report.count(Layer::semantic) == 1);
    CHECK(report.count(Layer::business_rule) == 1);
  }
  SUBCASE("parse findings are carried into the report once") {
    auto title = parse_config(R"({"brandng": {}, "production": {"dpi": "300"}})", Level::title);
    auto cfg = resolve(fixture_node("publisher", Level::publisher), fixture_node("imprint", Level::imprint), title);
    auto report = validate(cfg, rules);
    CHECK(report.count(Layer::syntactic) == 2);
  }
  SUBCASE("rules are data") {
    auto custom = RuleSet::parse(R"({"rules": [{"id": "us_only", "path": "pricing.markets",
        "require": {"path": "book_defaults.territorial_rights", "op": "equals", "value": "US"}}]})");
    auto report = validate(xynapse_config(), custom);
    REQUIRE(report.count(Layer::business_rule) == 1);
    CHECK(report.findings().back().message.find("us_only") != std::string::npos);
    CHECK_THROWS_AS(RuleSet::parse(R"({"rules": [{"id": "x", "require": {"path": "a", "op": "resembles", "value": "b"}}]})"),
                    ConfigurationError);
  }
}

TEST_CASE("bump_version") {
  auto at = [](const std::string& version) {
    auto cfg = xynapse_config();
    auto node = cfg.as_node();
    node.set(Section::config_metadata, "version", version);
    return resolve(node, ConfigNode(Level::imprint), ConfigNode(Level::title));
  };
  CHECK(bump_version(at("1.0.0"), ChangeKind::structural).str() == "2.0.0");
  CHECK(bump_version(at("1.0.0"), ChangeKind::feature).str() == "1.1.0");
  CHECK(bump_version(at("1.4.2"), ChangeKind::fix).str() == "1.4.3");
  CHECK(bump_version(xynapse_config(), ChangeKind::fix).str() == "1.0.1");
  CHECK_THROWS_AS(bump_version(at("one.two"), ChangeKind::fix), VersionError);
  CHECK_THROWS_AS(SemanticVersion::parse("1.2.3.4"), VersionError);
  CHECK_THROWS_AS(parse_change_kind("cosmetic"), UsageError);
}

// ---------------------------------------------------------------------------
// Properties

namespace {

json random_value(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return static_cast<std::int64_t>(rng() % 1000);
    case 1: return "v" + std::to_string(rng() % 1000);
    case 2: return json::array({"a" + std::to_string(rng() % 10), "b"});
    default: return (rng() % 2) == 0;
  }
}

std::vector<std::pair<Section, std::string>> all_fields() {
  std::vector<std::pair<Section, std::string>> out;
  for (auto s : all_sections()) {
    for (const auto& f : Schema::builtin().fields(s)) out.emplace_back(s, f.name);
  }
  return out;
}

ConfigNode random_node(std::mt19937_64& rng, Level level, double density, bool complete) {
  ConfigNode node(level);
  for (const auto& [section, field] : all_fields()) {
    bool required = Schema::builtin().field(section, field)->required;
    double roll = static_cast<double>(rng() % 1000) / 1000.0;
    if ((complete && required) || roll < density) node.set(section, field, random_value(rng));
  }
  return node;
}

}  // namespace

TEST_CASE("property: resolved value comes from the most specific defining level") {
  std::mt19937_64 rng(20240718);
  for (int trial = 0; trial < 200; ++trial) {
    auto publisher = random_node(rng, Level::publisher, 0.3, true);
    auto imprint = random_node(rng, Level::imprint, 0.3, false);
    auto title = random_node(rng, Level::title, 0.2, false);
    auto cfg = resolve(publisher, imprint, title);
    for (const auto& [section, field] : all_fields()) {
      auto path = field_path(section, field);
      const json* expected = nullptr;
      Level expected_level = Level::publisher;
      for (const ConfigNode* n : {&title, &imprint, &publisher}) {
        if (const json* v = n->find(section, field)) {
          expected = v;
          expected_level = n->level();
          break;
        }
      }
      if (!expected) {
        CHECK_FALSE(cfg.has(path));
        continue;
      }
      REQUIRE(cfg.has(path));
      CHECK(cfg.at(path) == *expected);
      CHECK(cfg.provenance(path) == expected_level);
    }
  }
}

TEST_CASE("property: resolving a resolved config again is idempotent") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto cfg = resolve(random_node(rng, Level::publisher, 0.4, true), random_node(rng, Level::imprint, 0.3, false),
                       random_node(rng, Level::title, 0.3, false));
    auto again = resolve(cfg.as_node(), ConfigNode(Level::imprint), ConfigNode(Level::title));
    REQUIRE(again.fields().size() == cfg.fields().size());
    for (const auto& [path, field] : cfg.fields()) CHECK(again.at(path) == field.value);
  }
}

TEST_CASE("property: parse(serialize(node)) is field-equal") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto level = static_cast<Level>(rng() % 3);
    auto node = random_node(rng, level, 0.25, false);
    auto back = parse_config(serialize(node), level);
    CHECK(back.same_fields(node));
  }
  auto node = fixture_node("imprint", Level::imprint);
  CHECK(parse_config(serialize(node), Level::imprint).same_fields(node));
}

TEST_CASE("property: bump strictly increases the version") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    SemanticVersion v{static_cast<std::uint32_t>(rng() % 50), static_cast<std::uint32_t>(rng() % 50),
                      static_cast<std::uint32_t>(rng() % 50)};
    for (auto change : {ChangeKind::structural, ChangeKind::feature, ChangeKind::fix}) CHECK(bump(v, change) > v);
  }
}
