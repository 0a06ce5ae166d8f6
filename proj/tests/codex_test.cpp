#include <doctest.h>

#include <cstdint>

#include "imprint/codex.hpp"
#include "support.hpp"

using namespace imprint;
using namespace imprint::codex;

namespace {

std::vector<QuotationRecord> quotes(int n, bool verified = true) {
  std::vector<QuotationRecord> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(QuotationRecord::make("Quotation number " + std::to_string(i) + " speaks plainly.", "Author " + std::to_string(i),
                                        "Work " + std::to_string(i),
                                        "Author " + std::to_string(i) + ". Work " + std::to_string(i) + ". Press, 2001.",
                                        verified));
  }
  return out;
}

std::string words(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
  return s;
}

// Oracle: walk folios from the start, toggling sides and counting rectos.
struct WalkedPage {
  bool verso;
  bool message;
};
std::vector<WalkedPage> walk(std::size_t quotations) {
  std::vector<WalkedPage> pages;
  int recto_seen = 0;
  for (std::size_t page = 0; page < 2 * quotations; ++page) {
    if (page % 2 == 0) {
      pages.push_back({true, false});
    } else {
      ++recto_seen;
      pages.push_back({false, recto_seen % 8 == 0});
    }
  }
  return pages;
}

// Oracle: FNV-1a 64 straight from its definition.
std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace

TEST_CASE("pilsa manifest validation") {
  auto manifest = CodexManifest::pilsa_default();
  CHECK(manifest.parts == pilsa_parts());
  CHECK(manifest.quotation_count == 100);
  auto qs = quotes(100);
  CHECK(validate_manifest(manifest, qs, 100).passed());

  auto swapped = manifest;
  std::swap(swapped.parts[4], swapped.parts[5]);
  auto r = validate_manifest(swapped, qs, 100);
  CHECK(r.error_count() == 1);
  CHECK(r.findings()[0].path == "manifest.parts");

  CHECK(validate_manifest(manifest, quotes(99), 100).error_count() == 1);

  auto unverified = qs;
  unverified[7].verified = false;
  CHECK(validate_manifest(manifest, unverified, 100).error_count() == 1);

  auto nocite = qs;
  nocite[2].citation = "";
  CHECK(validate_manifest(manifest, nocite, 100).error_count() == 1);
}

TEST_CASE("quotation word limit is strict") {
  auto manifest = CodexManifest::pilsa_default();
  auto qs = quotes(100);
  qs[42] = QuotationRecord::make(words(250), "A", "W", "A. W.", true);
  CHECK(qs[42].word_count == 250);
  auto r = validate_manifest(manifest, qs, 100);
  REQUIRE(r.error_count() == 1);
  CHECK(r.findings()[0].path == "quotations[42].text");
  CHECK(r.findings()[0].message.find("quotation 42") != std::string::npos);

  qs[42] = QuotationRecord::make(words(249), "A", "W", "A. W.", true);
  CHECK(validate_manifest(manifest, qs, 100).passed());

  auto lying = qs;
  lying[0].word_count = 3;
  CHECK_FALSE(validate_manifest(manifest, lying, 100).passed());

  // Emission refuses over-limit quotations.
  auto bad = quotes(3);
  bad[1] = QuotationRecord::make(words(300), "A", "W", "A. W.", true);
  manifest.quotation_count = 3;
  auto layout = build_pilsa_layout(bad, manifest.messages);
  TypographySet t;
  for (auto role : kFontRoles) t.roles[std::string(role)] = {"Font", FontSource::google};
  CHECK_THROWS_AS(emit_typeset_source(manifest, bad, layout, t, builtin_palette()[0], {}), ContractError);
}

TEST_CASE("pilsa layout for 100 quotations") {
  auto messages = CodexManifest::pilsa_default().messages;
  auto seq = build_pilsa_layout(100, messages);
  CHECK(seq.pages.size() == 200);
  CHECK(seq.message_count() == 12);
  int recto = 0;
  std::vector<int> message_ordinals;
  for (const auto& p : seq.pages) {
    if (p.content == PageContent::quotation) CHECK(p.side == Side::verso);
    if (p.side == Side::verso) CHECK(p.folio % 2 == 0);
    if (p.side == Side::recto) {
      ++recto;
      CHECK(p.folio % 2 == 1);
      if (p.content == PageContent::dot_grid_with_message) message_ordinals.push_back(recto);
    }
  }
  CHECK(message_ordinals == std::vector<int>{8, 16, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96});
  CHECK(seq.pages[15].index == 0);
  CHECK(seq.pages[31].index == 1);
  CHECK(seq.pages[159].index == (10 - 1) % 4);

  auto one = build_pilsa_layout(1, {});
  CHECK(one.pages.size() == 2);
  CHECK(one.message_count() == 0);
  auto eight = build_pilsa_layout(8, {"persist"});
  CHECK(eight.message_count() == 1);
  CHECK(eight.pages[15].content == PageContent::dot_grid_with_message);

  CHECK_THROWS_AS(build_pilsa_layout(0, messages), UsageError);
  CHECK_THROWS_AS(build_pilsa_layout(8, {}), UsageError);
  CHECK_NOTHROW(build_pilsa_layout(7, {}));
  CHECK_THROWS_AS(build_pilsa_layout(4, messages, 3), UsageError);
  CHECK(quotation_block_start(6) == 8);
  CHECK(quotation_block_start(7) == 8);
}

TEST_CASE("layout laws against a brute-force page walker, sizes 1..500") {
  std::vector<std::string> messages = {"a", "b", "c"};
  for (std::size_t n = 1; n <= 500; ++n) {
    auto seq = build_pilsa_layout(n, messages, 10);
    auto oracle = walk(n);
    REQUIRE(seq.pages.size() == oracle.size());
    std::size_t messages_seen = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const auto& p = seq.pages[i];
      if ((p.side == Side::verso) != oracle[i].verso) FAIL("side mismatch at size " << n << " page " << i);
      if ((p.content == PageContent::dot_grid_with_message) != oracle[i].message) FAIL("message mismatch at " << n);
      if (oracle[i].verso && !(p.content == PageContent::quotation && p.index == static_cast<int>(i / 2))) {
        FAIL("quotation placement at " << n);
      }
      if (p.content == PageContent::dot_grid_with_message) {
        if (p.index != static_cast<int>(messages_seen % messages.size())) FAIL("message cycle at " << n);
        ++messages_seen;
      }
      if (p.folio != 10 + static_cast<int>(i)) FAIL("folio at " << n);
    }
    CHECK(seq.message_count() == n / 8);
  }
}

TEST_CASE("typography resolution") {
  auto cfg = test_support::xynapse_config();
  auto rec = TypographySet::from_config(cfg);
  CHECK(rec.at("body").name == "Minion Pro");
  CHECK(rec.at("quotations").name == "Minion Pro Italic");
  CHECK(resolve_typography(rec, AllFontsAvailable()) == rec);

  FontSet installed({"Myriad Pro", "Apple Myungjo", "Minion Pro Italic", "Source Code Pro"});
  auto resolved = resolve_typography(rec, installed);
  CHECK(resolved.at("body") == FontChoice{"Crimson Pro", FontSource::google});
  CHECK(resolved.at("heading") == rec.at("heading"));
  CHECK(resolved.roles.size() == 5);

  auto caslon = rec;
  caslon.roles["quotations"] = {"Adobe Caslon Pro", FontSource::adobe};
  CHECK(resolve_typography(caslon, FontSet({})).at("quotations").name == "Libre Caslon Text");

  auto unknown = rec;
  unknown.roles["body"] = {"Mystery Serif", FontSource::adobe};
  CHECK_THROWS_AS(resolve_typography(unknown, installed), TypographyError);

  auto missing = rec;
  missing.roles.erase("korean");
  CHECK_THROWS_AS(resolve_typography(missing, AllFontsAvailable()), ContractError);
}

TEST_CASE("cover palette and color choice") {
  const auto& palette = builtin_palette();
  REQUIRE(palette.size() == 7);
  std::vector<std::string> keys;
  for (const auto& c : palette) keys.push_back(c.key);
  CHECK(keys == std::vector<std::string>{"mungyeong_cheongja", "andong_hwangto", "goryeo_dancheong", "naju_jjok",
                                         "seoul_doldam", "jeonju_hanji", "boseong_nokcha"});
  CHECK(palette[0].english_gloss == "Celadon Green");
  CHECK(palette[0].hex().size() == 6);

  CHECK(choose_cover_color("Transcriptions for Survival", palette) ==
        choose_cover_color("Transcriptions for Survival", palette));

  // Find a key whose oracle hash lands on 3 and check the engine agrees.
  std::string key;
  for (int i = 0; key.empty(); ++i) {
    auto candidate = "title-" + std::to_string(i);
    if (fnv_oracle(candidate) % 7 == 3) key = candidate;
  }
  CHECK(choose_cover_color(key, palette).key == palette[3].key);
  for (int i = 0; i < 200; ++i) {
    auto k = "k" + std::to_string(i);
    CHECK(choose_cover_color(k, palette) == palette[fnv_oracle(k) % 7]);
  }
  CHECK_THROWS_AS(choose_cover_color("x", {}), UsageError);
}

TEST_CASE("typeset source emission") {
  auto cfg = test_support::xynapse_config();
  auto manifest = CodexManifest::pilsa_default();
  auto qs = quotes(100);
  qs[3] = QuotationRecord::make("Profit & loss at 100% of {cost} #1", "A_B", "W", "Cite ~ $5", true);
  auto layout = build_pilsa_layout(qs, manifest.messages, 8);
  auto typo = TypographySet::from_config(cfg);
  auto title = TitleInfo::from_config(cfg);
  const auto& color = choose_cover_color(title.isbn, builtin_palette());
  auto src = emit_typeset_source(manifest, qs, layout, typo, color, title);

  CHECK(src.rfind("\\documentclass[10pt,twoside,openany]{memoir}", 0) == 0);
  CHECK(count_occurrences(src, "\\pilsaspread{") == 100);
  CHECK(src.find("Profit \\& loss at 100\\% of \\{cost\\} \\#1") != std::string::npos);
  CHECK(src.find("A\\_B") != std::string::npos);
  CHECK(src.find("Profit & loss") == std::string::npos);
  CHECK(src.find("Transcriptions for Survival") != std::string::npos);
  CHECK(count_occurrences(src, manifest.messages[0]) == 3);  // recto 8, 40, 72
  CHECK(src == emit_typeset_source(manifest, qs, layout, typo, color, title));

  auto reordered = qs;
  std::swap(reordered[0], reordered[1]);
  CHECK(src != emit_typeset_source(manifest, reordered, layout, typo, color, title));

  CHECK_THROWS_AS(emit_typeset_source(manifest, qs, build_pilsa_layout(99, manifest.messages), typo, color, title),
                  ContractError);
  CHECK(latex_escape("\\^~") == "\\textbackslash{}\\textasciicircum{}\\textasciitilde{}");
}

TEST_CASE("cover emission and spine width") {
  const auto& paper = PaperModel::builtin();
  CHECK(paper.spine_width_in(200) == doctest::Approx(200 * 0.002252 + 0.0625));
  CHECK(paper.spine_width_in(400) > paper.spine_width_in(200));
  CHECK_THROWS_AS(paper.spine_width_in(0), UsageError);
  CHECK(parse_trim("6x9") == std::pair<double, double>{6.0, 9.0});
  CHECK(parse_trim("5.5 x 8.5") == std::pair<double, double>{5.5, 8.5});
  CHECK_THROWS_AS(parse_trim("A5"), UsageError);

  auto cfg = test_support::xynapse_config();
  auto title = TitleInfo::from_config(cfg);
  auto typo = TypographySet::from_config(cfg);
  auto cover = emit_cover_source(title, builtin_palette()[0], typo, 216);
  CHECK(cover.find("{memoir}") != std::string::npos);
  CHECK(cover.find("7DA898") != std::string::npos);
  CHECK(cover.find("% spine 0.5489in for 216 pages") != std::string::npos);
}

TEST_CASE("full codex build") {
  auto cfg = test_support::xynapse_config();
  auto manifest = CodexManifest::pilsa_default();
  auto qs = quotes(100);
  auto build = build_codex(cfg, manifest, qs, FontSet({}));
  REQUIRE(build.report.passed());
  CHECK(build.layout.first_folio == 8);
  CHECK(build.typography.at("korean").name == "Nanum Myeongjo");
  CHECK(count_occurrences(build.interior, "\\pilsaspread{") == 100);
  CHECK_FALSE(build.cover.empty());
  CHECK(estimated_page_count(manifest, build.layout) == 7 + 200 + 3);

  qs[0].verified = false;
  auto refused = build_codex(cfg, manifest, qs, FontSet({}));
  CHECK_FALSE(refused.report.passed());
  CHECK(refused.interior.empty());

  auto json = nlohmann::json(quotes(2));
  CHECK(parse_quotations(json.dump()) == quotes(2));
  CHECK(CodexManifest::from_json(manifest.to_json()).parts == manifest.parts);
}
