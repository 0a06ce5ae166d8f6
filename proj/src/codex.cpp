#include "imprint/codex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "imprint/embedded_data.hpp"
#include "imprint/text.hpp"

namespace imprint::codex {

std::string_view to_string(CodexType type) {
  switch (type) {
    case CodexType::standard: return "standard";
    case CodexType::textbook: return "textbook";
    case CodexType::reference: return "reference";
    case CodexType::pilsa: return "pilsa";
  }
  return "?";
}

CodexType parse_codex_type(std::string_view name) {
  for (auto t : {CodexType::standard, CodexType::textbook, CodexType::reference, CodexType::pilsa}) {
    if (to_string(t) == name) return t;
  }
  throw UsageError("unknown codex type '" + std::string(name) + "'");
}

const std::vector<std::string>& pilsa_parts() {
  static const std::vector<std::string> parts = {
      "title_page",          "publishers_information",       "contents",  "publishers_note",
      "foreword",            "glossary",                     "quotations_for_transcription",
      "mnemonics",           "selection_and_verification",   "bibliography"};
  return parts;
}

CodexManifest CodexManifest::pilsa_default() { return from_json(nlohmann::json::parse(data::file("pilsa_manifest.json"))); }

CodexManifest CodexManifest::from_json(const nlohmann::json& j) {
  try {
    CodexManifest m;
    m.codex_type = parse_codex_type(j.at("codex_type").get<std::string>());
    m.quotation_count = j.value("quotation_count", 100);
    m.parts = j.at("parts").get<std::vector<std::string>>();
    m.layout_requirements = j.value("layout_requirements", nlohmann::json::object());
    m.messages = j.value("messages", std::vector<std::string>{});
    m.mnemonics = j.value("mnemonics", std::vector<std::string>{});
    m.part_texts = j.value("part_texts", std::map<std::string, std::string>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed codex manifest: ") + e.what());
  }
}

nlohmann::json CodexManifest::to_json() const {
  return {{"codex_type", std::string(codex::to_string(codex_type))},
          {"quotation_count", quotation_count},
          {"parts", parts},
          {"layout_requirements", layout_requirements},
          {"messages", messages},
          {"mnemonics", mnemonics},
          {"part_texts", part_texts}};
}

QuotationRecord QuotationRecord::make(std::string text, std::string author, std::string source_work,
                                      std::string citation, bool verified) {
  QuotationRecord q;
  q.word_count = static_cast<int>(text::word_count(text));
  q.text = std::move(text);
  q.author = std::move(author);
  q.source_work = std::move(source_work);
  q.citation = std::move(citation);
  q.verified = verified;
  return q;
}

void to_json(nlohmann::json& j, const QuotationRecord& q) {
  j = {{"text", q.text},       {"author", q.author},         {"source_work", q.source_work},
       {"citation", q.citation}, {"word_count", q.word_count}, {"verified", q.verified}};
  if (q.editorial_note) j["editorial_note"] = *q.editorial_note;
}

void from_json(const nlohmann::json& j, QuotationRecord& q) {
  q.text = j.at("text").get<std::string>();
  q.author = j.value("author", std::string());
  q.source_work = j.value("source_work", std::string());
  q.citation = j.value("citation", std::string());
  q.word_count = j.contains("word_count") ? j["word_count"].get<int>() : static_cast<int>(text::word_count(q.text));
  q.verified = j.value("verified", false);
  if (j.contains("editorial_note") && j["editorial_note"].is_string()) {
    q.editorial_note = j["editorial_note"].get<std::string>();
  } else {
    q.editorial_note.reset();
  }
}

std::vector<QuotationRecord> parse_quotations(const std::string& raw) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("quotation file is not valid JSON: ") + e.what(), e.byte, 0, 0);
  }
  const auto& list = doc.is_object() && doc.contains("quotations") ? doc["quotations"] : doc;
  if (!list.is_array()) throw ContractError("quotation file must hold an array of quotations");
  try {
    return list.get<std::vector<QuotationRecord>>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed quotation record: ") + e.what());
  }
}

ValidationReport validate_manifest(const CodexManifest& manifest, std::span<const QuotationRecord> quotations,
                                   int expected_count) {
  ValidationReport report;
  if (manifest.parts.empty()) report.add(Layer::semantic, "manifest.parts", "manifest lists no parts");
  if (manifest.codex_type == CodexType::pilsa && manifest.parts != pilsa_parts()) {
    const auto& want = pilsa_parts();
    std::string detail;
    for (std::size_t i = 0; i < std::max(want.size(), manifest.parts.size()); ++i) {
      std::string got = i < manifest.parts.size() ? manifest.parts[i] : "(missing)";
      std::string exp = i < want.size() ? want[i] : "(none)";
      if (got != exp) {
        detail = "position " + std::to_string(i + 1) + " is " + got + ", expected " + exp;
        break;
      }
    }
    report.add(Layer::semantic, "manifest.parts", "pilsa part order violated: " + detail);
  }
  if (static_cast<int>(quotations.size()) != expected_count) {
    report.add(Layer::semantic, "quotations",
               "expected " + std::to_string(expected_count) + " quotations, found " + std::to_string(quotations.size()));
  }
  for (std::size_t i = 0; i < quotations.size(); ++i) {
    const auto& q = quotations[i];
    const std::string path = "quotations[" + std::to_string(i) + "]";
    const int words = static_cast<int>(text::word_count(q.text));
    if (words != q.word_count) {
      report.add(Layer::semantic, path + ".word_count",
                 "recorded " + std::to_string(q.word_count) + " words, text has " + std::to_string(words));
    }
    if (words >= kQuotationWordLimit) {
      report.add(Layer::business_rule, path + ".text",
                 "quotation " + std::to_string(i) + " has " + std::to_string(words) + " words; the limit is under " +
                     std::to_string(kQuotationWordLimit));
    }
    if (text::trim(q.text).empty()) report.add(Layer::semantic, path + ".text", "quotation text is empty");
    if (text::trim(q.citation).empty()) report.add(Layer::semantic, path + ".citation", "citation is empty");
    if (!q.verified) report.add(Layer::business_rule, path + ".verified", "quotation " + std::to_string(i) + " is not verified");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Layout

std::string_view to_string(Side side) { return side == Side::verso ? "verso" : "recto"; }

std::string_view to_string(PageContent content) {
  switch (content) {
    case PageContent::quotation: return "quotation";
    case PageContent::dot_grid: return "dot_grid";
    case PageContent::dot_grid_with_message: return "dot_grid_with_message";
  }
  return "?";
}

std::size_t PageSequence::message_count() const {
  return static_cast<std::size_t>(std::count_if(pages.begin(), pages.end(), [](const Page& p) {
    return p.content == PageContent::dot_grid_with_message;
  }));
}

int quotation_block_start(int front_matter_pages) {
  if (front_matter_pages < 0) throw UsageError("front matter page count must be non-negative");
  int next = front_matter_pages + 1;
  return next % 2 == 0 ? next : next + 1;
}

PageSequence build_pilsa_layout(std::size_t quotation_count, const std::vector<std::string>& messages, int first_folio) {
  if (quotation_count == 0) throw UsageError("a pilsa layout needs at least one quotation");
  if (first_folio < 2 || first_folio % 2 != 0) throw UsageError("the quotation block must start on an even folio");
  if (quotation_count >= 8 && messages.empty()) {
    throw UsageError("message slots exist at every 8th recto but no messages were supplied");
  }
  PageSequence seq;
  seq.first_folio = first_folio;
  seq.pages.reserve(quotation_count * 2);
  int folio = first_folio;
  for (std::size_t i = 0; i < quotation_count; ++i) {
    seq.pages.push_back({folio++, Side::verso, PageContent::quotation, static_cast<int>(i)});
    const std::size_t recto_ordinal = i + 1;
    if (recto_ordinal % 8 == 0) {
      int msg = static_cast<int>((recto_ordinal / 8 - 1) % messages.size());
      seq.pages.push_back({folio++, Side::recto, PageContent::dot_grid_with_message, msg});
    } else {
      seq.pages.push_back({folio++, Side::recto, PageContent::dot_grid, -1});
    }
  }
  return seq;
}

PageSequence build_pilsa_layout(std::span<const QuotationRecord> quotations, const std::vector<std::string>& messages,
                                int first_folio) {
  return build_pilsa_layout(quotations.size(), messages, first_folio);
}

// ---------------------------------------------------------------------------
// Typography

std::string_view to_string(FontSource source) {
  switch (source) {
    case FontSource::adobe: return "adobe";
    case FontSource::google: return "google";
    case FontSource::local: return "local";
  }
  return "?";
}

FontSource parse_font_source(std::string_view name) {
  for (auto s : {FontSource::adobe, FontSource::google, FontSource::local}) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown font source '" + std::string(name) + "'");
}

void TypographySet::check() const {
  for (auto role : kFontRoles) {
    auto it = roles.find(std::string(role));
    if (it == roles.end() || text::trim(it->second.name).empty()) {
      throw ContractError("typography role '" + std::string(role) + "' is not assigned");
    }
  }
  if (roles.size() != kFontRoles.size()) throw ContractError("typography set has roles beyond the five known ones");
}

const FontChoice& TypographySet::at(std::string_view role) const {
  auto it = roles.find(std::string(role));
  if (it == roles.end()) throw ContractError("typography role '" + std::string(role) + "' is not assigned");
  return it->second;
}

TypographySet TypographySet::from_config(const config::ResolvedConfig& cfg) {
  TypographySet set;
  for (auto role : kFontRoles) {
    const auto path = "typography." + std::string(role);
    const auto* v = cfg.find(path);
    if (!v || !v->is_object()) throw ConfigurationError(path + " is not a font record");
    set.roles[std::string(role)] = {v->value("name", std::string()),
                                    parse_font_source(v->value("source", std::string("google")))};
  }
  set.check();
  return set;
}

const SubstitutionTable& SubstitutionTable::builtin() {
  static const SubstitutionTable table = from_json(nlohmann::json::parse(data::file("font_substitutions.json")));
  return table;
}

SubstitutionTable SubstitutionTable::from_json(const nlohmann::json& j) {
  SubstitutionTable t;
  t.substitutes = j.at("substitutions").get<std::map<std::string, std::string>>();
  return t;
}

TypographySet resolve_typography(const TypographySet& recommended, const FontAvailability& availability,
                                 const SubstitutionTable& table) {
  recommended.check();
  TypographySet out = recommended;
  for (auto& [role, font] : out.roles) {
    if (availability.available(font)) continue;
    auto it = table.substitutes.find(font.name);
    if (it == table.substitutes.end()) {
      throw TypographyError("font '" + font.name + "' for role " + role + " is unavailable and has no substitute");
    }
    font = {it->second, FontSource::google};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Palette

std::string PaletteColor::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02X%02X%02X", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::vector<PaletteColor> palette_from_json(const nlohmann::json& j) {
  std::vector<PaletteColor> out;
  for (const auto& c : j.at("colors")) {
    PaletteColor p;
    p.key = c.at("key").get<std::string>();
    p.korean_name = c.value("korean_name", std::string());
    p.english_gloss = c.value("english_gloss", std::string());
    p.region = c.value("region", std::string());
    p.rgb = c.at("rgb").get<std::array<int, 3>>();
    for (int v : p.rgb) {
      if (v < 0 || v > 255) throw ContractError("palette color " + p.key + " has a channel outside [0,255]");
    }
    out.push_back(std::move(p));
  }
  return out;
}

const std::vector<PaletteColor>& builtin_palette() {
  static const auto palette = palette_from_json(nlohmann::json::parse(data::file("palette.json")));
  return palette;
}

const PaletteColor& choose_cover_color(std::string_view title_key, const std::vector<PaletteColor>& palette) {
  if (palette.empty()) throw UsageError("cover palette is empty");
  return palette[text::fnv1a64(title_key) % palette.size()];
}

// ---------------------------------------------------------------------------
// Emission

TitleInfo TitleInfo::from_config(const config::ResolvedConfig& cfg) {
  TitleInfo t;
  t.title = cfg.get_string("metadata.title").value_or("Untitled");
  t.subtitle = cfg.get_string("metadata.subtitle").value_or("");
  t.author = cfg.get_string("metadata.author").value_or("");
  t.isbn = cfg.get_string("metadata.isbn").value_or("");
  t.imprint = cfg.string("identity.imprint");
  t.publisher = cfg.string("identity.publisher");
  t.tagline = cfg.get_string("branding.tagline").value_or("");
  t.trim_size = cfg.get_string("book_defaults.trim_size").value_or("6x9");
  return t;
}

std::string latex_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '{': out += "\\{"; break;
      case '}': out += "\\}"; break;
      case '$': out += "\\$"; break;
      case '&': out += "\\&"; break;
      case '#': out += "\\#"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '_': out += "\\_"; break;
      case '%': out += "\\%"; break;
      case '~': out += "\\textasciitilde{}"; break;
      default: out += c;
    }
  }
  return out;
}

std::pair<double, double> parse_trim(std::string_view trim) {
  static const std::regex re(R"(^\s*([0-9]+(?:\.[0-9]+)?)\s*[xX]\s*([0-9]+(?:\.[0-9]+)?)\s*$)");
  std::cmatch m;
  std::string s(trim);
  if (!std::regex_match(s.c_str(), m, re)) throw UsageError("unrecognized trim size '" + s + "'");
  return {std::stod(m[1].str()), std::stod(m[2].str())};
}

namespace {

std::string part_heading(const std::string& part) {
  static const std::map<std::string, std::string> names = {
      {"title_page", "Title Page"},
      {"publishers_information", "Publisher's Information"},
      {"contents", "Contents"},
      {"publishers_note", "Publisher's Note"},
      {"foreword", "Foreword"},
      {"glossary", "Glossary"},
      {"quotations_for_transcription", "Quotations for Transcription"},
      {"mnemonics", "Mnemonics"},
      {"selection_and_verification", "Selection and Verification"},
      {"bibliography", "Bibliography"}};
  if (auto it = names.find(part); it != names.end()) return it->second;
  std::string out = part;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string inches(double v) { return text::format_decimal(v, 4) + "in"; }

void font_preamble(std::ostringstream& out, const TypographySet& t) {
  out << "\\usepackage{fontspec}\n";
  out << "\\setmainfont{" << latex_escape(t.at("body").name) << "}\n";
  out << "\\setsansfont{" << latex_escape(t.at("heading").name) << "}\n";
  out << "\\setmonofont{" << latex_escape(t.at("mnemonics").name) << "}\n";
  out << "\\newfontfamily\\koreanfont{" << latex_escape(t.at("korean").name) << "}\n";
  out << "\\newfontfamily\\quotationfont{" << latex_escape(t.at("quotations").name) << "}\n";
}

}  // namespace

std::string emit_typeset_source(const CodexManifest& manifest, std::span<const QuotationRecord> quotations,
                                const PageSequence& layout, const TypographySet& typography, const PaletteColor& color,
                                const TitleInfo& title) {
  typography.check();
  if (layout.pages.size() != 2 * quotations.size()) {
    throw ContractError("layout has " + std::to_string(layout.pages.size()) + " pages for " +
                        std::to_string(quotations.size()) + " quotations");
  }
  for (std::size_t i = 0; i < quotations.size(); ++i) {
    const auto& v = layout.pages[2 * i];
    if (v.side != Side::verso || v.content != PageContent::quotation || v.index != static_cast<int>(i)) {
      throw ContractError("layout page " + std::to_string(2 * i) + " is not the verso of quotation " + std::to_string(i));
    }
  }
  auto report = validate_manifest(manifest, quotations, manifest.quotation_count);
  if (!report.passed()) {
    throw ContractError("manifest failed validation: " + format_finding(report.findings().front()));
  }

  std::ostringstream out;
  out << "\\documentclass[10pt,twoside,openany]{memoir}\n";
  auto [w, h] = parse_trim(title.trim_size);
  out << "\\setstocksize{" << inches(h) << "}{" << inches(w) << "}\n";
  out << "\\settrimmedsize{\\stockheight}{\\stockwidth}{*}\n";
  out << "\\setlrmarginsandblock{0.875in}{0.625in}{*}\n";
  out << "\\setulmarginsandblock{0.75in}{0.75in}{*}\n";
  out << "\\checkandfixthelayout\n";
  font_preamble(out, typography);
  out << "\\usepackage{xcolor}\n\\usepackage{tikz}\n";
  out << "\\definecolor{covercolor}{HTML}{" << color.hex() << "}\n";
  out << "\\newcommand{\\dotgrid}{\\begin{tikzpicture}\\foreach \\x in {0,...,20}\\foreach \\y in {0,...,30}"
         "\\fill[gray!60] (\\x*0.2,\\y*0.2) circle (0.3pt);\\end{tikzpicture}}\n";
  out << "% #1 quotation, #2 author, #3 citation, #4 recto message (may be empty)\n";
  out << "\\newcommand{\\pilsaspread}[4]{%\n"
         "  \\cleartoevenpage\\thispagestyle{plain}\\vspace*{\\fill}%\n"
         "  {\\quotationfont\\large #1\\par}\\bigskip\\hfill--- #2\\par\\smallskip{\\footnotesize #3\\par}%\n"
         "  \\vspace*{\\fill}\\newpage\\thispagestyle{plain}%\n"
         "  \\begin{center}\\dotgrid\\end{center}%\n"
         "  \\if\\relax\\detokenize{#4}\\relax\\else\\vfill\\begin{center}\\itshape #4\\end{center}\\fi\\newpage}\n";
  out << "\\title{" << latex_escape(title.title) << "}\n";
  out << "\\author{" << latex_escape(title.author) << "}\n";
  out << "\\begin{document}\n";

  const auto part_text = [&](const std::string& part) {
    if (auto it = manifest.part_texts.find(part); it != manifest.part_texts.end()) {
      out << latex_escape(it->second) << "\n";
    }
  };

  for (const auto& part : manifest.parts) {
    out << "% part: " << part << "\n";
    if (part == "title_page") {
      out << "\\begin{titlingpage}\n\\begin{center}\n{\\Huge\\sffamily " << latex_escape(title.title) << "\\par}\n";
      if (!title.subtitle.empty()) out << "\\bigskip{\\Large " << latex_escape(title.subtitle) << "\\par}\n";
      out << "\\vfill{\\large " << latex_escape(title.author) << "\\par}\\bigskip " << latex_escape(title.imprint)
          << "\\par\n\\end{center}\n\\end{titlingpage}\n";
    } else if (part == "publishers_information") {
      out << "\\thispagestyle{empty}\\vspace*{\\fill}\n\\noindent " << latex_escape(title.imprint) << ", an imprint of "
          << latex_escape(title.publisher) << ".\\\\\n";
      if (!title.isbn.empty()) out << "ISBN " << latex_escape(title.isbn) << "\\\\\n";
      part_text(part);
      out << "\\clearpage\n";
    } else if (part == "contents") {
      out << "\\tableofcontents*\n\\clearpage\n";
    } else if (part == "quotations_for_transcription") {
      out << "\\chapter*{" << part_heading(part) << "}\\addcontentsline{toc}{chapter}{" << part_heading(part) << "}\n";
      part_text(part);
      for (std::size_t i = 0; i < quotations.size(); ++i) {
        const auto& q = quotations[i];
        const auto& recto = layout.pages[2 * i + 1];
        int msg = recto.content == PageContent::dot_grid_with_message ? recto.index : -1;
        std::string message = msg >= 0 && static_cast<std::size_t>(msg) < manifest.messages.size()
                                  ? latex_escape(manifest.messages[static_cast<std::size_t>(msg)])
                                  : "";
        out << "\\pilsaspread{" << latex_escape(q.text) << "}{" << latex_escape(q.author) << "}{"
            << latex_escape(q.citation) << "}{" << message << "}\n";
      }
    } else if (part == "mnemonics") {
      out << "\\chapter*{" << part_heading(part) << "}\\addcontentsline{toc}{chapter}{" << part_heading(part) << "}\n";
      part_text(part);
      if (!manifest.mnemonics.empty()) {
        out << "\\begin{itemize}\n";
        for (const auto& m : manifest.mnemonics) out << "\\item {\\ttfamily " << latex_escape(m) << "}\n";
        out << "\\end{itemize}\n";
      }
    } else if (part == "selection_and_verification") {
      out << "\\chapter*{" << part_heading(part) << "}\\addcontentsline{toc}{chapter}{" << part_heading(part) << "}\n";
      part_text(part);
      out << "\\begin{description}\n";
      for (std::size_t i = 0; i < quotations.size(); ++i) {
        const auto& q = quotations[i];
        out << "\\item[" << (i + 1) << ".] " << latex_escape(q.author) << ", \\emph{" << latex_escape(q.source_work)
            << "}. " << (q.verified ? "Verified." : "Unverified.");
        if (q.editorial_note) out << " " << latex_escape(*q.editorial_note);
        out << "\n";
      }
      out << "\\end{description}\n";
    } else if (part == "bibliography") {
      out << "\\chapter*{" << part_heading(part) << "}\\addcontentsline{toc}{chapter}{" << part_heading(part) << "}\n";
      part_text(part);
      std::vector<std::string> seen;
      out << "\\begin{itemize}\n";
      for (const auto& q : quotations) {
        if (std::find(seen.begin(), seen.end(), q.citation) != seen.end()) continue;
        seen.push_back(q.citation);
        out << "\\item " << latex_escape(q.citation) << "\n";
      }
      out << "\\end{itemize}\n";
    } else {
      out << "\\chapter*{" << latex_escape(part_heading(part)) << "}\\addcontentsline{toc}{chapter}{"
          << latex_escape(part_heading(part)) << "}\n";
      part_text(part);
      if (part == "glossary") {
        out << "{\\koreanfont 필사} (pilsa): the practice of transcribing a text by hand.\n";
      }
    }
  }
  out << "\\end{document}\n";
  return out.str();
}

const PaperModel& PaperModel::builtin() {
  static const PaperModel model = [] {
    auto j = nlohmann::json::parse(data::file("paper_model.json"));
    PaperModel m;
    m.caliper_in_per_page = j.at("caliper_in_per_page").get<double>();
    m.spine_allowance_in = j.at("spine_allowance_in").get<double>();
    m.bleed_in = j.at("bleed_in").get<double>();
    return m;
  }();
  return model;
}

double PaperModel::spine_width_in(int page_count) const {
  if (page_count < 1) throw UsageError("page count must be positive");
  return page_count * caliper_in_per_page + spine_allowance_in;
}

std::string emit_cover_source(const TitleInfo& title, const PaletteColor& color, const TypographySet& typography,
                              int page_count, const PaperModel& paper) {
  typography.check();
  auto [w, h] = parse_trim(title.trim_size);
  const double spine = paper.spine_width_in(page_count);
  const double full_w = 2 * w + spine + 2 * paper.bleed_in;
  const double full_h = h + 2 * paper.bleed_in;
  std::ostringstream out;
  out << "\\documentclass{memoir}\n";
  out << "% spine " << text::format_decimal(spine, 4) << "in for " << page_count << " pages\n";
  out << "\\setstocksize{" << inches(full_h) << "}{" << inches(full_w) << "}\n";
  out << "\\settrimmedsize{\\stockheight}{\\stockwidth}{*}\n";
  out << "\\setlrmarginsandblock{0in}{0in}{*}\n\\setulmarginsandblock{0in}{0in}{*}\n\\checkandfixthelayout\n";
  font_preamble(out, typography);
  out << "\\usepackage{xcolor}\n\\usepackage{tikz}\n";
  out << "\\definecolor{covercolor}{HTML}{" << color.hex() << "}\n";
  out << "\\pagestyle{empty}\n\\begin{document}\n";
  out << "\\begin{tikzpicture}[remember picture,overlay]\n";
  out << "\\fill[covercolor] (current page.south west) rectangle (current page.north east);\n";
  const double front_x = paper.bleed_in + w + spine;
  out << "\\node[anchor=north,text width=" << inches(w - 1.0) << ",align=center,text=white] at ([xshift="
      << inches(front_x + w / 2) << ",yshift=-" << inches(paper.bleed_in + 1.5)
      << "]current page.north west) {{\\Huge\\sffamily " << latex_escape(title.title) << "}\\\\[1em]"
      << "{\\large " << latex_escape(title.subtitle) << "}\\\\[2em]{\\large " << latex_escape(title.author) << "}};\n";
  out << "\\node[rotate=-90,text=white] at ([xshift=" << inches(paper.bleed_in + w + spine / 2)
      << "]current page.west) {\\sffamily " << latex_escape(title.title) << " \\quad " << latex_escape(title.imprint)
      << "};\n";
  out << "\\node[anchor=north west,text width=" << inches(w - 1.0) << ",text=white] at ([xshift="
      << inches(paper.bleed_in + 0.5) << ",yshift=-" << inches(paper.bleed_in + 1.0) << "]current page.north west) {"
      << latex_escape(title.tagline) << "\\\\[1em]{\\koreanfont " << latex_escape(color.korean_name) << "} "
      << latex_escape(color.english_gloss) << "};\n";
  if (!title.isbn.empty()) {
    out << "\\node[anchor=south east,fill=white] at ([xshift=" << inches(paper.bleed_in + w - 0.5) << ",yshift="
        << inches(paper.bleed_in + 0.5) << "]current page.south west) {ISBN " << latex_escape(title.isbn) << "};\n";
  }
  out << "\\end{tikzpicture}\n\\end{document}\n";
  return out.str();
}

int estimated_page_count(const CodexManifest& manifest, const PageSequence& layout) {
  auto quotes = std::find(manifest.parts.begin(), manifest.parts.end(), "quotations_for_transcription");
  int front = static_cast<int>(quotes - manifest.parts.begin());
  int back = quotes == manifest.parts.end() ? 0 : static_cast<int>(manifest.parts.end() - quotes - 1);
  int start = quotation_block_start(front);
  int total = (start - 1) + static_cast<int>(layout.pages.size()) + back;
  return total % 2 == 0 ? total : total + 1;
}

CodexBuild build_codex(const config::ResolvedConfig& cfg, const CodexManifest& manifest,
                       std::span<const QuotationRecord> quotations, const FontAvailability& availability) {
  CodexBuild build;
  build.report = validate_manifest(manifest, quotations, manifest.quotation_count);
  if (!build.report.passed()) return build;
  auto front = std::find(manifest.parts.begin(), manifest.parts.end(), "quotations_for_transcription") -
               manifest.parts.begin();
  build.layout = build_pilsa_layout(quotations, manifest.messages, quotation_block_start(static_cast<int>(front)));
  build.typography = resolve_typography(TypographySet::from_config(cfg), availability);
  auto title = TitleInfo::from_config(cfg);
  build.color = choose_cover_color(title.isbn.empty() ? title.title : title.isbn, builtin_palette());
  build.interior = emit_typeset_source(manifest, quotations, build.layout, build.typography, build.color, title);
  build.cover = emit_cover_source(title, build.color, build.typography, estimated_page_count(manifest, build.layout));
  return build;
}

}  // namespace imprint::codex
