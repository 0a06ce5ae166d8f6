#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/config.hpp"
#include "imprint/errors.hpp"
#include "imprint/report.hpp"

namespace imprint::codex {

enum class CodexType { standard, textbook, reference, pilsa };
std::string_view to_string(CodexType type);
CodexType parse_codex_type(std::string_view name);  // UsageError

// The ten pilsa parts in their required order.
const std::vector<std::string>& pilsa_parts();

struct CodexManifest {
  CodexType codex_type = CodexType::pilsa;
  int quotation_count = 100;
  std::vector<std::string> parts;
  nlohmann::json layout_requirements = nlohmann::json::object();
  std::vector<std::string> messages;   // recto inspirational messages, used cyclically
  std::vector<std::string> mnemonics;  // free texts, no further structure
  std::map<std::string, std::string> part_texts;  // optional prose per part

  // The shipped pilsa manifest (data/pilsa_manifest.json).
  static CodexManifest pilsa_default();
  static CodexManifest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct QuotationRecord {
  std::string text;
  std::string author;
  std::string source_work;
  std::string citation;
  std::optional<std::string> editorial_note;
  int word_count = 0;
  bool verified = false;

  // Fills word_count from the text.
  static QuotationRecord make(std::string text, std::string author, std::string source_work, std::string citation,
                              bool verified = false);
  bool operator==(const QuotationRecord&) const = default;
};

void to_json(nlohmann::json& j, const QuotationRecord& q);
void from_json(const nlohmann::json& j, QuotationRecord& q);
std::vector<QuotationRecord> parse_quotations(const std::string& raw);  // ParseError / ContractError

inline constexpr int kQuotationWordLimit = 250;  // strict: word_count must be below

// Findings only; never throws.
ValidationReport validate_manifest(const CodexManifest& manifest, std::span<const QuotationRecord> quotations,
                                   int expected_count);

// ---------------------------------------------------------------------------
// Pilsa layout

enum class Side { verso, recto };
enum class PageContent { quotation, dot_grid, dot_grid_with_message };
std::string_view to_string(Side side);
std::string_view to_string(PageContent content);

struct Page {
  int folio = 0;
  Side side = Side::verso;
  PageContent content = PageContent::quotation;
  int index = -1;  // quotation index or message index; -1 for a plain grid
  bool operator==(const Page&) const = default;
};

struct PageSequence {
  int first_folio = 2;
  std::vector<Page> pages;
  std::size_t message_count() const;
  bool operator==(const PageSequence&) const = default;
};

// First even folio after `front_matter_pages`, inserting a blank when needed.
int quotation_block_start(int front_matter_pages);

// Quotation i on the i-th verso, dot grid on the facing recto; recto ordinal r
// (1-based) carries message ((r/8) - 1) mod |messages| when r is a multiple of 8.
// UsageError for zero quotations, an odd first folio, or no messages when a slot exists.
PageSequence build_pilsa_layout(std::size_t quotation_count, const std::vector<std::string>& messages,
                                int first_folio = 2);
PageSequence build_pilsa_layout(std::span<const QuotationRecord> quotations, const std::vector<std::string>& messages,
                                int first_folio = 2);

// ---------------------------------------------------------------------------
// Typography

enum class FontSource { adobe, google, local };
std::string_view to_string(FontSource source);
FontSource parse_font_source(std::string_view name);  // UsageError

struct FontChoice {
  std::string name;
  FontSource source = FontSource::google;
  bool operator==(const FontChoice&) const = default;
};

inline constexpr std::array<std::string_view, 5> kFontRoles = {"body", "heading", "korean", "quotations", "mnemonics"};

struct TypographySet {
  std::map<std::string, FontChoice> roles;

  // ContractError unless exactly the five roles are assigned.
  void check() const;
  const FontChoice& at(std::string_view role) const;
  static TypographySet from_config(const config::ResolvedConfig& cfg);
  bool operator==(const TypographySet&) const = default;
};

// Injected so lookups that touch the file system stay out of the pure code.
class FontAvailability {
 public:
  virtual ~FontAvailability() = default;
  virtual bool available(const FontChoice& font) const = 0;
};

class FontSet : public FontAvailability {
 public:
  explicit FontSet(std::set<std::string> names) : names_(std::move(names)) {}
  bool available(const FontChoice& font) const override { return names_.count(font.name) > 0; }

 private:
  std::set<std::string> names_;
};

class AllFontsAvailable : public FontAvailability {
 public:
  bool available(const FontChoice&) const override { return true; }
};

struct SubstitutionTable {
  std::map<std::string, std::string> substitutes;  // font name -> free library stand-in

  static const SubstitutionTable& builtin();
  static SubstitutionTable from_json(const nlohmann::json& j);
};

// Available fonts pass through. An unavailable font is replaced by its table
// entry with source google; TypographyError when there is no entry.
TypographySet resolve_typography(const TypographySet& recommended, const FontAvailability& availability,
                                 const SubstitutionTable& table = SubstitutionTable::builtin());

// ---------------------------------------------------------------------------
// Cover palette

struct PaletteColor {
  std::string key;
  std::string korean_name;
  std::string english_gloss;
  std::string region;
  std::array<int, 3> rgb{};

  std::string hex() const;  // "7DA898"
  bool operator==(const PaletteColor&) const = default;
};

const std::vector<PaletteColor>& builtin_palette();
std::vector<PaletteColor> palette_from_json(const nlohmann::json& j);

// palette[fnv1a64(title_key) % size]. UsageError for an empty palette.
const PaletteColor& choose_cover_color(std::string_view title_key, const std::vector<PaletteColor>& palette);

// ---------------------------------------------------------------------------
// Emission

struct TitleInfo {
  std::string title;
  std::string subtitle;
  std::string author;
  std::string imprint;
  std::string publisher;
  std::string isbn;
  std::string tagline;
  std::string trim_size = "6x9";

  static TitleInfo from_config(const config::ResolvedConfig& cfg);
};

// Escapes the TeX reserved characters \ { } $ & # ^ _ % ~.
std::string latex_escape(std::string_view s);

// memoir-class interior. One \pilsaspread per quotation. ContractError when the
// layout does not match the quotations or the manifest fails validation.
std::string emit_typeset_source(const CodexManifest& manifest, std::span<const QuotationRecord> quotations,
                                const PageSequence& layout, const TypographySet& typography, const PaletteColor& color,
                                const TitleInfo& title);

struct PaperModel {
  double caliper_in_per_page = 0.002252;
  double spine_allowance_in = 0.0625;
  double bleed_in = 0.125;

  static const PaperModel& builtin();
  double spine_width_in(int page_count) const;
};

// Width and height in inches from "6x9" style trims. UsageError otherwise.
std::pair<double, double> parse_trim(std::string_view trim);

std::string emit_cover_source(const TitleInfo& title, const PaletteColor& color, const TypographySet& typography,
                              int page_count, const PaperModel& paper = PaperModel::builtin());

// Total pages of the interior: padded front matter, the quotation block and
// one page per back-matter part.
int estimated_page_count(const CodexManifest& manifest, const PageSequence& layout);

struct CodexBuild {
  ValidationReport report;
  PageSequence layout;
  TypographySet typography;
  PaletteColor color;
  std::string interior;
  std::string cover;
};

// validate -> layout -> typography -> color -> emit. Stops after validation
// (interior and cover left empty) when the report has errors.
CodexBuild build_codex(const config::ResolvedConfig& cfg, const CodexManifest& manifest,
                       std::span<const QuotationRecord> quotations, const FontAvailability& availability);

}  // namespace imprint::codex
