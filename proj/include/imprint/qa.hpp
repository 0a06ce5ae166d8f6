#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "imprint/codex.hpp"
#include "imprint/config.hpp"
#include "imprint/gateway.hpp"
#include "imprint/persona.hpp"
#include "imprint/report.hpp"

namespace imprint::qa {

// ---------------------------------------------------------------------------
// Quotation verification

enum class VerificationStatus { verified, unverified, failed };
std::string_view to_string(VerificationStatus status);
VerificationStatus parse_verification_status(std::string_view name);

struct CheckResult {
  bool exists = false;
  bool supports = false;
  std::string evidence;
  std::string reason;
};

class SourceChecker {
 public:
  virtual ~SourceChecker() = default;
  virtual std::string method() const = 0;
  // May throw; any exception is read as "could not check".
  virtual CheckResult check(const codex::QuotationRecord& q) const = 0;
};

// Deterministic corpus lookup. A quotation exists when its author and source
// are in the corpus, and is supported when the corpus text matches it after
// whitespace and case normalization.
class FixtureChecker : public SourceChecker {
 public:
  struct Entry {
    std::string text;
    std::string author;
    std::string source_work;
    std::string location;  // page or section, used as evidence
  };
  explicit FixtureChecker(std::vector<Entry> corpus) : corpus_(std::move(corpus)) {}
  static FixtureChecker from_json(const nlohmann::json& j);

  std::string method() const override { return "fixture corpus lookup"; }
  CheckResult check(const codex::QuotationRecord& q) const override;

 private:
  std::vector<Entry> corpus_;
};

// Asks a model through the gateway at the analytical temperature.
class GatewayChecker : public SourceChecker {
 public:
  GatewayChecker(const gateway::Gateway& gateway, persona::PublisherPersona persona, const config::ResolvedConfig& cfg,
                 const persona::PromptTemplates& templates = persona::PromptTemplates::builtin());
  std::string method() const override { return "model-assisted source check"; }
  CheckResult check(const codex::QuotationRecord& q) const override;

 private:
  const gateway::Gateway& gateway_;
  persona::PublisherPersona persona_;
  gateway::PromptRequest base_;
  const persona::PromptTemplates& templates_;
};

struct VerificationRecord {
  std::size_t quotation_index = 0;
  VerificationStatus status = VerificationStatus::unverified;
  std::string method;
  std::string evidence;
  std::string appendix_entry;

  bool operator==(const VerificationRecord&) const = default;
};

void to_json(nlohmann::json& j, const VerificationRecord& r);
void from_json(const nlohmann::json& j, VerificationRecord& r);

// verified iff the checker confirms existence and support with evidence;
// failed when it denies either; unverified when it cannot answer.
VerificationRecord verify_quotation(const codex::QuotationRecord& q, std::size_t index, const SourceChecker& checker);
std::vector<VerificationRecord> verify_all(std::span<const codex::QuotationRecord> quotations,
                                           const SourceChecker& checker);
// Copies the statuses back onto the quotations (verified flag).
void apply_verification(std::vector<codex::QuotationRecord>& quotations, std::span<const VerificationRecord> records);
// One entry per record, in order.
std::string verification_appendix(std::span<const VerificationRecord> records);

// ---------------------------------------------------------------------------
// Citations, consistency, sensitivity

// Structural check only: author, year and title present and in the style's order.
// Supported: chicago (author-date), apa. UsageError otherwise.
std::vector<Finding> check_citation_format(std::string_view citation, std::string_view style);

struct ConsistencyFinding {
  std::string location;
  std::string issue;
  bool operator==(const ConsistencyFinding&) const = default;
};

// Analytical request (temperature 0). UsageError for empty text; ReviewError
// when the chain is exhausted or the reply cannot be read.
std::vector<ConsistencyFinding> consistency_review(std::string_view text, const gateway::Gateway& gateway,
                                                   const persona::PublisherPersona& persona,
                                                   const config::ResolvedConfig& cfg,
                                                   const persona::PromptTemplates& templates =
                                                       persona::PromptTemplates::builtin());

struct SensitivityRule {
  std::string id;
  std::string term;     // literal, matched case-insensitively
  std::string pattern;  // ECMAScript regex, used when term is empty
  bool whole_word = true;
  Severity severity = Severity::warning;
  std::string message;
};

struct SensitivityPolicy {
  std::vector<SensitivityRule> rules;
  static const SensitivityPolicy& builtin();  // empty by default
  static SensitivityPolicy from_json(const nlohmann::json& j);
};

struct SensitivityHit {
  std::string rule_id;
  std::size_t begin = 0;  // byte offsets, half-open
  std::size_t end = 0;
  std::string matched;
  Severity severity = Severity::warning;
  std::string message;
  bool operator==(const SensitivityHit&) const = default;
};

// Every hit of every rule, overlaps included, ordered by (begin, end, rule id).
std::vector<SensitivityHit> sensitivity_scan(std::string_view text, const SensitivityPolicy& policy);

// ---------------------------------------------------------------------------
// Pricing

enum class MarkupConvention { cost_plus, multiplier };
std::string_view to_string(MarkupConvention c);
MarkupConvention parse_markup_convention(std::string_view name);  // UsageError

struct PriceQuote {
  std::string market;
  std::int64_t list_cents = 0;
  std::int64_t wholesale_cents = 0;

  std::string list_price() const;       // "10.00"
  std::string wholesale_receipt() const;
  bool operator==(const PriceQuote&) const = default;
};

// Whole cents from a decimal amount, half-up. RangeError for negatives or non-finite input.
std::int64_t to_cents(double amount);
std::string format_cents(std::int64_t cents);

// cost_plus: list = base * (1 + markup/100); multiplier: list = base * markup/100.
// wholesale = list * (1 - discount/100). Both rounded half-up to the cent in
// exact integer arithmetic on hundredths of a percent. RangeError for negative
// amounts or a discount outside [0,100].
PriceQuote compute_price(double base_cost, double markup_pct, std::string market, double discount_pct,
                         MarkupConvention convention = MarkupConvention::cost_plus);

// ---------------------------------------------------------------------------
// Distribution feed

struct MarketTerms {
  std::string market;
  std::int64_t list_cents = 0;
  std::int64_t discount_bp = 0;  // hundredths of a percent: 40% = 4000
  bool operator==(const MarketTerms&) const = default;
};

struct DistributionRow {
  std::string isbn;
  std::string title;
  std::string binding_type;
  std::string trim_size;
  std::string rendition;
  std::vector<MarketTerms> markets;  // config market order
  bool operator==(const DistributionRow&) const = default;
};

// The row a title's resolved configuration describes, priced for every market.
DistributionRow row_from_config(const config::ResolvedConfig& cfg);

std::vector<std::string> csv_header(const std::vector<std::string>& markets);

// Findings on paths rows[i].<column>.
ValidationReport validate_rows(std::span<const DistributionRow> rows, const std::vector<std::string>& markets);

struct ExportResult {
  ValidationReport report;
  std::optional<std::string> csv;  // absent when refused
};

// Comma separated, CRLF, UTF-8 without BOM, text fields quoted. Throws
// GateError when the distribution gate has no human approval. With approval,
// any error finding refuses the export (csv empty, findings returned).
ExportResult export_distribution_csv(std::span<const DistributionRow> rows, const config::ResolvedConfig& cfg,
                                     const gateway::GateRequirement& gate);

// Serializes without validation or gate. Used by the exporter and round-trip tests.
std::string emit_csv(std::span<const DistributionRow> rows, const std::vector<std::string>& markets);
// ParseError on malformed CSV or a header that is not the published layout.
std::vector<DistributionRow> parse_distribution_csv(std::string_view csv);

}  // namespace imprint::qa
