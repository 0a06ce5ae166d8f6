#include "imprint/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "imprint/embedded_data.hpp"
#include "imprint/text.hpp"

namespace imprint::qa {

// ---------------------------------------------------------------------------
// Verification

std::string_view to_string(VerificationStatus status) {
  switch (status) {
    case VerificationStatus::verified: return "verified";
    case VerificationStatus::unverified: return "unverified";
    case VerificationStatus::failed: return "failed";
  }
  return "?";
}

VerificationStatus parse_verification_status(std::string_view name) {
  for (auto s : {VerificationStatus::verified, VerificationStatus::unverified, VerificationStatus::failed}) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown verification status '" + std::string(name) + "'");
}

namespace {

std::string normalize(std::string_view s) { return text::join(text::split_whitespace(text::to_lower_ascii(s)), " "); }

// First {...} region; replies often wrap JSON in prose or fences.
std::optional<nlohmann::json> json_object_in(const std::string& raw) {
  auto start = raw.find('{');
  auto end = raw.rfind('}');
  if (start == std::string::npos || end == std::string::npos || end < start) return std::nullopt;
  auto doc = nlohmann::json::parse(raw.substr(start, end - start + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

}  // namespace

FixtureChecker FixtureChecker::from_json(const nlohmann::json& j) {
  std::vector<Entry> corpus;
  const auto& list = j.is_object() ? j.at("corpus") : j;
  for (const auto& e : list) {
    corpus.push_back({e.at("text").get<std::string>(), e.value("author", std::string()),
                      e.value("source_work", std::string()), e.value("location", std::string())});
  }
  return FixtureChecker(std::move(corpus));
}

CheckResult FixtureChecker::check(const codex::QuotationRecord& q) const {
  CheckResult r;
  for (const auto& e : corpus_) {
    if (normalize(e.author) != normalize(q.author) || normalize(e.source_work) != normalize(q.source_work)) continue;
    r.exists = true;
    if (normalize(e.text) == normalize(q.text)) {
      r.supports = true;
      r.evidence = "matches " + e.source_work + (e.location.empty() ? "" : ", " + e.location) + " verbatim";
      return r;
    }
  }
  r.reason = r.exists ? "source found but the quotation text does not appear in it"
                      : "no corpus entry for " + q.author + ", " + q.source_work;
  return r;
}

GatewayChecker::GatewayChecker(const gateway::Gateway& gateway, persona::PublisherPersona persona,
                               const config::ResolvedConfig& cfg, const persona::PromptTemplates& templates)
    : gateway_(gateway),
      persona_(std::move(persona)),
      base_(gateway::make_request({{}, {}, TaskKind::analytical}, cfg)),
      templates_(templates) {}

CheckResult GatewayChecker::check(const codex::QuotationRecord& q) const {
  auto req = base_;
  req.bundle = persona::assemble_prompt(persona_, TaskKind::analytical,
                                        persona::VerificationPayload{q.text, q.author, q.source_work, q.citation},
                                        templates_);
  auto res = gateway_.call(req);
  auto doc = json_object_in(res.text);
  if (!doc || !(*doc)["exists"].is_boolean() || !(*doc)["supports"].is_boolean()) {
    throw EvaluationError("verification reply lacks exists/supports", res.text);
  }
  CheckResult r;
  r.exists = (*doc)["exists"].get<bool>();
  r.supports = (*doc)["supports"].get<bool>();
  r.evidence = doc->value("evidence", std::string());
  r.reason = doc->value("reason", std::string());
  return r;
}

void to_json(nlohmann::json& j, const VerificationRecord& r) {
  j = {{"quotation_index", r.quotation_index},
       {"status", std::string(to_string(r.status))},
       {"method", r.method},
       {"evidence", r.evidence},
       {"appendix_entry", r.appendix_entry}};
}

void from_json(const nlohmann::json& j, VerificationRecord& r) {
  r.quotation_index = j.at("quotation_index").get<std::size_t>();
  r.status = parse_verification_status(j.at("status").get<std::string>());
  r.method = j.value("method", std::string());
  r.evidence = j.value("evidence", std::string());
  r.appendix_entry = j.value("appendix_entry", std::string());
}

VerificationRecord verify_quotation(const codex::QuotationRecord& q, std::size_t index, const SourceChecker& checker) {
  VerificationRecord rec;
  rec.quotation_index = index;
  rec.method = checker.method();
  std::string note;
  try {
    auto result = checker.check(q);
    if (result.exists && result.supports && !text::trim(result.evidence).empty()) {
      rec.status = VerificationStatus::verified;
      rec.evidence = result.evidence;
      note = "Verified: " + result.evidence + ".";
    } else if (result.exists && result.supports) {
      rec.status = VerificationStatus::unverified;
      note = "Unverified: the check confirmed the quotation but gave no evidence.";
    } else {
      rec.status = VerificationStatus::failed;
      rec.evidence = result.reason;
      note = "Failed: " + (result.reason.empty() ? std::string("source does not support the quotation") : result.reason) + ".";
    }
  } catch (const std::exception& e) {
    rec.status = VerificationStatus::unverified;
    note = std::string("Unverified: the check could not be completed (") + e.what() + ").";
  }
  rec.appendix_entry = std::to_string(index + 1) + ". " + q.author + ", " + q.source_work + ". " + note +
                       " Method: " + rec.method + ".";
  return rec;
}

std::vector<VerificationRecord> verify_all(std::span<const codex::QuotationRecord> quotations,
                                           const SourceChecker& checker) {
  std::vector<VerificationRecord> out;
  out.reserve(quotations.size());
  for (std::size_t i = 0; i < quotations.size(); ++i) out.push_back(verify_quotation(quotations[i], i, checker));
  return out;
}

void apply_verification(std::vector<codex::QuotationRecord>& quotations, std::span<const VerificationRecord> records) {
  for (const auto& r : records) {
    if (r.quotation_index >= quotations.size()) throw ContractError("verification record for a missing quotation");
    quotations[r.quotation_index].verified = r.status == VerificationStatus::verified;
  }
}

std::string verification_appendix(std::span<const VerificationRecord> records) {
  std::string out;
  for (const auto& r : records) out += r.appendix_entry + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Citations

std::vector<Finding> check_citation_format(std::string_view citation, std::string_view style) {
  const std::string s = text::trim(citation);
  std::vector<Finding> out;
  auto finding = [&](std::string message) { out.push_back({Layer::semantic, "citation", std::move(message)}); };
  if (style == "chicago") {
    static const std::regex year(R"((^|[\s.,(])((1[0-9]{3}|20[0-9]{2})[a-z]?)\.(\s|$))");
    std::smatch m;
    if (!std::regex_search(s, m, year)) {
      finding("year absent");
      return out;
    }
    std::string author = text::trim(m.prefix().str());
    std::string title = text::trim(m.suffix().str());
    if (author.empty()) finding("author absent before the year");
    if (title.empty()) finding("title absent after the year");
    if (!author.empty() && author.back() != '.') finding("author must end with a period before the year");
  } else if (style == "apa") {
    static const std::regex year(R"(\(((1[0-9]{3}|20[0-9]{2})[a-z]?|n\.d\.)(,[^)]*)?\)\.)");
    std::smatch m;
    if (!std::regex_search(s, m, year)) {
      finding("year absent");
      return out;
    }
    if (text::trim(m.prefix().str()).empty()) finding("author absent before the year");
    if (text::trim(m.suffix().str()).empty()) finding("title absent after the year");
  } else {
    throw UsageError("unsupported citation style '" + std::string(style) + "' (supported: chicago, apa)");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency review

std::vector<ConsistencyFinding> consistency_review(std::string_view text, const gateway::Gateway& gateway,
                                                   const persona::PublisherPersona& persona,
                                                   const config::ResolvedConfig& cfg,
                                                   const persona::PromptTemplates& templates) {
  if (text::trim(text).empty()) throw UsageError("consistency review needs manuscript text");
  auto bundle = persona::assemble_prompt(persona, TaskKind::analytical, persona::ReviewPayload{std::string(text)},
                                         templates);
  gateway::ModelResponse res;
  try {
    res = gateway.call(gateway::make_request(std::move(bundle), cfg));
  } catch (const gateway::ExhaustionError& e) {
    throw ReviewError(std::string("consistency review could not run: ") + e.what());
  }
  auto doc = json_object_in(res.text);
  if (!doc || !(*doc)["findings"].is_array()) throw ReviewError("consistency review reply has no findings list");
  std::vector<ConsistencyFinding> out;
  for (const auto& f : (*doc)["findings"]) {
    if (!f.is_object() || !f.contains("issue") || !f["issue"].is_string()) {
      throw ReviewError("consistency finding without an issue: " + f.dump());
    }
    out.push_back({f.value("location", std::string()), f["issue"].get<std::string>()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

const SensitivityPolicy& SensitivityPolicy::builtin() {
  static const SensitivityPolicy policy = from_json(nlohmann::json::parse(data::file("sensitivity_policy.json")));
  return policy;
}

SensitivityPolicy SensitivityPolicy::from_json(const nlohmann::json& j) {
  SensitivityPolicy p;
  for (const auto& r : j.at("rules")) {
    SensitivityRule rule;
    rule.id = r.at("id").get<std::string>();
    rule.term = r.value("term", std::string());
    rule.pattern = r.value("pattern", std::string());
    rule.whole_word = r.value("whole_word", true);
    rule.severity = r.value("severity", std::string("warning")) == "error" ? Severity::error : Severity::warning;
    rule.message = r.value("message", std::string());
    if (rule.term.empty() && rule.pattern.empty()) throw ContractError("sensitivity rule " + rule.id + " has no term or pattern");
    if (!rule.pattern.empty()) {
      try {
        std::regex test(rule.pattern);
      } catch (const std::regex_error& e) {
        throw ContractError("sensitivity rule " + rule.id + " has an invalid pattern: " + e.what());
      }
    }
    p.rules.push_back(std::move(rule));
  }
  return p;
}

std::vector<SensitivityHit> sensitivity_scan(std::string_view text, const SensitivityPolicy& policy) {
  const std::string original(text);
  const std::string lowered = text::to_lower_ascii(text);
  auto is_word = [&](std::size_t i) {
    return i < original.size() && (std::isalnum(static_cast<unsigned char>(original[i])) || original[i] == '_');
  };
  auto bounded = [&](std::size_t b, std::size_t e) { return (b == 0 || !is_word(b - 1)) && !is_word(e); };

  std::vector<SensitivityHit> hits;
  for (const auto& rule : policy.rules) {
    auto add = [&](std::size_t b, std::size_t e) {
      if (rule.whole_word && !bounded(b, e)) return;
      hits.push_back({rule.id, b, e, original.substr(b, e - b), rule.severity, rule.message});
    };
    if (!rule.term.empty()) {
      const std::string needle = text::to_lower_ascii(rule.term);
      for (auto pos = lowered.find(needle); pos != std::string::npos; pos = lowered.find(needle, pos + 1)) {
        add(pos, pos + needle.size());
      }
    } else {
      std::regex re(rule.pattern, std::regex::ECMAScript | std::regex::icase);
      for (auto it = std::sregex_iterator(original.begin(), original.end(), re); it != std::sregex_iterator(); ++it) {
        if (it->length(0) == 0) continue;
        auto b = static_cast<std::size_t>(it->position(0));
        add(b, b + static_cast<std::size_t>(it->length(0)));
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const SensitivityHit& a, const SensitivityHit& b) {
    return std::tie(a.begin, a.end, a.rule_id) < std::tie(b.begin, b.end, b.rule_id);
  });
  return hits;
}

// ---------------------------------------------------------------------------
// Pricing

std::string_view to_string(MarkupConvention c) { return c == MarkupConvention::cost_plus ? "cost_plus" : "multiplier"; }

MarkupConvention parse_markup_convention(std::string_view name) {
  if (name == "cost_plus") return MarkupConvention::cost_plus;
  if (name == "multiplier") return MarkupConvention::multiplier;
  throw UsageError("unknown markup convention '" + std::string(name) + "'");
}

namespace {

// Hundredths of a unit, half-up; inputs are non-negative.
std::int64_t hundredths(double v, const char* what) {
  if (!std::isfinite(v) || v < 0) throw RangeError(std::string(what) + " must be a non-negative number");
  return static_cast<std::int64_t>(std::floor(v * 100.0 + 0.5 + 1e-9));
}

std::int64_t scale_half_up(std::int64_t cents, std::int64_t factor_bp) {
  return (cents * factor_bp + 5000) / 10000;
}

}  // namespace

std::int64_t to_cents(double amount) { return hundredths(amount, "amount"); }

std::string format_cents(std::int64_t cents) {
  const bool neg = cents < 0;
  const std::int64_t a = neg ? -cents : cents;
  std::string frac = std::to_string(a % 100);
  if (frac.size() < 2) frac = "0" + frac;
  return (neg ? "-" : "") + std::to_string(a / 100) + "." + frac;
}

std::string PriceQuote::list_price() const { return format_cents(list_cents); }
std::string PriceQuote::wholesale_receipt() const { return format_cents(wholesale_cents); }

PriceQuote compute_price(double base_cost, double markup_pct, std::string market, double discount_pct,
                         MarkupConvention convention) {
  const std::int64_t base = hundredths(base_cost, "base cost");
  const std::int64_t markup_bp = hundredths(markup_pct, "markup");
  if (!std::isfinite(discount_pct) || discount_pct < 0 || discount_pct > 100) {
    throw RangeError("discount " + text::format_number(discount_pct) + " out of range [0,100]");
  }
  const std::int64_t discount_bp = hundredths(discount_pct, "discount");
  PriceQuote q;
  q.market = std::move(market);
  const std::int64_t factor = convention == MarkupConvention::cost_plus ? 10000 + markup_bp : markup_bp;
  q.list_cents = scale_half_up(base, factor);
  q.wholesale_cents = scale_half_up(q.list_cents, 10000 - discount_bp);
  return q;
}

// ---------------------------------------------------------------------------
// Distribution rows

namespace {

const std::regex& hardcover_pattern() {
  static const std::regex re("case|hardcover|hard cover|cloth|jacket", std::regex::icase);
  return re;
}

std::string format_bp(std::int64_t bp) {
  std::string out = std::to_string(bp / 100);
  std::int64_t frac = bp % 100;
  if (frac != 0) {
    out += frac % 10 == 0 ? "." + std::to_string(frac / 10) : (frac < 10 ? ".0" : ".") + std::to_string(frac);
  }
  return out;
}

std::int64_t parse_fixed(const std::string& field, int decimals, const std::string& what) {
  static const std::regex re(R"(^([0-9]+)(?:\.([0-9]+))?$)");
  std::smatch m;
  if (!std::regex_match(field, m, re) || (m[2].matched && m[2].length() > decimals)) {
    throw ParseError("malformed " + what + " '" + field + "'", 0, 0, 0);
  }
  std::string frac = m[2].matched ? m[2].str() : "";
  frac.resize(static_cast<std::size_t>(decimals), '0');
  return std::stoll(m[1].str()) * 100 + std::stoll(frac);
}

}  // namespace

DistributionRow row_from_config(const config::ResolvedConfig& cfg) {
  DistributionRow row;
  row.isbn = cfg.get_string("metadata.isbn").value_or("");
  row.title = cfg.get_string("metadata.title").value_or("");
  row.binding_type = cfg.string("book_defaults.binding_type");
  row.trim_size = cfg.string("book_defaults.trim_size");
  row.rendition = cfg.string("distribution.rendition");
  const double base = cfg.get_number("pricing.base_cost").value_or(0.0);
  const double markup = cfg.number("pricing.markup_pct");
  const double discount = cfg.number("pricing.wholesale_discount_pct");
  const auto convention = parse_markup_convention(cfg.get_string("pricing.markup_convention").value_or("cost_plus"));
  const auto* overrides = cfg.find("pricing.market_discounts");
  for (const auto& market : cfg.strings("pricing.markets")) {
    double d = discount;
    if (overrides && overrides->is_object() && overrides->contains(market) && (*overrides)[market].is_number()) {
      d = (*overrides)[market].get<double>();
    }
    auto quote = compute_price(base, markup, market, d, convention);
    row.markets.push_back({market, quote.list_cents, hundredths(d, "discount")});
  }
  return row;
}

std::vector<std::string> csv_header(const std::vector<std::string>& markets) {
  std::vector<std::string> h = {"isbn", "title", "binding_type", "trim_size", "rendition"};
  for (const auto& m : markets) {
    h.push_back("price_" + m);
    h.push_back("discount_" + m);
  }
  return h;
}

ValidationReport validate_rows(std::span<const DistributionRow> rows, const std::vector<std::string>& markets) {
  ValidationReport report;
  static const std::regex dims(R"([0-9.]+ ?x ?[0-9.]+)", std::regex::icase);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string p = "rows[" + std::to_string(i) + "].";
    if (!text::is_valid_isbn(r.isbn)) report.add(Layer::semantic, p + "isbn", "ISBN '" + r.isbn + "' fails its check digit");
    if (text::trim(r.title).empty()) report.add(Layer::semantic, p + "title", "title is empty");
    const auto binding = text::to_lower_ascii(text::trim(r.binding_type));
    const bool hard_rendition = std::regex_search(r.rendition, hardcover_pattern());
    if (binding != "paperback" && binding != "hardcover") {
      report.add(Layer::semantic, p + "binding_type", "binding_type must be paperback or hardcover, got '" + r.binding_type + "'");
    } else if ((binding == "hardcover") != hard_rendition) {
      report.add(Layer::business_rule, p + "binding_type",
                 "binding_type '" + r.binding_type + "' does not match rendition '" + r.rendition + "'");
    }
    if (std::regex_search(r.rendition, dims) && r.rendition.find(r.trim_size) == std::string::npos) {
      report.add(Layer::business_rule, p + "trim_size",
                 "trim_size '" + r.trim_size + "' does not match rendition '" + r.rendition + "'");
    }
    std::vector<std::string> got;
    for (const auto& m : r.markets) got.push_back(m.market);
    if (got != markets) {
      report.add(Layer::semantic, p + "markets",
                 "prices must cover exactly the configured markets in order (" + text::join(markets, ", ") + ")");
    }
    for (const auto& m : r.markets) {
      if (m.list_cents <= 0) report.add(Layer::semantic, p + "price_" + m.market, "list price must be positive");
      if (m.discount_bp < 0 || m.discount_bp > 10000) {
        report.add(Layer::semantic, p + "discount_" + m.market, "discount out of range [0,100]");
      }
    }
  }
  return report;
}

namespace {

void put_quoted(std::string& out, std::string_view field) {
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

std::string emit_csv(std::span<const DistributionRow> rows, const std::vector<std::string>& markets) {
  std::string out;
  auto header = csv_header(markets);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    put_quoted(out, header[i]);
  }
  out += "\r\n";
  for (const auto& r : rows) {
    put_quoted(out, r.isbn);
    for (const auto* f : {&r.title, &r.binding_type, &r.trim_size, &r.rendition}) {
      out += ',';
      put_quoted(out, *f);
    }
    for (const auto& m : r.markets) {
      out += ',' + format_cents(m.list_cents) + ',' + format_bp(m.discount_bp);
    }
    out += "\r\n";
  }
  return out;
}

std::vector<DistributionRow> parse_distribution_csv(std::string_view csv) {
  // RFC 4180 records; CRLF required between records.
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t i = 0;
  const auto fail = [&](const std::string& msg) { throw ParseError(msg, i, line, 0); };
  bool any = false;
  while (i < csv.size()) {
    any = true;
    if (csv[i] == '"') {
      ++i;
      while (true) {
        if (i >= csv.size()) fail("unterminated quoted field");
        if (csv[i] == '"') {
          if (i + 1 < csv.size() && csv[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          if (csv[i] == '\n') ++line;
          field += csv[i++];
        }
      }
    } else {
      while (i < csv.size() && csv[i] != ',' && csv[i] != '\r' && csv[i] != '\n') {
        if (csv[i] == '"') fail("quote inside an unquoted field");
        field += csv[i++];
      }
    }
    record.push_back(std::move(field));
    field.clear();
    if (i >= csv.size()) fail("missing CRLF after the last record");
    if (csv[i] == ',') {
      ++i;
      if (i >= csv.size()) fail("missing CRLF after the last record");
      continue;
    }
    if (csv[i] != '\r' || i + 1 >= csv.size() || csv[i + 1] != '\n') fail("records must end with CRLF");
    i += 2;
    ++line;
    records.push_back(std::move(record));
    record.clear();
  }
  if (!any || records.empty()) throw ParseError("CSV has no header row", 0, 1, 0);

  const auto& header = records.front();
  if (header.size() < 5 || (header.size() - 5) % 2 != 0) throw ParseError("header has the wrong column count", 0, 1, 0);
  std::vector<std::string> markets;
  for (std::size_t c = 5; c < header.size(); c += 2) {
    if (header[c].rfind("price_", 0) != 0) throw ParseError("expected price_<MARKET> at column " + std::to_string(c + 1), 0, 1, 0);
    markets.push_back(header[c].substr(6));
  }
  if (header != csv_header(markets)) throw ParseError("header does not match the published column order", 0, 1, 0);

  std::vector<DistributionRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(rec.size()) + " fields, expected " +
                           std::to_string(header.size()),
                       0, r + 1, 0);
    }
    DistributionRow row{rec[0], rec[1], rec[2], rec[3], rec[4], {}};
    for (std::size_t m = 0; m < markets.size(); ++m) {
      row.markets.push_back({markets[m], parse_fixed(rec[5 + 2 * m], 2, "price"),
                             parse_fixed(rec[6 + 2 * m], 2, "discount")});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ExportResult export_distribution_csv(std::span<const DistributionRow> rows, const config::ResolvedConfig& cfg,
                                     const gateway::GateRequirement& gate) {
  const auto markets = cfg.strings("pricing.markets");
  ExportResult result;
  result.report = validate_rows(rows, markets);
  if (!gate.may_execute()) {
    throw GateError("distribution export requires a recorded human approval (" +
                    std::to_string(result.report.error_count()) + " error findings pending)");
  }
  if (result.report.passed()) result.csv = emit_csv(rows, markets);
  return result;
}

}  // namespace imprint::qa
