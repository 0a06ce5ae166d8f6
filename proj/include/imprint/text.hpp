#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared across modules.
namespace imprint::text {

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

// Whitespace-token count.
std::size_t word_count(std::string_view s);

// 64-bit FNV-1a over the raw bytes. Stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

bool is_iso_date(std::string_view s);

// ISBN-10 or ISBN-13 with a correct check digit; hyphens and spaces ignored.
bool is_valid_isbn(std::string_view isbn);

// Replaces `{slot}` placeholders (slot = [a-z0-9_]+) in one pass. Values are
// not rescanned. Throws ContractError for a slot with no value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

// Fixed-point rendering that never depends on the global locale.
std::string format_decimal(double value, int decimals);
// Shortest of up to `max_decimals` digits that still round-trips, trailing zeros trimmed.
std::string format_number(double value, int max_decimals = 6);

}  // namespace imprint::text
