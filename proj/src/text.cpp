#include "imprint/text.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "imprint/errors.hpp"

namespace imprint::text {

namespace {
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
}  // namespace

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(separator);
    out.append(parts[i]);
  }
  return out;
}

std::size_t word_count(std::string_view s) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  int month = (s[5] - '0') * 10 + (s[6] - '0');
  int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

bool is_valid_isbn(std::string_view isbn) {
  std::string digits;
  for (char c : isbn) {
    if (c == '-' || c == ' ') continue;
    digits.push_back(c);
  }
  if (digits.size() == 13) {
    int sum = 0;
    for (std::size_t i = 0; i < 13; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(digits[i]))) return false;
      sum += (digits[i] - '0') * (i % 2 == 0 ? 1 : 3);
    }
    return sum % 10 == 0;
  }
  if (digits.size() == 10) {
    int sum = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      int v;
      if (i == 9 && (digits[i] == 'X' || digits[i] == 'x')) {
        v = 10;
      } else if (std::isdigit(static_cast<unsigned char>(digits[i]))) {
        v = digits[i] - '0';
      } else {
        return false;
      }
      sum += v * static_cast<int>(10 - i);
    }
    return sum % 11 == 0;
  }
  return false;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) ||
                                 std::isdigit(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
        ++j;
      }
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        std::string name(tmpl.substr(i + 1, j - i - 1));
        auto it = slots.find(name);
        if (it == slots.end()) throw ContractError("template slot '{" + name + "}' has no value");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string format_decimal(double value, int decimals) {
  // snprintf honours LC_NUMERIC; swap a comma separator back to a period.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out(buf);
  for (auto& c : out) {
    if (c == ',') c = '.';
  }
  if (out == "-0" || out.rfind("-0.", 0) == 0) {
    bool all_zero = true;
    for (char c : out.substr(1)) {
      if (c != '0' && c != '.') all_zero = false;
    }
    if (all_zero) out.erase(0, 1);
  }
  return out;
}

std::string format_number(double value, int max_decimals) {
  for (int d = 0; d <= max_decimals; ++d) {
    std::string candidate = format_decimal(value, d);
    if (std::fabs(std::stod(candidate) - value) <= 1e-12 * std::max(1.0, std::fabs(value))) return candidate;
  }
  std::string out = format_decimal(value, max_decimals);
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  return out;
}

}  // namespace imprint::text
