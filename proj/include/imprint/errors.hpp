#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace imprint {

// Base of every error the engine raises. `kind()` is a stable tag used by the
// CLI and HTTP layers to map failures onto exit codes and status codes.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define IMPRINT_DEFINE_ERROR(Name, tag)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& message) : Error(tag, message) {}   \
  };

IMPRINT_DEFINE_ERROR(UsageError, "usage")
IMPRINT_DEFINE_ERROR(ContractError, "contract")
IMPRINT_DEFINE_ERROR(VersionError, "version")
IMPRINT_DEFINE_ERROR(NotFoundError, "not_found")
IMPRINT_DEFINE_ERROR(StateError, "state")
IMPRINT_DEFINE_ERROR(ConfigurationError, "configuration")
IMPRINT_DEFINE_ERROR(TypographyError, "typography")
IMPRINT_DEFINE_ERROR(RangeError, "range")
IMPRINT_DEFINE_ERROR(GateError, "gate")
IMPRINT_DEFINE_ERROR(ReviewError, "review")
IMPRINT_DEFINE_ERROR(StoreError, "store")

#undef IMPRINT_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte, std::size_t line, std::size_t column)
      : Error("parse", message + " (byte " + std::to_string(byte) + ", line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        byte_(byte),
        line_(line),
        column_(column) {}
  std::size_t byte() const noexcept { return byte_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t byte_, line_, column_;
};

class ResolutionError : public Error {
 public:
  explicit ResolutionError(std::vector<std::string> missing)
      : Error("resolution", describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing_paths() const noexcept { return missing_; }

 private:
  static std::string describe(const std::vector<std::string>& missing) {
    std::string out = "required fields undefined at every level:";
    for (const auto& path : missing) out += " " + path;
    return out;
  }
  std::vector<std::string> missing_;
};

// The model response could not be turned into a judgment. Keeps the raw text
// for the audit trail.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& message, std::string raw_response)
      : Error("evaluation", message), raw_(std::move(raw_response)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace imprint
