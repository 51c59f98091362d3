#pragma once

#include <stdexcept>
#include <string>

namespace inbo {

enum class ErrorCategory {
  Config,
  Domain,
  Singularity,
  Grid,
  Reflection,
  Lookup,
  Input,
  Conditioning,
  Fit,
  Exhaustion,
  Ingestion,
  Parse,
  Io,
};

const char* to_string(ErrorCategory c);

// Base of all library errors; carries a machine-readable category that the
// CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorCategory::Config, m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(ErrorCategory::Domain, m) {}
};
struct SingularityError : Error {
  explicit SingularityError(const std::string& m) : Error(ErrorCategory::Singularity, m) {}
};
struct GridError : Error {
  explicit GridError(const std::string& m) : Error(ErrorCategory::Grid, m) {}
};
struct ReflectionError : Error {
  explicit ReflectionError(const std::string& m) : Error(ErrorCategory::Reflection, m) {}
};
struct LookupError : Error {
  explicit LookupError(const std::string& m) : Error(ErrorCategory::Lookup, m) {}
};
struct InputError : Error {
  explicit InputError(const std::string& m) : Error(ErrorCategory::Input, m) {}
};
struct ConditioningError : Error {
  explicit ConditioningError(const std::string& m) : Error(ErrorCategory::Conditioning, m) {}
};
struct FitError : Error {
  explicit FitError(const std::string& m) : Error(ErrorCategory::Fit, m) {}
};
struct ExhaustionError : Error {
  explicit ExhaustionError(const std::string& m) : Error(ErrorCategory::Exhaustion, m) {}
};
struct IngestionError : Error {
  explicit IngestionError(const std::string& m) : Error(ErrorCategory::Ingestion, m) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorCategory::Parse, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorCategory::Io, m) {}
};

}  // namespace inbo
