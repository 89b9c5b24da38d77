#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace canguard {

/// Coarse error classes. The CLI maps each to a distinct exit code.
enum class ErrorCategory {
  kIo = 2,
  kSchema = 3,
  kParse = 4,
  kLabel = 5,
  kImputation = 6,
  kSplit = 7,
  kConfig = 8,
  kStatistics = 9,
  kFit = 10,
  kNumeric = 11,
  kShape = 12,
  kArgument = 13,
  kFormat = 14,
};

std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

#define CANGUARD_DEFINE_ERROR(Name, Category)                          \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message)                          \
        : Error(ErrorCategory::Category, message) {}                   \
  };

CANGUARD_DEFINE_ERROR(IoError, kIo)
CANGUARD_DEFINE_ERROR(SchemaError, kSchema)
CANGUARD_DEFINE_ERROR(ParseError, kParse)
CANGUARD_DEFINE_ERROR(LabelError, kLabel)
CANGUARD_DEFINE_ERROR(ImputationError, kImputation)
CANGUARD_DEFINE_ERROR(SplitError, kSplit)
CANGUARD_DEFINE_ERROR(ConfigError, kConfig)
CANGUARD_DEFINE_ERROR(StatisticsError, kStatistics)
CANGUARD_DEFINE_ERROR(FitError, kFit)
CANGUARD_DEFINE_ERROR(NumericError, kNumeric)
CANGUARD_DEFINE_ERROR(ShapeError, kShape)
CANGUARD_DEFINE_ERROR(ArgumentError, kArgument)
CANGUARD_DEFINE_ERROR(FormatError, kFormat)

#undef CANGUARD_DEFINE_ERROR

}  // namespace canguard
