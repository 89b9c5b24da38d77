#include "canguard/error.hpp"

namespace canguard {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kSchema: return "schema";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kLabel: return "label";
    case ErrorCategory::kImputation: return "imputation";
    case ErrorCategory::kSplit: return "split";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kStatistics: return "statistics";
    case ErrorCategory::kFit: return "fit";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kShape: return "shape";
    case ErrorCategory::kArgument: return "argument";
    case ErrorCategory::kFormat: return "format";
  }
  return "unknown";
}

}  // namespace canguard
