#include "echoea/error.hpp"

namespace echoea {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kArgument: return "argument";
    case ErrorCategory::kValidation: return "validation";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kIntegrity: return "integrity";
    case ErrorCategory::kNumeric: return "numeric";
  }
  return "unknown";
}

}  // namespace echoea
