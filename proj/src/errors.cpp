#include "bnn/errors.hpp"

namespace bnn {

std::string_view to_string(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::numerical: return "numerical";
        case ErrorCategory::calibration: return "calibration";
        case ErrorCategory::io: return "io";
        case ErrorCategory::checkpoint: return "checkpoint";
    }
    return "unknown";
}

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::numerical: return 3;
        case ErrorCategory::calibration: return 4;
        case ErrorCategory::io: return 5;
        case ErrorCategory::checkpoint: return 6;
    }
    return 1;
}

}  // namespace bnn
