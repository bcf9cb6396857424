#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bnn {

/// Coarse failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorCategory { config, numerical, calibration, io, checkpoint };

std::string_view to_string(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Bad shapes, out-of-range parameters, malformed configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

/// A factorization or solve that failed even after the jitter ladder was exhausted.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double condition_estimate = 0.0)
        : Error(ErrorCategory::numerical, what), condition_estimate_(condition_estimate) {}

    /// Ratio of extreme eigenvalue magnitudes of the offending matrix (inf if singular).
    [[nodiscard]] double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

/// Probit calibration hit its sweep limit; carries the best parameters seen.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double best_lambda, double best_rho, double best_loss)
        : Error(ErrorCategory::calibration, what),
          best_lambda_(best_lambda), best_rho_(best_rho), best_loss_(best_loss) {}

    [[nodiscard]] double best_lambda() const noexcept { return best_lambda_; }
    [[nodiscard]] double best_rho() const noexcept { return best_rho_; }
    [[nodiscard]] double best_loss() const noexcept { return best_loss_; }

private:
    double best_lambda_;
    double best_rho_;
    double best_loss_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// Corrupt checkpoint or schema-version mismatch.
class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& what) : Error(ErrorCategory::checkpoint, what) {}
};

}  // namespace bnn
