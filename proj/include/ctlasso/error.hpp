#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctlasso {

enum class ErrorKind {
    dimension_mismatch,
    constant_column,
    invalid_argument,
    empty_subset,
    singular_active_submatrix,
    lambda_below_path,
    not_converged,
    indefinite_matrix,
    zero_initial_estimate,
    too_few_samples,
    degenerate_truth,
    invalid_rho,
    not_psd,
    cholesky_failure,
    singular_ss,
    parse_error,
};

inline constexpr std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::constant_column: return "ConstantColumn";
        case ErrorKind::invalid_argument: return "InvalidArgument";
        case ErrorKind::empty_subset: return "EmptySubset";
        case ErrorKind::singular_active_submatrix: return "SingularActiveSubmatrix";
        case ErrorKind::lambda_below_path: return "LambdaBelowPath";
        case ErrorKind::not_converged: return "NotConverged";
        case ErrorKind::indefinite_matrix: return "IndefiniteMatrix";
        case ErrorKind::zero_initial_estimate: return "ZeroInitialEstimate";
        case ErrorKind::too_few_samples: return "TooFewSamples";
        case ErrorKind::degenerate_truth: return "DegenerateTruth";
        case ErrorKind::invalid_rho: return "InvalidRho";
        case ErrorKind::not_psd: return "NotPsd";
        case ErrorKind::cholesky_failure: return "CholeskyFailure";
        case ErrorKind::singular_ss: return "SingularSS";
        case ErrorKind::parse_error: return "ParseError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool cond, ErrorKind kind, const std::string& msg)
{
    if (!cond) throw Error(kind, msg);
}

} // namespace detail
} // namespace ctlasso
