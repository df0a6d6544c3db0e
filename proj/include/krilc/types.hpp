#pragma once

#include <Eigen/Core>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace krilc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Base for all library errors so callers can catch krilc failures in one net.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A parameter left its admissible domain (kernel box, config bounds, ...).
struct DomainError : Error {
    using Error::Error;
};

// A linear system that the contract requires to be solvable was singular.
struct SingularError : Error {
    using Error::Error;
};

// Out-of-range iteration/time index.
struct IndexError : Error {
    using Error::Error;
};

// Non-finite values appeared while propagating a recursion.
struct InstabilityError : Error {
    InstabilityError(const std::string& what, Index time) : Error(what), time(time) {}
    Index time = 0;
};

// A required input (e.g. a model estimate) was not produced before use.
struct SequencingError : Error {
    using Error::Error;
};

// Random system generation exhausted its resample budget.
struct GenerationError : Error {
    using Error::Error;
};

// Every start of a hyper-parameter search failed to produce a finite value.
struct OptimizationError : Error {
    using Error::Error;
};

// A normalized fit is undefined (constant reference / constant coefficients).
struct UndefinedFitError : Error {
    using Error::Error;
};

// 17-significant-digit decimal rendering; round-trips IEEE doubles exactly.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace krilc
