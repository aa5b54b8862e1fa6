#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rwsl {

// Dense row-major storage; one row per node.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Node attributes, raw or filtered. Role (X, filtered X, reconstruction, layer
// activations) is carried by the variable, not the type.
using FeatureMatrix = Matrix;

// One integer label per node in [0, K).
using LabelVector = std::vector<int>;

using NodeId = std::uint32_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Raised when a caller breaks an operation's precondition (wrong shape,
/// already-augmented graph, stale forward cache, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class UnsupportedConfig : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

/// A numerical claim check did not hold within its search range.
class VerificationFailure : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

int count_classes(const LabelVector& labels);

}  // namespace rwsl
