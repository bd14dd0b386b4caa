#ifndef DPPO_TYPES_HPP_
#define DPPO_TYPES_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dppo {

// All numerics are 64-bit; reports and checkpoints depend on it.
using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;

using ConstVectorRef = Eigen::Ref<const Vector>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

// Error taxonomy. The CLI maps these onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data or arguments (bad dimensions, invalid distributions, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// API misuse of stateful objects (e.g. stepping a finished environment).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Corrupt or mismatched serialized data.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration files, keys or values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A checked mathematical identity or oracle failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

// Strict left-to-right summation. Used wherever logged numbers must be
// bit-reproducible; Eigen's sum() reassociates across SIMD lanes.
inline double sum_ordered(const ConstVectorRef& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += v[i];
  return acc;
}

inline double mean_ordered(const ConstVectorRef& v) {
  return v.size() == 0 ? 0.0 : sum_ordered(v) / static_cast<double>(v.size());
}

// |a - b| relative to the larger magnitude, with an absolute floor so that
// two near-zero values compare as equal.
inline double relative_error(double a, double b, double floor = 1e-30) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace dppo

#endif  // DPPO_TYPES_HPP_
