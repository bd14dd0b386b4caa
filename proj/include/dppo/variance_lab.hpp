#ifndef DPPO_VARIANCE_LAB_HPP_
#define DPPO_VARIANCE_LAB_HPP_

#include "dppo/types.hpp"

namespace dppo {

// Explicit distribution over (state, action) support pairs, with the
// surrogate value attached to each pair. Everything the surrogate-variance
// identities need, in exactly enumerable form.
struct SupportDistribution {
  Vector probabilities;    // >= 0, sums to 1 within 1e-12
  Vector surrogate_values;

  void validate() const;
  Eigen::Index size() const { return probabilities.size(); }
};

// Population variance mean(O^2) - mean(O)^2 of an empirical sample.
double empirical_variance(const ConstVectorRef& surrogates);

// E[O^2] - E[O]^2 evaluated directly on the distribution.
double direct_variance(const SupportDistribution& dist);

// The variance rewritten per support pair:
//   sum_i P_i * [ (1 - P_i) * O_i^2  -  sum_{j != i} P_j * O_i * O_j ]
// with the self-excluded squares (1 - P_i) * O_i^2 optionally returned. The
// inner sum uses sum_{j != i} P_j O_j = (sum_j P_j O_j) - P_i O_i, so the
// whole computation is O(n).
double decomposed_variance(const SupportDistribution& dist, Vector* self_excluded_squares = nullptr);

// Upper bound obtained by dropping the (1 - P_i) factor:
//   sum_i P_i * [ O_i^2 - sum_{j != i} P_j * O_i * O_j ]
// Its slack over the variance is exactly sum_i P_i^2 O_i^2.
double variance_upper_bound(const SupportDistribution& dist);

struct VarianceReport {
  double direct_variance = 0.0;
  double decomposed_variance = 0.0;
  double variance_upper_bound = 0.0;
  Vector self_excluded_squares;
  double max_rel_error = 0.0;
};

// Checks the identity (rewritten form == direct variance) and the bound's
// closed-form slack at the given relative tolerance. Throws VerificationError
// with the full distribution embedded if either check fails.
VarianceReport verify_identities(const SupportDistribution& dist, double tolerance);

}  // namespace dppo

#endif  // DPPO_VARIANCE_LAB_HPP_
