#ifndef DPPO_OBJECTIVE_HPP_
#define DPPO_OBJECTIVE_HPP_

#include <span>
#include <utility>

#include "dppo/network.hpp"
#include "dppo/rollout.hpp"
#include "dppo/types.hpp"

namespace dppo {

// Importance ratios rho_i = exp(log pi_new(a_i|s_i) - stored old log-prob)
// for the given batch rows. Throws NumericError naming the first sample whose
// ratio comes out non-finite.
Vector ratios(const ParameterVector& params, const TrajectoryBatch& batch,
              std::span<const int> indices);

// O_i = rho_i * A_i.
Vector surrogate_values(const ConstVectorRef& ratios,
                        const ConstVectorRef& advantages);

// Per-sample min(rho * A, clip(rho, 1-eps, 1+eps) * A).
Vector clip_objective(const ConstVectorRef& ratios,
                      const ConstVectorRef& advantages, double epsilon);

// Non-negative compensated KL estimator: mean((rho - 1) - log rho).
double compensated_kl(const ConstVectorRef& ratios);

// mean(rho * A) - beta * kl_estimate.
double penalty_objective(const ConstVectorRef& ratios,
                         const ConstVectorRef& advantages, double kl_estimate,
                         double beta);

struct LossBreakdown {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double combined = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

inline double combine_loss(double policy_loss, double value_loss, double entropy,
                           double c1, double c2) {
  return policy_loss + c1 * value_loss - c2 * entropy;
}

struct LossSettings {
  double clip_epsilon = 0.1;
  double c1 = 1.0;
  double c2 = 0.01;
  bool normalize_advantages = false;
};

// l_p = -mean(clip objective), l_v = mean squared value error against the GAE
// targets, l_e = mean policy entropy; combined = l_p + c1*l_v - c2*l_e.
LossBreakdown combined_loss(const ParameterVector& params, const MinibatchData& mb,
                            const LossSettings& settings);

// Same loss with its exact reverse-mode gradient in parameter order.
std::pair<LossBreakdown, Vector> combined_loss_gradient(
    const ParameterVector& params, const MinibatchData& mb,
    const LossSettings& settings);

}  // namespace dppo

#endif  // DPPO_OBJECTIVE_HPP_
