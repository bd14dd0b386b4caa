#ifndef DPPO_ADAM_HPP_
#define DPPO_ADAM_HPP_

#include <cstdint>
#include <utility>

#include "dppo/types.hpp"

namespace dppo {

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zero(Eigen::Index parameter_count);
};

// One bias-corrected Adam update. Pure: returns the new parameters and state.
// Throws NumericError on non-finite gradient entries.
std::pair<Vector, AdamState> adam_step(const ConstVectorRef& params,
                                       const ConstVectorRef& grads,
                                       const AdamState& state, double lr);

}  // namespace dppo

#endif  // DPPO_ADAM_HPP_
