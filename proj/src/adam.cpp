#include "dppo/adam.hpp"

#include <cmath>

namespace dppo {

AdamState AdamState::zero(Eigen::Index parameter_count) {
  AdamState state;
  state.first_moment = Vector::Zero(parameter_count);
  state.second_moment = Vector::Zero(parameter_count);
  return state;
}

std::pair<Vector, AdamState> adam_step(const ConstVectorRef& params,
                                       const ConstVectorRef& grads,
                                       const AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw InputError("adam_step: vector length mismatch");
  if (lr < 0.0) throw InputError("adam_step: lr must be >= 0");
  if (!grads.allFinite()) {
    for (Eigen::Index i = 0; i < grads.size(); ++i)
      if (!std::isfinite(grads[i]))
        throw NumericError("adam_step: non-finite gradient at index " +
                           std::to_string(i));
  }

  AdamState next = state;
  next.step_count = state.step_count + 1;
  next.first_moment =
      state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  next.second_moment = state.beta2 * state.second_moment.array() +
                       (1.0 - state.beta2) * grads.array().square();

  const double t = static_cast<double>(next.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  const Vector m_hat = next.first_moment / bias1;
  const Vector v_hat = next.second_moment / bias2;

  Vector updated =
      params.array() - lr * m_hat.array() / (v_hat.array().sqrt() + state.epsilon);
  return {std::move(updated), std::move(next)};
}

}  // namespace dppo
