#include "dppo/objective.hpp"

#include <cmath>

#include "dppo/autodiff.hpp"

namespace dppo {

namespace {

Vector maybe_normalize(const Vector& advantages, bool enabled) {
  if (!enabled || advantages.size() < 2) return advantages;
  const double mean = advantages.mean();
  const double var =
      (advantages.array() - mean).square().sum() /
      static_cast<double>(advantages.size() - 1);
  return (advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

void check_finite(double value, const char* component) {
  if (!std::isfinite(value))
    throw NumericError(std::string("combined_loss: non-finite ") + component);
}

}  // namespace

Vector ratios(const ParameterVector& params, const TrajectoryBatch& batch,
              std::span<const int> indices) {
  const int m = static_cast<int>(indices.size());
  Matrix observations(m, batch.observations.cols());
  for (int k = 0; k < m; ++k) {
    const int i = indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= batch.size()) throw InputError("ratios: index out of range");
    observations.row(k) = batch.observations.row(i);
  }

  const ForwardResult fr = forward(params, observations);
  Vector out(m);
  for (int k = 0; k < m; ++k) {
    const int i = indices[static_cast<std::size_t>(k)];
    const double lp_new =
        log_prob(fr.logits.row(k).transpose(), batch.actions[i]);
    out[k] = std::exp(lp_new - batch.old_log_probs[i]);
    if (!std::isfinite(out[k]))
      throw NumericError("ratios: non-finite ratio at batch index " +
                         std::to_string(i));
  }
  return out;
}

Vector surrogate_values(const ConstVectorRef& ratios,
                        const ConstVectorRef& advantages) {
  if (ratios.size() != advantages.size())
    throw InputError("surrogate_values: length mismatch");
  return ratios.array() * advantages.array();
}

Vector clip_objective(const ConstVectorRef& ratios,
                      const ConstVectorRef& advantages, double epsilon) {
  if (ratios.size() != advantages.size())
    throw InputError("clip_objective: length mismatch");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw InputError("clip_objective: epsilon must lie in (0,1)");
  const auto clipped =
      ratios.array().max(1.0 - epsilon).min(1.0 + epsilon) * advantages.array();
  return (ratios.array() * advantages.array()).min(clipped);
}

double compensated_kl(const ConstVectorRef& ratios) {
  if (ratios.size() == 0) throw InputError("compensated_kl: empty input");
  return mean_ordered((ratios.array() - 1.0) - ratios.array().log());
}

double penalty_objective(const ConstVectorRef& ratios,
                         const ConstVectorRef& advantages, double kl_estimate,
                         double beta) {
  if (beta < 0.0) throw InputError("penalty_objective: beta must be >= 0");
  return mean_ordered(surrogate_values(ratios, advantages)) - beta * kl_estimate;
}

LossBreakdown combined_loss(const ParameterVector& params, const MinibatchData& mb,
                            const LossSettings& settings) {
  const int m = static_cast<int>(mb.actions.size());
  if (m == 0) throw InputError("combined_loss: empty minibatch");

  const ForwardResult fr = forward(params, mb.observations);
  Vector ratio(m);
  Vector ent(m);
  for (int k = 0; k < m; ++k) {
    const Vector logits = fr.logits.row(k).transpose();
    const double lp_new = log_prob(logits, mb.actions[k]);
    ratio[k] = std::exp(lp_new - mb.old_log_probs[k]);
    if (!std::isfinite(ratio[k]))
      throw NumericError("combined_loss: non-finite ratio at minibatch index " +
                         std::to_string(k));
    ent[k] = entropy(logits);
  }

  const Vector adv = maybe_normalize(mb.advantages, settings.normalize_advantages);
  const Vector objective = clip_objective(ratio, adv, settings.clip_epsilon);

  LossBreakdown bd;
  bd.c1 = settings.c1;
  bd.c2 = settings.c2;
  bd.policy_loss = -mean_ordered(objective);
  bd.value_loss =
      mean_ordered((fr.values.array() - mb.value_targets.array()).square());
  bd.entropy = mean_ordered(ent);
  check_finite(bd.policy_loss, "policy loss");
  check_finite(bd.value_loss, "value loss");
  check_finite(bd.entropy, "entropy");
  bd.combined = combine_loss(bd.policy_loss, bd.value_loss, bd.entropy, bd.c1, bd.c2);
  return bd;
}

std::pair<LossBreakdown, Vector> combined_loss_gradient(
    const ParameterVector& params, const MinibatchData& mb,
    const LossSettings& settings) {
  const int m = static_cast<int>(mb.actions.size());
  if (m == 0) throw InputError("combined_loss_gradient: empty minibatch");

  ad::Tape tape;
  const std::vector<ad::Var> leaves = ad::register_parameters(tape, params);
  const ad::GraphForward net =
      ad::graph_forward(tape, params.architecture(), leaves, mb.observations);

  const ad::Var lp_new = tape.log_prob_rows(net.logits, mb.actions);
  const ad::Var ratio = tape.exp_of(tape.sub_constant(lp_new, mb.old_log_probs));
  {
    const Matrix& rv = tape.value(ratio);
    for (int k = 0; k < m; ++k)
      if (!std::isfinite(rv(k, 0)))
        throw NumericError(
            "combined_loss_gradient: non-finite ratio at minibatch index " +
            std::to_string(k));
  }

  const Matrix adv = maybe_normalize(mb.advantages, settings.normalize_advantages);
  const ad::Var unclipped = tape.mul_constant(ratio, adv);
  const ad::Var clipped = tape.mul_constant(
      tape.clip_of(ratio, 1.0 - settings.clip_epsilon, 1.0 + settings.clip_epsilon),
      adv);
  const ad::Var policy_loss =
      tape.scale(tape.mean_all(tape.min_of(unclipped, clipped)), -1.0);

  const ad::Var value_error = tape.sub_constant(net.values, mb.value_targets);
  const ad::Var value_loss = tape.mean_all(tape.square_of(value_error));

  const ad::Var entropy_bonus = tape.mean_all(tape.entropy_rows(net.logits));

  const ad::Var total = tape.sub(tape.add(policy_loss, tape.scale(value_loss, settings.c1)),
                                 tape.scale(entropy_bonus, settings.c2));

  LossBreakdown bd;
  bd.c1 = settings.c1;
  bd.c2 = settings.c2;
  bd.policy_loss = tape.scalar(policy_loss);
  bd.value_loss = tape.scalar(value_loss);
  bd.entropy = tape.scalar(entropy_bonus);
  check_finite(bd.policy_loss, "policy loss");
  check_finite(bd.value_loss, "value loss");
  check_finite(bd.entropy, "entropy");
  bd.combined = combine_loss(bd.policy_loss, bd.value_loss, bd.entropy, bd.c1, bd.c2);

  tape.backward(total);
  Vector flat(params.values().size());
  const auto& table = params.block_table();
  for (int i = 0; i < params.block_count(); ++i) {
    const Matrix g = tape.gradient(leaves[static_cast<std::size_t>(i)]);
    const auto& b = table[static_cast<std::size_t>(i)];
    Eigen::Map<Matrix>(flat.data() + b.offset, b.rows, b.cols) = g;
  }
  return {bd, std::move(flat)};
}

}  // namespace dppo
