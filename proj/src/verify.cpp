#include "dppo/verify.hpp"

#include <algorithm>
#include <cmath>

#include "dppo/dropout.hpp"
#include "dppo/finite_mdp.hpp"
#include "dppo/objective.hpp"
#include "dppo/rng.hpp"

namespace dppo {

namespace {

SupportDistribution random_support_distribution(Rng& rng, int max_support) {
  const int n = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_support)));
  Vector p(n);
  for (int i = 0; i < n; ++i) p[i] = -std::log(rng.uniform01_open());
  p /= p.sum();
  // Absorb normalization rounding into the largest entry so the sum is exact.
  Eigen::Index largest = 0;
  p.maxCoeff(&largest);
  p[largest] += 1.0 - p.sum();
  Vector o(n);
  for (int i = 0; i < n; ++i) o[i] = rng.uniform(-5.0, 5.0);
  return SupportDistribution{p, o};
}

Matrix random_logits(Rng& rng, int rows, int cols, double scale) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    p.row(i) = action_distribution(logits.row(i).transpose()).transpose();
  return p;
}

}  // namespace

SupportDistribution mdp_support_distribution(int states, int actions,
                                             std::uint64_t seed, int horizon,
                                             double discount) {
  const FiniteMdpSpec mdp = make_random_mdp(states, actions, seed, horizon);
  Rng rng(mix_seed(seed, 0x9DF0ULL));

  const Matrix old_logits = random_logits(rng, states, actions, 1.0);
  const Matrix perturbed_logits = old_logits + random_logits(rng, states, actions, 0.5);
  const Matrix pi_old = softmax_rows(old_logits);
  const Matrix pi_new = softmax_rows(perturbed_logits);

  const Vector visitation = exact_visitation(mdp, pi_old, horizon);
  const FiniteMdpTables tables = enumerate_tables(mdp, pi_old, discount);

  SupportDistribution dist;
  dist.probabilities.resize(states * actions);
  dist.surrogate_values.resize(states * actions);
  for (int s = 0; s < states; ++s) {
    for (int a = 0; a < actions; ++a) {
      const int k = s * actions + a;
      dist.probabilities[k] = visitation[s] * pi_old(s, a);
      dist.surrogate_values[k] =
          pi_new(s, a) / pi_old(s, a) * tables.advantage(s, a);
    }
  }
  // Exact enumeration keeps the sum within ~1e-14 of 1; pin it exactly so the
  // distribution invariant holds with zero slack.
  Eigen::Index largest = 0;
  dist.probabilities.maxCoeff(&largest);
  dist.probabilities[largest] += 1.0 - dist.probabilities.sum();
  return dist;
}

SweepResult sweep_variance_identities(int instances, std::uint64_t seed,
                                      double tolerance, int max_support) {
  SweepResult result;
  result.name = "variance-identities";
  result.instances = instances;
  Rng rng(mix_seed(seed, 0x51D0ULL));
  for (int i = 0; i < instances; ++i) {
    const SupportDistribution dist = random_support_distribution(rng, max_support);
    try {
      const VarianceReport report = verify_identities(dist, tolerance);
      result.worst = std::max(result.worst, report.max_rel_error);
    } catch (const VerificationError& e) {
      ++result.failures;
      if (result.detail.empty()) result.detail = e.what();
    }
  }
  return result;
}

SweepResult sweep_mdp_identities(int mdp_count, std::uint64_t seed, double tolerance,
                                 int max_states, int max_actions) {
  SweepResult result;
  result.name = "mdp-grounded-identities";
  result.instances = mdp_count;
  Rng rng(mix_seed(seed, 0x3D90ULL));
  for (int i = 0; i < mdp_count; ++i) {
    const int states = 2 + static_cast<int>(rng.next_below(
                               static_cast<std::uint64_t>(max_states - 1)));
    const int actions = 2 + static_cast<int>(rng.next_below(
                                static_cast<std::uint64_t>(max_actions - 1)));
    const int horizon = 4 + static_cast<int>(rng.next_below(13));
    const SupportDistribution dist =
        mdp_support_distribution(states, actions, rng.next_u64(), horizon, 0.99);
    try {
      const VarianceReport report = verify_identities(dist, tolerance);
      result.worst = std::max(result.worst, report.max_rel_error);
    } catch (const VerificationError& e) {
      ++result.failures;
      if (result.detail.empty()) result.detail = e.what();
    }
  }
  return result;
}

SweepResult sweep_phi_bruteforce(const std::vector<int>& sizes, std::uint64_t seed,
                                 double tolerance) {
  SweepResult result;
  result.name = "phi-bruteforce";
  Rng rng(mix_seed(seed, 0xF1F0ULL));
  for (const int n : sizes) {
    ++result.instances;
    Vector o(n);
    for (int i = 0; i < n; ++i) o[i] = rng.uniform(-5.0, 5.0);

    const Vector fast = phi_values(o);
    Vector brute(n);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) acc += o[i] * o[j];
      brute[i] = acc;
    }

    const double scale =
        std::max({fast.cwiseAbs().maxCoeff(), brute.cwiseAbs().maxCoeff(), 1e-30});
    const double error = (fast - brute).cwiseAbs().maxCoeff() / scale;
    result.worst = std::max(result.worst, error);
    if (error > tolerance) {
      ++result.failures;
      if (result.detail.empty())
        result.detail = "n=" + std::to_string(n) + " rel err " + std::to_string(error);
    }
  }
  return result;
}

SweepResult sweep_dropout_fraction(const std::vector<double>& ratios, int instances,
                                   int n, std::uint64_t seed) {
  SweepResult result;
  result.name = "dropout-fraction";
  Rng rng(mix_seed(seed, 0xD0D0ULL));

  std::vector<int> indices(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) indices[static_cast<std::size_t>(i)] = i;

  for (int instance = 0; instance < instances; ++instance) {
    Vector phi(n);
    for (int i = 0; i < n; ++i) phi[i] = rng.uniform(-1.0, 1.0);

    for (const double r : ratios) {
      ++result.instances;
      const DropoutReport report = apply_ratio_dropout(indices, phi, r);

      std::vector<char> kept(static_cast<std::size_t>(n), 0);
      for (const int i : report.kept_indices) kept[static_cast<std::size_t>(i)] = 1;

      bool ok = true;
      for (const bool positive : {true, false}) {
        int partition_size = 0;
        int dropped = 0;
        double min_kept = std::numeric_limits<double>::infinity();
        double max_dropped = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
          const bool in_partition = positive ? phi[i] >= 0.0 : phi[i] < 0.0;
          if (!in_partition) continue;
          ++partition_size;
          if (kept[static_cast<std::size_t>(i)]) {
            min_kept = std::min(min_kept, phi[i]);
          } else {
            ++dropped;
            max_dropped = std::max(max_dropped, phi[i]);
          }
        }
        if (partition_size == 0) continue;
        const double fraction = static_cast<double>(dropped) / partition_size;
        const double lo = r - 1.0 / partition_size;
        const double hi = r + 2.0 / partition_size;
        if (fraction < lo - 1e-12 || fraction > hi + 1e-12) ok = false;
        result.worst = std::max(result.worst, std::abs(fraction - r));
        if (dropped > 0 && min_kept <= max_dropped) ok = false;  // order consistency
      }
      if (!ok) {
        ++result.failures;
        if (result.detail.empty())
          result.detail = "instance " + std::to_string(instance) + " r=" +
                          std::to_string(r);
      }
    }
  }
  return result;
}

namespace {

// Random combined-loss instance: small architecture, random parameters, old
// log-probs from a perturbed parameter vector.
struct GradientInstance {
  ParameterVector params;
  MinibatchData minibatch;
  LossSettings settings;
};

// Smallest distance of the instance to any loss kink: relu pre-activations
// to 0, importance ratios to the clip interval edges. Central differences
// need the loss twice differentiable within the step neighborhood, so
// instances closer than a safety margin are invalid FD test cases.
double kink_distance(const ParameterVector& params, const MinibatchData& mb,
                     const LossSettings& settings) {
  const auto& arch = params.architecture();
  double distance = std::numeric_limits<double>::infinity();

  const int trunk_layers = static_cast<int>(arch.trunk_widths.size());
  for (const int base : {0, 2 * trunk_layers + 2}) {  // policy and value paths
    Matrix h = mb.observations;
    for (int layer = 0; layer < trunk_layers; ++layer) {
      const auto w = params.block(base + 2 * layer);
      const auto b = params.block(base + 2 * layer + 1);
      Matrix z = h * w.transpose();
      z.rowwise() += b.col(0).transpose();
      if (arch.activation == Activation::kRelu) {
        distance = std::min(distance, z.cwiseAbs().minCoeff());
        h = z.array().max(0.0);
      } else {
        h = z.array().tanh();
      }
    }
  }

  const ForwardResult fr = forward(params, mb.observations);
  for (Eigen::Index i = 0; i < mb.actions.size(); ++i) {
    const double lp = log_prob(fr.logits.row(i).transpose(), mb.actions[i]);
    const double ratio = std::exp(lp - mb.old_log_probs[i]);
    distance = std::min(distance, std::abs(ratio - (1.0 - settings.clip_epsilon)));
    distance = std::min(distance, std::abs(ratio - (1.0 + settings.clip_epsilon)));
  }
  return distance;
}

GradientInstance make_gradient_instance_once(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6A0DULL));
  NetworkArchitecture arch;
  arch.input_dim = 2 + static_cast<int>(rng.next_below(7));
  const int layers = 1 + static_cast<int>(rng.next_below(2));
  for (int l = 0; l < layers; ++l)
    arch.trunk_widths.push_back(2 + static_cast<int>(rng.next_below(15)));
  arch.action_count = 2 + static_cast<int>(rng.next_below(3));
  arch.activation = rng.next_below(2) == 0 ? Activation::kTanh : Activation::kRelu;

  GradientInstance instance{
      ParameterVector::random_init(arch, rng.next_u64()), {}, {}};
  // Jitter every parameter (biases start at zero) so no relu pre-activation
  // sits exactly on its kink, where one-sided derivatives differ and central
  // differences cannot agree with any subgradient choice.
  for (Eigen::Index i = 0; i < instance.params.values().size(); ++i)
    instance.params.values()[i] += 0.1 * rng.normal();

  const int m = 1 + static_cast<int>(rng.next_below(32));
  instance.minibatch.observations = Matrix(m, arch.input_dim);
  for (int j = 0; j < arch.input_dim; ++j)
    for (int i = 0; i < m; ++i) instance.minibatch.observations(i, j) = rng.normal();
  instance.minibatch.actions.resize(m);
  for (int i = 0; i < m; ++i)
    instance.minibatch.actions[i] =
        static_cast<int>(rng.next_below(static_cast<std::uint64_t>(arch.action_count)));

  // Old log-probs from slightly perturbed parameters, so ratios sit near but
  // not at 1.
  ParameterVector old_params = instance.params;
  for (Eigen::Index i = 0; i < old_params.values().size(); ++i)
    old_params.values()[i] += 0.05 * rng.normal();
  const ForwardResult old_fr = forward(old_params, instance.minibatch.observations);
  instance.minibatch.old_log_probs.resize(m);
  for (int i = 0; i < m; ++i)
    instance.minibatch.old_log_probs[i] =
        log_prob(old_fr.logits.row(i).transpose(), instance.minibatch.actions[i]);

  instance.minibatch.advantages.resize(m);
  instance.minibatch.value_targets.resize(m);
  for (int i = 0; i < m; ++i) {
    instance.minibatch.advantages[i] = rng.uniform(-2.0, 2.0);
    instance.minibatch.value_targets[i] = rng.uniform(-2.0, 2.0);
  }

  instance.settings.clip_epsilon = rng.next_below(2) == 0 ? 0.1 : 0.2;
  instance.settings.c1 = rng.next_below(2) == 0 ? 1.0 : 0.5;
  instance.settings.c2 = rng.next_below(2) == 0 ? 0.01 : 0.1;
  instance.settings.normalize_advantages = m >= 2 && rng.next_below(4) == 0;
  return instance;
}

GradientInstance make_gradient_instance(std::uint64_t seed) {
  constexpr double kKinkMargin = 2e-4;
  Rng retry(mix_seed(seed, 0x4E7BULL));
  for (int attempt = 0; attempt < 64; ++attempt) {
    GradientInstance instance = make_gradient_instance_once(retry.next_u64());
    if (kink_distance(instance.params, instance.minibatch, instance.settings) >
        kKinkMargin)
      return instance;
  }
  throw Error("gradient check: could not draw a kink-free instance");
}

}  // namespace

double gradient_check_instance(std::uint64_t seed, double step) {
  GradientInstance instance = make_gradient_instance(seed);

  const auto [breakdown, analytic] =
      combined_loss_gradient(instance.params, instance.minibatch, instance.settings);
  (void)breakdown;

  const Eigen::Index count = instance.params.values().size();
  Vector numeric(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const double saved = instance.params.values()[i];
    instance.params.values()[i] = saved + step;
    const double up =
        combined_loss(instance.params, instance.minibatch, instance.settings).combined;
    instance.params.values()[i] = saved - step;
    const double down =
        combined_loss(instance.params, instance.minibatch, instance.settings).combined;
    instance.params.values()[i] = saved;
    numeric[i] = (up - down) / (2.0 * step);
  }

  // Per-entry relative error with a floor tied to the gradient scale:
  // central differences carry absolute noise of order |loss| * eps / step, so
  // entries far below the dominant gradient magnitude cannot be resolved
  // relative to themselves.
  const double floor = 1e-4 * std::max(1.0, numeric.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

SweepResult sweep_gradient_check(int instances, std::uint64_t seed, double tolerance,
                                 double step) {
  SweepResult result;
  result.name = "gradient-check";
  result.instances = instances;
  Rng rng(mix_seed(seed, 0x64ADULL));
  for (int i = 0; i < instances; ++i) {
    const double error = gradient_check_instance(rng.next_u64(), step);
    result.worst = std::max(result.worst, error);
    if (error > tolerance) {
      ++result.failures;
      if (result.detail.empty())
        result.detail = "instance " + std::to_string(i) + " rel err " +
                        std::to_string(error);
    }
  }
  return result;
}

}  // namespace dppo
