#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dppo/adam.hpp"
#include "dppo/autodiff.hpp"
#include "dppo/checkpoint.hpp"
#include "dppo/network.hpp"
#include "dppo/rng.hpp"
#include "dppo/verify.hpp"

using namespace dppo;

namespace {

NetworkArchitecture small_arch() {
  NetworkArchitecture arch;
  arch.input_dim = 3;
  arch.trunk_widths = {5, 4};
  arch.action_count = 2;
  arch.activation = Activation::kTanh;
  return arch;
}

}  // namespace

TEST_CASE("parameter layout: two trunks plus their heads") {
  const NetworkArchitecture arch = small_arch();
  // policy path: 5x3+5 + 4x5+4 + 2x4+2 = 54; value path: 44 + 1x4+1 = 49.
  CHECK(arch.parameter_count() == 54 + 49);
  CHECK(arch.blocks().size() == 12);
  CHECK_THROWS_AS(ParameterVector(arch, Vector::Zero(10)), InputError);
}

TEST_CASE("zero parameters give zero logits and values") {
  const ParameterVector params{small_arch()};
  const Matrix obs = Matrix::Random(6, 3);
  const ForwardResult fr = forward(params, obs);
  CHECK(fr.logits.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fr.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("batched rows of one observation are identical") {
  const ParameterVector params = ParameterVector::random_init(small_arch(), 5);
  Matrix obs(4, 3);
  for (int i = 0; i < 4; ++i) obs.row(i) << 0.3, -1.2, 0.9;
  const ForwardResult fr = forward(params, obs);
  for (int i = 1; i < 4; ++i) {
    CHECK(fr.logits.row(i) == fr.logits.row(0));
    CHECK(fr.values[i] == fr.values[0]);
  }
  // purity
  const ForwardResult again = forward(params, obs);
  CHECK(again.logits == fr.logits);
  CHECK(again.values == fr.values);
}

TEST_CASE("heads are fed by their own trunks") {
  const NetworkArchitecture arch = small_arch();
  ParameterVector params = ParameterVector::random_init(arch, 5);
  const Matrix obs = Matrix::Random(2, 3);
  const ForwardResult base = forward(params, obs);

  // First policy-trunk weight: logits move, values do not.
  ParameterVector poked = params;
  poked.values()[0] += 0.25;
  const ForwardResult pol = forward(poked, obs);
  CHECK((pol.logits - base.logits).cwiseAbs().maxCoeff() > 0.0);
  CHECK((pol.values - base.values).cwiseAbs().maxCoeff() == 0.0);

  // First value-trunk weight: values move, logits do not.
  const auto& table = params.block_table();
  const auto value_trunk_offset = table[table.size() / 2].offset;
  poked = params;
  poked.values()[value_trunk_offset] += 0.25;
  const ForwardResult val = forward(poked, obs);
  CHECK((val.logits - base.logits).cwiseAbs().maxCoeff() == 0.0);
  CHECK((val.values - base.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward rejects dimension mismatches") {
  const ParameterVector params{small_arch()};
  CHECK_THROWS_AS(forward(params, Matrix::Zero(2, 4)), InputError);
}

TEST_CASE("softmax examples") {
  Vector logits(4);
  logits << 0, 0, 0, 0;
  const Vector uniform = action_distribution(logits);
  for (int i = 0; i < 4; ++i)
    CHECK(uniform[i] == doctest::Approx(0.25).epsilon(1e-12));

  Vector two(2);
  two << 3.7, 3.7 + std::log(2.0);
  const Vector p = action_distribution(two);
  CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Vector extreme(2);
  extreme << 1000.0, 0.0;
  const Vector q = action_distribution(extreme);
  CHECK(std::isfinite(q[0]));
  CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q[1] >= 0.0);
}

TEST_CASE("softmax sums to one with positive entries on sane logits") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(6));
    Vector logits(n);
    for (int i = 0; i < n; ++i) logits[i] = rng.uniform(-50.0, 50.0);
    const Vector p = action_distribution(logits);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() > 0.0);
  }
}

TEST_CASE("log_prob examples and normalization") {
  Vector two = Vector::Zero(2);
  CHECK(log_prob(two, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  Vector four = Vector::Zero(4);
  CHECK(log_prob(four, 3) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK_THROWS_AS(log_prob(two, 2), InputError);
  CHECK_THROWS_AS(log_prob(two, -1), InputError);

  Rng rng(3);
  Vector logits(5);
  for (int i = 0; i < 5; ++i) logits[i] = rng.uniform(-4.0, 4.0);
  double total = 0.0;
  for (int a = 0; a < 5; ++a) total += std::exp(log_prob(logits, a));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("log-softmax is shift invariant") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Vector logits(3);
    for (int i = 0; i < 3; ++i) logits[i] = rng.uniform(-5.0, 5.0);
    const double shift = rng.uniform(-100.0, 100.0);
    const Vector a = log_softmax(logits);
    const Vector b = log_softmax(logits.array() + shift);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("entropy examples and bound") {
  CHECK(entropy(Vector::Zero(4)) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Vector sharp(2);
  sharp << 20.0, 0.0;
  const double h = entropy(sharp);
  CHECK(h > 0.0);
  CHECK(h < 1e-7);

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(5));
    Vector logits(n);
    for (int i = 0; i < n; ++i) logits[i] = rng.uniform(-10.0, 10.0);
    CHECK(entropy(logits) <= std::log(static_cast<double>(n)) + 1e-12);
    CHECK(entropy(logits) >= 0.0);
  }
}

TEST_CASE("gradient of sum of squared parameters is 2p") {
  const ParameterVector params = ParameterVector::random_init(small_arch(), 17);
  const Vector grad =
      ad::gradient(params, [](ad::Tape& tape, const std::vector<ad::Var>& leaves) {
        ad::Var total = tape.sum_all(tape.square_of(leaves[0]));
        for (std::size_t i = 1; i < leaves.size(); ++i)
          total = tape.add(total, tape.sum_all(tape.square_of(leaves[i])));
        return total;
      });
  CHECK((grad - 2.0 * params.values()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(40);
  for (int i = 0; i < 10; ++i)
    CHECK(gradient_check_instance(rng.next_u64(), 1e-5) < 1e-4);
}

TEST_CASE("a fully clipped policy objective has zero gradient") {
  // One sample, positive advantage, ratio far above 1+eps: min() takes the
  // clipped branch, which is constant, so nothing reaches the parameters.
  const NetworkArchitecture arch = small_arch();
  const ParameterVector params = ParameterVector::random_init(arch, 23);
  const Matrix obs = Matrix::Constant(1, 3, 0.4);
  IndexVector actions(1);
  actions << 1;
  const ForwardResult fr = forward(params, obs);
  const double lp_now = log_prob(fr.logits.row(0).transpose(), 1);
  Vector old_lp(1);
  old_lp << lp_now - std::log(2.0);  // ratio = 2, far outside [0.9, 1.1]

  const Vector grad =
      ad::gradient(params, [&](ad::Tape& tape, const std::vector<ad::Var>& leaves) {
        const auto net = ad::graph_forward(tape, arch, leaves, obs);
        const ad::Var lp = tape.log_prob_rows(net.logits, actions);
        const ad::Var ratio = tape.exp_of(tape.sub_constant(lp, old_lp));
        const ad::Var clipped = tape.clip_of(ratio, 0.9, 1.1);
        const Matrix advantage = Matrix::Constant(1, 1, 2.0);
        const ad::Var objective = tape.min_of(tape.mul_constant(ratio, advantage),
                                              tape.mul_constant(clipped, advantage));
        return tape.scale(tape.mean_all(objective), -1.0);
      });
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam first step moves by about -lr*sign(g)") {
  AdamState state = AdamState::zero(3);
  Vector params(3);
  params << 1.0, -2.0, 0.5;
  Vector grads(3);
  grads << 0.3, -4.0, 1e-3;
  const double lr = 0.01;
  const auto [updated, next] = adam_step(params, grads, state, lr);
  for (int i = 0; i < 3; ++i) {
    const double delta = updated[i] - params[i];
    const double expected = -lr * (grads[i] > 0 ? 1.0 : -1.0);
    CHECK(delta == doctest::Approx(expected).epsilon(1e-4));
  }
  CHECK(next.step_count == 1);
}

TEST_CASE("adam lr=0 leaves parameters but updates moments") {
  AdamState state = AdamState::zero(2);
  Vector params(2);
  params << 1.0, 2.0;
  Vector grads(2);
  grads << 3.0, -1.0;
  const auto [updated, next] = adam_step(params, grads, state, 0.0);
  CHECK(updated == params);
  CHECK(next.first_moment.cwiseAbs().minCoeff() > 0.0);
  CHECK(next.step_count == 1);
}

TEST_CASE("adam zero gradient from zero state is a no-op") {
  AdamState state = AdamState::zero(2);
  Vector params(2);
  params << -0.5, 4.0;
  const auto [updated, next] = adam_step(params, Vector::Zero(2), state, 0.1);
  CHECK(updated == params);
  CHECK(next.step_count == 1);
}

TEST_CASE("adam is bit-deterministic and rejects non-finite gradients") {
  AdamState state = AdamState::zero(4);
  state.step_count = 3;
  state.first_moment = Vector::Constant(4, 0.25);
  state.second_moment = Vector::Constant(4, 0.1);
  Vector params = Vector::LinSpaced(4, -1.0, 1.0);
  Vector grads = Vector::LinSpaced(4, 0.5, 2.0);
  const auto [a, sa] = adam_step(params, grads, state, 1e-3);
  const auto [b, sb] = adam_step(params, grads, state, 1e-3);
  CHECK(a == b);
  CHECK(sa.first_moment == sb.first_moment);
  CHECK(sa.second_moment == sb.second_moment);

  Vector bad = grads;
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(params, bad, state, 1e-3), NumericError);
}

TEST_CASE("checkpoint round-trip is bit-identical") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "dppo_test_ckpt.bin";
  const NetworkArchitecture arch = small_arch();
  const ParameterVector params = ParameterVector::random_init(arch, 3);
  AdamState adam = AdamState::zero(params.values().size());
  adam.step_count = 17;
  adam.first_moment.setConstant(0.25);
  adam.second_moment.setConstant(1e-4);

  save_checkpoint(params, &adam, path);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.params.architecture() == arch);
  CHECK(loaded.params.values() == params.values());
  REQUIRE(loaded.adam.has_value());
  CHECK(loaded.adam->step_count == 17);
  CHECK(loaded.adam->first_moment == adam.first_moment);
  CHECK(loaded.adam->second_moment == adam.second_moment);

  save_checkpoint(params, nullptr, path);
  CHECK(!load_checkpoint(path).adam.has_value());
  fs::remove(path);
}

TEST_CASE("checkpoint corruption is detected") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "dppo_test_ckpt2.bin";
  const ParameterVector params = ParameterVector::random_init(small_arch(), 3);
  save_checkpoint(params, nullptr, path);

  // Corrupt magic.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  // Truncation.
  save_checkpoint(params, nullptr, path);
  fs::resize_file(path, fs::file_size(path) - 9);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  // Architecture mismatch names both shapes.
  save_checkpoint(params, nullptr, path);
  NetworkArchitecture other = small_arch();
  other.trunk_widths = {8};
  try {
    load_checkpoint(path, other);
    CHECK(false);
  } catch (const FormatError& e) {
    const std::string message = e.what();
    CHECK(message.find("3->[5,4]->2") != std::string::npos);
    CHECK(message.find("3->[8]->2") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("orthogonal init: orthonormal columns scaled by gain") {
  const Matrix q = orthogonal_matrix(8, 4, 2.0, 9);
  const Matrix gram = q.transpose() * q;
  CHECK((gram - 4.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix wide = orthogonal_matrix(3, 7, 1.0, 9);
  const Matrix gram2 = wide * wide.transpose();
  CHECK((gram2 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}
