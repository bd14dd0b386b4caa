#include "dppo/autodiff.hpp"

#include <cmath>
#include <utility>

namespace dppo {
namespace ad {

Var Tape::push(Matrix value, bool requires_grad, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.index < 0 || v.index >= static_cast<int>(nodes_.size()))
    throw InputError("autodiff: invalid Var handle");
  return nodes_[static_cast<std::size_t>(v.index)];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index < 0 || v.index >= static_cast<int>(nodes_.size()))
    throw InputError("autodiff: invalid Var handle");
  return nodes_[static_cast<std::size_t>(v.index)];
}

Matrix& Tape::grad_buffer(int index) {
  Node& n = nodes_[static_cast<std::size_t>(index)];
  if (!n.grad_allocated) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.grad_allocated = true;
  }
  return n.grad;
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
  const Matrix& m = node(v).value;
  if (m.size() != 1) throw InputError("autodiff: scalar() on a non-scalar node");
  return m(0, 0);
}

Matrix Tape::gradient(Var v) const {
  const Node& n = node(v);
  if (!n.grad_allocated) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  Node& r = node(root);
  if (r.value.size() != 1)
    throw InputError("autodiff: backward() requires a 1x1 root");
  grad_buffer(root.index)(0, 0) = 1.0;
  for (int i = root.index; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requires_grad && n.grad_allocated && n.backprop) n.backprop();
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::linear(Var x, Var weight, Var bias) {
  const Matrix& xv = node(x).value;
  const Matrix& wv = node(weight).value;
  const Matrix& bv = node(bias).value;
  if (xv.cols() != wv.cols())
    throw InputError("autodiff: linear() input/weight shape mismatch");
  if (bv.rows() != wv.rows() || bv.cols() != 1)
    throw InputError("autodiff: linear() bias shape mismatch");

  Matrix y = xv * wv.transpose();
  y.rowwise() += bv.col(0).transpose();

  const bool needs_grad =
      node(x).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), needs_grad, [this, x, weight, bias, out]() {
    const Matrix& g = node(out).grad;
    if (node(x).requires_grad) grad_buffer(x.index).noalias() += g * node(weight).value;
    if (node(weight).requires_grad)
      grad_buffer(weight.index).noalias() += g.transpose() * node(x).value;
    if (node(bias).requires_grad)
      grad_buffer(bias.index).col(0) += g.colwise().sum().transpose();
  });
}

Var Tape::activation_of(Var x, Activation activation) {
  const Matrix& xv = node(x).value;
  Matrix y = activation == Activation::kTanh ? Matrix(xv.array().tanh())
                                             : Matrix(xv.array().max(0.0));
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out, activation]() {
    if (!node(x).requires_grad) return;
    const Matrix& g = node(out).grad;
    const Matrix& y = node(out).value;
    if (activation == Activation::kTanh) {
      grad_buffer(x.index).array() += g.array() * (1.0 - y.array().square());
    } else {
      grad_buffer(x.index).array() +=
          g.array() * (node(x).value.array() > 0.0).cast<double>();
    }
  });
}

namespace {

// Row-wise log-softmax with max subtraction.
Matrix log_softmax_rows(const Matrix& logits) {
  const Vector row_max = logits.rowwise().maxCoeff();
  Matrix shifted = logits.colwise() - row_max;
  const Vector lse = shifted.array().exp().rowwise().sum().log();
  return shifted.colwise() - lse;
}

}  // namespace

Var Tape::log_prob_rows(Var logits, IndexVector actions) {
  const Matrix& lv = node(logits).value;
  if (actions.size() != lv.rows())
    throw InputError("autodiff: log_prob_rows() needs one action per row");
  for (Eigen::Index i = 0; i < actions.size(); ++i)
    if (actions[i] < 0 || actions[i] >= lv.cols())
      throw InputError("autodiff: action index out of range at row " +
                       std::to_string(i));

  const Matrix logp = log_softmax_rows(lv);
  Matrix y(lv.rows(), 1);
  for (Eigen::Index i = 0; i < lv.rows(); ++i) y(i, 0) = logp(i, actions[i]);

  Matrix probs = logp.array().exp();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(logits).requires_grad,
              [this, logits, out, probs = std::move(probs),
               actions = std::move(actions)]() {
                if (!node(logits).requires_grad) return;
                const Matrix& g = node(out).grad;  // (batch, 1)
                Matrix& lg = grad_buffer(logits.index);
                lg.array() -= probs.array().colwise() * g.col(0).array();
                for (Eigen::Index i = 0; i < actions.size(); ++i)
                  lg(i, actions[i]) += g(i, 0);
              });
}

Var Tape::entropy_rows(Var logits) {
  const Matrix& lv = node(logits).value;
  const Matrix logp = log_softmax_rows(lv);
  const Matrix probs = logp.array().exp();
  Matrix y = -(probs.array() * logp.array()).rowwise().sum();

  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(logits).requires_grad,
              [this, logits, out, probs, logp]() {
                if (!node(logits).requires_grad) return;
                const Matrix& g = node(out).grad;       // (batch, 1)
                const Matrix& h = node(out).value;      // (batch, 1)
                // dH/dz_k = -p_k (log p_k + H)
                Matrix dz =
                    -(probs.array() * (logp.array().colwise() + h.col(0).array()));
                grad_buffer(logits.index).array() +=
                    dz.array().colwise() * g.col(0).array();
              });
}

Var Tape::exp_of(Var x) {
  Matrix y = node(x).value.array().exp();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out]() {
    if (!node(x).requires_grad) return;
    grad_buffer(x.index).array() += node(out).grad.array() * node(out).value.array();
  });
}

Var Tape::square_of(Var x) {
  Matrix y = node(x).value.array().square();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out]() {
    if (!node(x).requires_grad) return;
    grad_buffer(x.index).array() +=
        2.0 * node(out).grad.array() * node(x).value.array();
  });
}

Var Tape::clip_of(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw InputError("autodiff: clip_of() needs lo <= hi");
  Matrix y = node(x).value.array().max(lo).min(hi);
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out, lo, hi]() {
    if (!node(x).requires_grad) return;
    const auto& xv = node(x).value.array();
    const auto inside =
        ((xv >= lo) && (xv <= hi)).cast<double>();
    grad_buffer(x.index).array() += node(out).grad.array() * inside;
  });
}

Var Tape::min_of(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw InputError("autodiff: min_of() shape mismatch");
  Matrix y = av.array().min(bv.array());
  const bool needs_grad = node(a).requires_grad || node(b).requires_grad;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), needs_grad, [this, a, b, out]() {
    const Matrix& g = node(out).grad;
    // Ties go to the first argument.
    const auto take_a =
        (node(a).value.array() <= node(b).value.array()).cast<double>();
    if (node(a).requires_grad)
      grad_buffer(a.index).array() += g.array() * take_a;
    if (node(b).requires_grad)
      grad_buffer(b.index).array() += g.array() * (1.0 - take_a);
  });
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw InputError("autodiff: add() shape mismatch");
  Matrix y = av + bv;
  const bool needs_grad = node(a).requires_grad || node(b).requires_grad;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), needs_grad, [this, a, b, out]() {
    const Matrix& g = node(out).grad;
    if (node(a).requires_grad) grad_buffer(a.index) += g;
    if (node(b).requires_grad) grad_buffer(b.index) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  const Matrix& av = node(a).value;
  const Matrix& bv = node(b).value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw InputError("autodiff: sub() shape mismatch");
  Matrix y = av - bv;
  const bool needs_grad = node(a).requires_grad || node(b).requires_grad;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), needs_grad, [this, a, b, out]() {
    const Matrix& g = node(out).grad;
    if (node(a).requires_grad) grad_buffer(a.index) += g;
    if (node(b).requires_grad) grad_buffer(b.index) -= g;
  });
}

Var Tape::sub_constant(Var x, Matrix c) {
  const Matrix& xv = node(x).value;
  if (xv.rows() != c.rows() || xv.cols() != c.cols())
    throw InputError("autodiff: sub_constant() shape mismatch");
  Matrix y = xv - c;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out]() {
    if (node(x).requires_grad) grad_buffer(x.index) += node(out).grad;
  });
}

Var Tape::mul_constant(Var x, Matrix c) {
  const Matrix& xv = node(x).value;
  if (xv.rows() != c.rows() || xv.cols() != c.cols())
    throw InputError("autodiff: mul_constant() shape mismatch");
  Matrix y = xv.array() * c.array();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out, c = std::move(c)]() {
    if (node(x).requires_grad)
      grad_buffer(x.index).array() += node(out).grad.array() * c.array();
  });
}

Var Tape::scale(Var x, double s) {
  Matrix y = s * node(x).value;
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out, s]() {
    if (node(x).requires_grad) grad_buffer(x.index) += s * node(out).grad;
  });
}

Var Tape::mean_all(Var x) {
  const Matrix& xv = node(x).value;
  if (xv.size() == 0) throw InputError("autodiff: mean_all() on empty node");
  Matrix y(1, 1);
  y(0, 0) = xv.sum() / static_cast<double>(xv.size());
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out]() {
    if (!node(x).requires_grad) return;
    const double g = node(out).grad(0, 0) / static_cast<double>(node(x).value.size());
    grad_buffer(x.index).array() += g;
  });
}

Var Tape::sum_all(Var x) {
  Matrix y(1, 1);
  y(0, 0) = node(x).value.sum();
  Var out{static_cast<int>(nodes_.size())};
  return push(std::move(y), node(x).requires_grad, [this, x, out]() {
    if (!node(x).requires_grad) return;
    grad_buffer(x.index).array() += node(out).grad(0, 0);
  });
}

std::vector<Var> register_parameters(Tape& tape, const ParameterVector& params) {
  std::vector<Var> leaves;
  leaves.reserve(static_cast<std::size_t>(params.block_count()));
  for (int i = 0; i < params.block_count(); ++i)
    leaves.push_back(tape.parameter(params.block(i)));
  return leaves;
}

namespace {

Var graph_forward_path(Tape& tape, const NetworkArchitecture& arch,
                       const std::vector<Var>& leaves, Var input, int base) {
  Var h = input;
  const int trunk_layers = static_cast<int>(arch.trunk_widths.size());
  for (int layer = 0; layer < trunk_layers; ++layer) {
    h = tape.linear(h, leaves[static_cast<std::size_t>(base + 2 * layer)],
                    leaves[static_cast<std::size_t>(base + 2 * layer + 1)]);
    h = tape.activation_of(h, arch.activation);
  }
  return tape.linear(h, leaves[static_cast<std::size_t>(base + 2 * trunk_layers)],
                     leaves[static_cast<std::size_t>(base + 2 * trunk_layers + 1)]);
}

}  // namespace

GraphForward graph_forward(Tape& tape, const NetworkArchitecture& arch,
                           const std::vector<Var>& leaves, const Matrix& observations) {
  if (observations.cols() != arch.input_dim)
    throw InputError("graph_forward: observation dimension mismatch");
  const Var input = tape.constant(observations);
  const int path_blocks = 2 * static_cast<int>(arch.trunk_widths.size()) + 2;
  GraphForward out;
  out.logits = graph_forward_path(tape, arch, leaves, input, 0);
  out.values = graph_forward_path(tape, arch, leaves, input, path_blocks);
  return out;
}

Vector gradient(const ParameterVector& params, const LossBuilder& build_loss) {
  Tape tape;
  const std::vector<Var> leaves = register_parameters(tape, params);
  const Var loss = build_loss(tape, leaves);
  const double loss_value = tape.scalar(loss);
  if (!std::isfinite(loss_value))
    throw NumericError("gradient: loss is not finite");
  tape.backward(loss);

  Vector flat(params.values().size());
  const auto& table = params.block_table();
  for (int i = 0; i < params.block_count(); ++i) {
    const Matrix g = tape.gradient(leaves[static_cast<std::size_t>(i)]);
    const auto& b = table[static_cast<std::size_t>(i)];
    Eigen::Map<Matrix>(flat.data() + b.offset, b.rows, b.cols) = g;
  }
  return flat;
}

}  // namespace ad
}  // namespace dppo
