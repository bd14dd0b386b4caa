#ifndef DPPO_AUTODIFF_HPP_
#define DPPO_AUTODIFF_HPP_

#include <functional>
#include <vector>

#include "dppo/network.hpp"
#include "dppo/types.hpp"

namespace dppo {
namespace ad {

// Handle into a Tape. Cheap to copy; only valid for the tape that created it.
struct Var {
  int index = -1;
};

// Reverse-mode tape over dense matrices. Values are Eigen matrices (vectors
// are n x 1); every operation records a closure that pulls the node's
// gradient back into its parents. The primitive set is exactly what the
// training losses need: dense layers, activations, softmax log-probability,
// entropy, squared error, clip, min and mean.
//
// Subgradient conventions: clip passes gradient on the closed interval
// boundary (the identity branch), min routes ties to its first argument,
// relu uses 0 at the kink.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Matrix value);

  // y = x * W^T + broadcast(b); x is (batch, in), W is (out, in), b (out, 1).
  Var linear(Var x, Var weight, Var bias);
  Var activation_of(Var x, Activation activation);
  // Per-row log pi(action | logits): (batch, actions) -> (batch, 1).
  Var log_prob_rows(Var logits, IndexVector actions);
  // Per-row softmax entropy: (batch, actions) -> (batch, 1).
  Var entropy_rows(Var logits);
  Var exp_of(Var x);
  Var square_of(Var x);
  Var clip_of(Var x, double lo, double hi);
  Var min_of(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var sub_constant(Var x, Matrix c);
  Var mul_constant(Var x, Matrix c);  // elementwise
  Var scale(Var x, double s);
  Var mean_all(Var x);  // -> 1x1
  Var sum_all(Var x);   // -> 1x1

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  // Runs backpropagation from a 1x1 root.
  void backward(Var root);
  // Gradient of the last backward() root w.r.t. v (zero if unreachable).
  Matrix gradient(Var v) const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool grad_allocated = false;
    std::function<void()> backprop;
  };

  Var push(Matrix value, bool requires_grad, std::function<void()> backprop);
  Node& node(Var v);
  const Node& node(Var v) const;
  Matrix& grad_buffer(int index);

  std::vector<Node> nodes_;
};

// Parameter blocks of `params` registered as tape leaves, declared order.
std::vector<Var> register_parameters(Tape& tape, const ParameterVector& params);

// Differentiable mirror of forward(): shared trunk, policy and value heads.
struct GraphForward {
  Var logits;
  Var values;  // (batch, 1)
};
GraphForward graph_forward(Tape& tape, const NetworkArchitecture& arch,
                           const std::vector<Var>& leaves, const Matrix& observations);

// Exact reverse-mode gradient of a scalar loss built from the tape
// primitives, flattened in the parameter vector's declared order.
// Throws NumericError if the loss comes out non-finite.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;
Vector gradient(const ParameterVector& params, const LossBuilder& build_loss);

}  // namespace ad
}  // namespace dppo

#endif  // DPPO_AUTODIFF_HPP_
