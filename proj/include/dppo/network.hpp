#ifndef DPPO_NETWORK_HPP_
#define DPPO_NETWORK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dppo/types.hpp"

namespace dppo {

enum class Activation { kTanh = 0, kRelu = 1 };

// Feed-forward actor-critic. The policy and value paths are two dense trunks
// of identical widths, each with its own linear head; nothing is shared.
// (Convolutional feature sharing has no analogue at these observation sizes,
// and a shared dense trunk lets value-regression gradients crowd out policy
// features badly enough to stall classic-control training.)
struct NetworkArchitecture {
  int input_dim = 0;
  std::vector<int> trunk_widths;  // applies to both trunks
  int action_count = 0;
  Activation activation = Activation::kTanh;

  struct Block {
    int rows = 0;
    int cols = 0;
    Eigen::Index offset = 0;
  };

  void validate() const;
  int trunk_output_dim() const {
    return trunk_widths.empty() ? input_dim : trunk_widths.back();
  }
  // Parameter blocks in declared order: policy trunk (W then b per layer),
  // policy head W and b, value trunk, value head W and b. Matrices flatten
  // column-major.
  std::vector<Block> blocks() const;
  Eigen::Index parameter_count() const;
  std::string describe() const;

  bool operator==(const NetworkArchitecture& other) const = default;
};

// Flat parameter storage plus the architecture that gives it shape.
class ParameterVector {
 public:
  explicit ParameterVector(NetworkArchitecture arch);
  ParameterVector(NetworkArchitecture arch, Vector values);

  // Orthogonal initialization of all weight matrices: gain sqrt(2) on the
  // trunk, 0.01 on the policy head (keeps the initial policy near uniform),
  // 1.0 on the value head. Biases start at zero.
  static ParameterVector random_init(const NetworkArchitecture& arch,
                                     std::uint64_t seed);

  const NetworkArchitecture& architecture() const { return arch_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  int block_count() const { return static_cast<int>(blocks_.size()); }
  Eigen::Map<const Matrix> block(int index) const;
  const std::vector<NetworkArchitecture::Block>& block_table() const {
    return blocks_;
  }

 private:
  NetworkArchitecture arch_;
  std::vector<NetworkArchitecture::Block> blocks_;
  Vector values_;
};

// Immutable copy of the parameters taken when data collection starts; the
// log-probabilities it produced stay reproducible from it bit-for-bit.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(ParameterVector params) : params_(std::move(params)) {}
  const ParameterVector& params() const { return params_; }

 private:
  ParameterVector params_;
};

struct ForwardResult {
  Matrix logits;  // (batch, action_count)
  Vector values;  // (batch)
};

// Batched evaluation; rows of `observations` are independent inputs.
ForwardResult forward(const ParameterVector& params,
                      const ConstMatrixRef& observations);

Matrix orthogonal_matrix(int rows, int cols, double gain, std::uint64_t seed);

// Softmax with max-subtraction; entries positive, sums to 1.
Vector action_distribution(const ConstVectorRef& logits);
Vector log_softmax(const ConstVectorRef& logits);
double log_prob(const ConstVectorRef& logits, int action);
// Shannon entropy of softmax(logits), with the 0*log(0) = 0 convention.
double entropy(const ConstVectorRef& logits);

}  // namespace dppo

#endif  // DPPO_NETWORK_HPP_
