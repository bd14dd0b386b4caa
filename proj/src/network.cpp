#include "dppo/network.hpp"

#include <cmath>
#include <sstream>

#include "dppo/rng.hpp"

namespace dppo {

void NetworkArchitecture::validate() const {
  if (input_dim < 1) throw InputError("architecture: input_dim must be >= 1");
  if (action_count < 1) throw InputError("architecture: action_count must be >= 1");
  for (const int w : trunk_widths)
    if (w < 1) throw InputError("architecture: trunk widths must be >= 1");
}

std::vector<NetworkArchitecture::Block> NetworkArchitecture::blocks() const {
  validate();
  std::vector<Block> table;
  Eigen::Index offset = 0;
  const auto push = [&table, &offset](int rows, int cols) {
    table.push_back(Block{rows, cols, offset});
    offset += static_cast<Eigen::Index>(rows) * cols;
  };
  const auto push_trunk_and_head = [this, &push](int head_rows) {
    int prev = input_dim;
    for (const int width : trunk_widths) {
      push(width, prev);  // weight
      push(width, 1);     // bias
      prev = width;
    }
    push(head_rows, prev);
    push(head_rows, 1);
  };
  push_trunk_and_head(action_count);  // policy path
  push_trunk_and_head(1);             // value path
  return table;
}

Eigen::Index NetworkArchitecture::parameter_count() const {
  const auto table = blocks();
  const auto& last = table.back();
  return last.offset + static_cast<Eigen::Index>(last.rows) * last.cols;
}

std::string NetworkArchitecture::describe() const {
  std::ostringstream out;
  out << input_dim << "->[";
  for (std::size_t i = 0; i < trunk_widths.size(); ++i) {
    if (i > 0) out << ",";
    out << trunk_widths[i];
  }
  out << "]->" << action_count
      << (activation == Activation::kTanh ? " tanh" : " relu");
  return out.str();
}

ParameterVector::ParameterVector(NetworkArchitecture arch)
    : arch_(std::move(arch)), blocks_(arch_.blocks()) {
  values_ = Vector::Zero(arch_.parameter_count());
}

ParameterVector::ParameterVector(NetworkArchitecture arch, Vector values)
    : arch_(std::move(arch)), blocks_(arch_.blocks()), values_(std::move(values)) {
  if (values_.size() != arch_.parameter_count())
    throw InputError("ParameterVector: expected " +
                     std::to_string(arch_.parameter_count()) + " values, got " +
                     std::to_string(values_.size()));
  if (!values_.allFinite())
    throw InputError("ParameterVector: values must be finite");
}

Eigen::Map<const Matrix> ParameterVector::block(int index) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(index));
  return Eigen::Map<const Matrix>(values_.data() + b.offset, b.rows, b.cols);
}

Matrix orthogonal_matrix(int rows, int cols, double gain, std::uint64_t seed) {
  Rng rng(seed);
  const bool wide = rows < cols;
  const int r = wide ? cols : rows;
  const int c = wide ? rows : cols;
  Matrix normal(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) normal(i, j) = rng.normal();

  Eigen::HouseholderQR<Matrix> qr(normal);
  Matrix q = qr.householderQ() * Matrix::Identity(r, c);
  const Matrix upper = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j)
    if (upper(j, j) < 0.0) q.col(j) = -q.col(j);

  Matrix result = wide ? Matrix(q.transpose()) : q;
  return gain * result;
}

ParameterVector ParameterVector::random_init(const NetworkArchitecture& arch,
                                             std::uint64_t seed) {
  ParameterVector params(arch);
  const auto& table = params.block_table();
  const int layer_count = static_cast<int>(table.size()) / 2;
  const int trunk_layers = static_cast<int>(arch.trunk_widths.size());
  for (int layer = 0; layer < layer_count; ++layer) {
    const auto& wb = table[static_cast<std::size_t>(2 * layer)];
    double gain = std::sqrt(2.0);
    if (layer == trunk_layers) gain = 0.01;               // policy head
    else if (layer == 2 * trunk_layers + 1) gain = 1.0;   // value head
    const Matrix w = orthogonal_matrix(wb.rows, wb.cols, gain,
                                       mix_seed(seed, static_cast<std::uint64_t>(layer)));
    Eigen::Map<Matrix>(params.values_.data() + wb.offset, wb.rows, wb.cols) = w;
    // Bias block stays zero.
  }
  return params;
}

namespace {

// One trunk-plus-head path; `base` is the index of its first block.
Matrix forward_path(const ParameterVector& params, const ConstMatrixRef& observations,
                    int base) {
  const auto& arch = params.architecture();
  Matrix h = observations;
  const int trunk_layers = static_cast<int>(arch.trunk_widths.size());
  for (int layer = 0; layer < trunk_layers; ++layer) {
    const auto w = params.block(base + 2 * layer);
    const auto b = params.block(base + 2 * layer + 1);
    Matrix z = h * w.transpose();
    z.rowwise() += b.col(0).transpose();
    h = arch.activation == Activation::kTanh
            ? Matrix(z.array().tanh())
            : Matrix(z.array().max(0.0));
  }
  const auto w = params.block(base + 2 * trunk_layers);
  const auto b = params.block(base + 2 * trunk_layers + 1);
  Matrix out = h * w.transpose();
  out.rowwise() += b.col(0).transpose();
  return out;
}

}  // namespace

ForwardResult forward(const ParameterVector& params,
                      const ConstMatrixRef& observations) {
  const auto& arch = params.architecture();
  if (observations.cols() != arch.input_dim)
    throw InputError("forward: expected observations with " +
                     std::to_string(arch.input_dim) + " columns, got " +
                     std::to_string(observations.cols()));

  const int path_blocks = 2 * static_cast<int>(arch.trunk_widths.size()) + 2;
  ForwardResult out;
  out.logits = forward_path(params, observations, 0);
  out.values = forward_path(params, observations, path_blocks).col(0);
  return out;
}

Vector log_softmax(const ConstVectorRef& logits) {
  if (logits.size() == 0) throw InputError("log_softmax: empty logits");
  const double max = logits.maxCoeff();
  const Vector shifted = logits.array() - max;
  const double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

Vector action_distribution(const ConstVectorRef& logits) {
  return log_softmax(logits).array().exp();
}

double log_prob(const ConstVectorRef& logits, int action) {
  if (action < 0 || action >= logits.size())
    throw InputError("log_prob: action " + std::to_string(action) +
                     " out of range for " + std::to_string(logits.size()) +
                     " actions");
  return log_softmax(logits)[action];
}

double entropy(const ConstVectorRef& logits) {
  const Vector logp = log_softmax(logits);
  const Vector p = logp.array().exp();
  // p underflows to 0 before logp loses finiteness, so 0*log(0) comes out 0.
  return -(p.array() * logp.array()).sum();
}

}  // namespace dppo
