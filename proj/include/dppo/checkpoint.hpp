#ifndef DPPO_CHECKPOINT_HPP_
#define DPPO_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>

#include "dppo/adam.hpp"
#include "dppo/network.hpp"

namespace dppo {

// Checkpoint file layout (all little-endian):
//   magic "DPPO"
//   u32 version (= 1)
//   u32 input_dim, u32 trunk layer count, u32 widths..., u32 action_count,
//   u32 activation code (0 = tanh, 1 = relu)
//   u64 parameter count, f64 values in declared block order
//   u32 optimizer-state flag; if 1:
//     u64 step count, f64 beta1, f64 beta2, f64 epsilon,
//     u64 count + f64 first moments, u64 count + f64 second moments
struct Checkpoint {
  ParameterVector params;
  std::optional<AdamState> adam;
};

void save_checkpoint(const ParameterVector& params, const AdamState* adam,
                     const std::filesystem::path& path);

// Throws FormatError naming the byte offset on corrupt or truncated files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// As above, but also requires the stored architecture to match; the error
// names both shapes.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const NetworkArchitecture& expected);

}  // namespace dppo

#endif  // DPPO_CHECKPOINT_HPP_
