#pragma once

// Checkpoint file layout (all integers little-endian):
//
//   8 bytes   magic "WCAECKPT"
//   u32       format version (1)
//   spec      u32 variant, u32 k, u64 seed, u32 input_length,
//             u32 bottleneck_length, 5 x u32 encoder channels,
//             u32 conv kernel, u32 wavelet branch kernel, f64 dropout rate
//   u32       layer count
//   per layer u32 kind tag, u32 table row, u32 array count, then per array:
//             u32 rank, rank x u32 dims, prod(dims) x f64 values
//
// Arrays are written in Layer::arrays() order; conv weights are
// (kernel, in, out) row-major and batch-norm layers carry gamma, beta,
// running_mean, running_var.

#include <string>
#include <string_view>

#include "wcae/architecture.hpp"

namespace wcae::ckpt {

inline constexpr std::string_view kMagic = "WCAECKPT";
inline constexpr std::uint32_t kVersion = 1;

std::string serialize(arch::Network& net);
arch::Network deserialize(std::string_view bytes, const std::string& context = "checkpoint");

void save(arch::Network& net, const std::string& path);
arch::Network load(const std::string& path);

}  // namespace wcae::ckpt
