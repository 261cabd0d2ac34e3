#pragma once

// Binary model checkpoints. All integers are little-endian, all reals are
// IEEE-754 binary64, little-endian.
//
//   offset  field
//   0       magic "CGMC" (4 bytes)
//   4       u32 format version (= 1)
//   8       u32 input_dim, u32 hidden, u32 embed_dim, u32 clusters, u32 head_depth
//   28      f64 tau
//   36      u32 L = length of the Gumbel RNG state text, then L bytes
//           (std::mt19937_64 state as written by operator<<)
//           u32 layer count, then for every layer of the pre-feature block,
//           feature head and cluster head in that order:
//             u32 kind (1 linear, 2 batchnorm, 3 relu, 4 l2norm, 5 gumbel_softmax)
//             u32 in_dim, u32 out_dim
//             linear:         f64 weight[out*in] (row-major), f64 bias[out]
//             batchnorm:      f64 momentum, f64 eps, then f64[out] each of
//                             scale, shift, running_mean, running_var
//             gumbel_softmax: f64 tau
//             relu, l2norm:   nothing

#include <filesystem>
#include <iosfwd>

#include "cgmcr/network.hpp"

namespace cgmcr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const nn::Model& model, std::ostream& out);
nn::Model load_checkpoint(std::istream& in);

void save_checkpoint(const nn::Model& model, const std::filesystem::path& path);
nn::Model load_checkpoint(const std::filesystem::path& path);

}  // namespace cgmcr
