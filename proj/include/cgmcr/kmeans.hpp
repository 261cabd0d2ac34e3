#pragma once

#include <cstdint>
#include <vector>

#include "cgmcr/tensor.hpp"

namespace cgmcr {

struct KMeansResult {
  std::vector<int> labels;
  Mat centers;  // k×dim
  double inertia = 0.0;
};

struct KMeansOptions {
  std::size_t restarts = 20;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;
};

/// Lloyd's algorithm on the rows of `points` with k-means++ seeding; keeps the
/// restart with the lowest inertia.
KMeansResult kmeans(const Mat& points, std::size_t k, const KMeansOptions& opts = {});

}  // namespace cgmcr
