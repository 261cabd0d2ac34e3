#pragma once

#include <span>
#include <vector>

#include "cgmcr/tensor.hpp"

namespace cgmcr::metrics {

struct Assignment {
  std::vector<std::size_t> col_for_row;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
/// potentials, O(k³)).
Assignment hungarian(const Mat& cost);

/// Fraction of points whose predicted label maps to their true label under
/// the best one-to-one relabeling.
double clustering_accuracy(std::span<const int> pred, std::span<const int> truth);

enum class NmiNormalization { geometric, arithmetic, min, max };

/// I(pred; truth) normalized by the chosen mean of H(pred) and H(truth).
/// Two constant labelings score 1.
double nmi(std::span<const int> pred, std::span<const int> truth,
           NmiNormalization norm = NmiNormalization::geometric);

/// Row = predicted label, column = true label. Size is max label + 1 over both.
Mat contingency(std::span<const int> pred, std::span<const int> truth);

}  // namespace cgmcr::metrics
