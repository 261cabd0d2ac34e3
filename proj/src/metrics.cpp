#include "cgmcr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr::metrics {

namespace {

void check_labels(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("metrics: label vectors differ in length (" + std::to_string(pred.size()) +
                         " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.empty()) throw DimensionError("metrics: empty label vectors");
  for (int v : pred) {
    if (v < 0) throw ParameterError("metrics: negative predicted label");
  }
  for (int v : truth) {
    if (v < 0) throw ParameterError("metrics: negative true label");
  }
}

double entropy(std::span<const double> counts, double total) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

Assignment hungarian(const Mat& cost) {
  if (!cost.square()) throw DimensionError("hungarian: cost matrix must be square");
  if (!cost.all_finite()) throw ParameterError("hungarian: cost matrix has non-finite entries");
  const std::size_t n = cost.rows();
  Assignment out;
  if (n == 0) return out;

  // Rows and columns are 1-based inside; index 0 is the virtual column.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> row_of(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = row_of[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.col_for_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.col_for_row[row_of[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost(i, out.col_for_row[i]);
  return out;
}

Mat contingency(std::span<const int> pred, std::span<const int> truth) {
  check_labels(pred, truth);
  const int kp = *std::max_element(pred.begin(), pred.end());
  const int kt = *std::max_element(truth.begin(), truth.end());
  const auto k = static_cast<std::size_t>(std::max(kp, kt) + 1);
  Mat c(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    c(static_cast<std::size_t>(pred[i]), static_cast<std::size_t>(truth[i])) += 1.0;
  }
  return c;
}

double clustering_accuracy(std::span<const int> pred, std::span<const int> truth) {
  const Mat c = contingency(pred, truth);
  const Assignment best = hungarian(c * -1.0);
  return -best.cost / static_cast<double>(pred.size());
}

double nmi(std::span<const int> pred, std::span<const int> truth, NmiNormalization norm) {
  const Mat c = contingency(pred, truth);
  const std::size_t k = c.rows();
  const double total = static_cast<double>(pred.size());
  std::vector<double> rows(k, 0.0);
  std::vector<double> cols(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      rows[i] += c(i, j);
      cols[j] += c(i, j);
    }
  }
  const double hp = entropy(rows, total);
  const double ht = entropy(cols, total);
  if (hp == 0.0 && ht == 0.0) return 1.0;

  double mi = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double nij = c(i, j);
      if (nij > 0.0) mi += (nij / total) * std::log(nij * total / (rows[i] * cols[j]));
    }
  }
  double denom = 0.0;
  switch (norm) {
    case NmiNormalization::geometric: denom = std::sqrt(hp * ht); break;
    case NmiNormalization::arithmetic: denom = 0.5 * (hp + ht); break;
    case NmiNormalization::min: denom = std::min(hp, ht); break;
    case NmiNormalization::max: denom = std::max(hp, ht); break;
  }
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

}  // namespace cgmcr::metrics
