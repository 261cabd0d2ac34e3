#include "cgmcr/kmeans.hpp"

#include <limits>
#include <random>

#include "cgmcr/errors.hpp"

namespace cgmcr {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

Mat seed_centers(const Mat& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Mat centers(k, points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], squared_distance(points.row(i), centers.row(c - 1)));
      total += dist[i];
    }
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      double target = unit(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= dist[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
  }
  return centers;
}

KMeansResult lloyd(const Mat& points, Mat centers, std::size_t max_iter) {
  const std::size_t n = points.rows();
  const std::size_t k = centers.rows();
  const std::size_t dim = points.cols();
  KMeansResult out;
  out.labels.assign(n, -1);

  std::vector<double> best(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int label = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = squared_distance(points.row(i), centers.row(c));
        if (dd < bd) {
          bd = dd;
          label = static_cast<int>(c);
        }
      }
      best[i] = bd;
      if (out.labels[i] != label) {
        out.labels[i] = label;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Mat sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.labels[i]);
      ++counts[c];
      auto row = sums.row(c);
      auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) row[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (best[i] > best[far]) far = i;
        }
        std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
        best[far] = 0.0;
        continue;
      }
      auto row = centers.row(c);
      auto s = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) row[j] = s[j] / static_cast<double>(counts[c]);
    }
  }

  out.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.inertia += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(out.labels[i])));
  }
  out.centers = std::move(centers);
  return out;
}

}  // namespace

KMeansResult kmeans(const Mat& points, std::size_t k, const KMeansOptions& opts) {
  if (k == 0) throw ParameterError("kmeans: k must be positive");
  if (k > points.rows()) throw ParameterError("kmeans: k exceeds the number of points");
  std::mt19937_64 rng(opts.seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(opts.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansResult run = lloyd(points, seed_centers(points, k, rng), opts.max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace cgmcr
