#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "cgmcr/tensor.hpp"

namespace oracle {

using cgmcr::Mat;

inline Mat random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

inline Mat random_symmetric(std::size_t n, std::mt19937_64& rng) {
  Mat a = random_matrix(n, n, rng);
  Mat s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

inline Mat unit_columns(Mat z) {
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double n = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) n += z(i, j) * z(i, j);
    n = std::sqrt(n);
    for (std::size_t i = 0; i < z.rows(); ++i) z(i, j) /= n;
  }
  return z;
}

inline Mat random_stochastic(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Mat p(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += p(i, j) = u(rng);
    for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
  }
  return p;
}

// Cyclic Jacobi rotations until the off-diagonal mass vanishes. Returns
// ascending eigenvalues.
inline std::vector<double> jacobi_eigenvalues(Mat a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double jacobi_logdet_ipsd(const Mat& m, double scale) {
  Mat a = m;
  for (double& v : a.data()) v *= scale;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0;
  double s = 0.0;
  for (double e : jacobi_eigenvalues(a)) s += std::log(e);
  return s;
}

// Central differences of f along every entry of x. Evaluates 2·size(x) times.
inline Mat fd_gradient(const std::function<double(const Mat&)>& f, const Mat& x, double h = 1e-5) {
  Mat g(x.rows(), x.cols());
  Mat p = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double old = p.data()[i];
    p.data()[i] = old + h;
    const double fp = f(p);
    p.data()[i] = old - h;
    const double fm = f(p);
    p.data()[i] = old;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// max |a - b| / max |b|: relative error in the sup norm, b the reference.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    ref = std::max(ref, std::abs(b[i]));
  }
  return ref > 0.0 ? diff / ref : diff;
}

inline double rel_error(const Mat& a, const Mat& b) { return rel_error(a.data(), b.data()); }

// Minimum assignment cost by trying all k! permutations.
inline double brute_force_assignment(const Mat& cost) {
  std::vector<std::size_t> perm(cost.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost(i, perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double best_permutation_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += perm[static_cast<std::size_t>(pred[i])] == truth[i];
    best = std::max(best, static_cast<double>(hit) / static_cast<double>(pred.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Adjusted Rand index from pair counts.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  const auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sij = 0, sa = 0, sb = 0;
  for (auto& [key, v] : nij) sij += c2(v);
  for (auto& [key, v] : ai) sa += c2(v);
  for (auto& [key, v] : bj) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double maxi = 0.5 * (sa + sb);
  if (maxi == expected) return 1.0;
  return (sij - expected) / (maxi - expected);
}

}  // namespace oracle
