#include "cgmcr/graph_cut.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cgmcr/errors.hpp"
#include "cgmcr/kmeans.hpp"

namespace cgmcr::graph {

AffinityGraph::AffinityGraph(std::vector<std::vector<Edge>> rows, bool symmetric)
    : rows_(std::move(rows)), degrees_(rows_.size(), 0.0), symmetric_(symmetric) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double deg = 0.0;
    for (std::size_t e = 0; e < rows_[i].size(); ++e) {
      const Edge& edge = rows_[i][e];
      if (edge.col >= rows_.size()) throw DimensionError("AffinityGraph: column out of range");
      if (e > 0 && rows_[i][e - 1].col >= edge.col) {
        throw ParameterError("AffinityGraph: row " + std::to_string(i) + " is not sorted");
      }
      if (!(edge.weight >= 0.0) || !std::isfinite(edge.weight)) {
        throw ParameterError("AffinityGraph: weights must be finite and non-negative");
      }
      deg += edge.weight;
    }
    degrees_[i] = deg;
  }
}

std::size_t AffinityGraph::nonzeros() const {
  std::size_t total = 0;
  for (const auto& r : rows_) total += r.size();
  return total;
}

double AffinityGraph::weight(std::size_t i, std::size_t j) const {
  const auto& r = rows_[i];
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const Edge& e, std::size_t c) { return e.col < c; });
  return (it != r.end() && it->col == j) ? it->weight : 0.0;
}

Mat AffinityGraph::dense() const {
  Mat a(size(), size());
  for (std::size_t i = 0; i < size(); ++i) {
    for (const Edge& e : rows_[i]) a(i, e.col) = e.weight;
  }
  return a;
}

Mat AffinityGraph::laplacian() const {
  Mat l = dense() * -1.0;
  for (std::size_t i = 0; i < size(); ++i) l(i, i) += degrees_[i];
  return l;
}

Mat AffinityGraph::multiply(const Mat& x) const {
  if (x.rows() != size()) throw DimensionError("AffinityGraph::multiply: row count mismatch");
  Mat out(x.rows(), x.cols());
  for (std::size_t i = 0; i < size(); ++i) {
    auto oi = out.row(i);
    for (const Edge& e : rows_[i]) {
      auto xr = x.row(e.col);
      for (std::size_t c = 0; c < x.cols(); ++c) oi[c] += e.weight * xr[c];
    }
  }
  return out;
}

AffinityGraph sparsify_top_s(const Mat& similarity, std::size_t s, bool include_self) {
  if (!similarity.square()) throw DimensionError("sparsify_top_s: similarity is not square");
  const std::size_t n = similarity.rows();
  const std::size_t limit = include_self ? n : (n == 0 ? 0 : n - 1);
  if (s < 1 || s > limit) {
    throw ParameterError("sparsify_top_s: s=" + std::to_string(s) + " must lie in [1, " +
                         std::to_string(limit) + "]");
  }

  std::vector<std::vector<Edge>> rows(n);
  std::vector<Edge> cand;
  cand.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (!include_self && j == i) continue;
      cand.push_back({j, std::max(similarity(i, j), 0.0)});
    }
    auto by_weight = [](const Edge& a, const Edge& b) {
      return a.weight != b.weight ? a.weight > b.weight : a.col < b.col;
    };
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(s), cand.end(),
                      by_weight);
    auto& row = rows[i];
    for (std::size_t e = 0; e < s; ++e) {
      if (cand[e].weight > 0.0) row.push_back(cand[e]);
    }
    std::sort(row.begin(), row.end(), [](const Edge& a, const Edge& b) { return a.col < b.col; });
  }
  return AffinityGraph(std::move(rows), false);
}

AffinityGraph symmetrize(const AffinityGraph& g) {
  const std::size_t n = g.size();
  // Both (i,j) and (j,i) accumulate a_ij/2 then a_ji/2 in row order, so the
  // result is exactly symmetric.
  std::vector<std::map<std::size_t, double>> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Edge& e : g.row(i)) {
      acc[i][e.col] += 0.5 * e.weight;
      acc[e.col][i] += 0.5 * e.weight;
    }
  }
  std::vector<std::vector<Edge>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].reserve(acc[i].size());
    for (const auto& [col, w] : acc[i]) rows[i].push_back({col, w});
  }
  return AffinityGraph(std::move(rows), true);
}

AffinityGraph from_dense(const Mat& a) {
  if (!a.square()) throw DimensionError("from_dense: matrix is not square");
  const std::size_t n = a.rows();
  std::vector<std::vector<Edge>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) != a(j, i)) throw ParameterError("from_dense: matrix is not symmetric");
      if (a(i, j) != 0.0) rows[i].push_back({j, a(i, j)});
    }
  }
  return AffinityGraph(std::move(rows), true);
}

AffinityGraph build_affinity(const rate::EmbeddingBatch& zb, const AffinityOptions& opts) {
  const Mat& z = zb.z;
  const std::size_t n = z.cols();
  if (opts.s < 1 || opts.s > n) {
    throw ParameterError("build_affinity: sparsity s=" + std::to_string(opts.s) +
                         " must lie in [1, n=" + std::to_string(n) + "]");
  }

  Mat sim;
  if (opts.mode == AffinityMode::cosine) {
    sim = matmul_tn(z, z);
  } else {
    if (!opts.sigma || !(*opts.sigma > 0.0)) {
      throw ParameterError("build_affinity: gaussian mode needs a positive sigma");
    }
    const double denom = 2.0 * (*opts.sigma) * (*opts.sigma);
    const Mat zt = z.transpose();
    sim = Mat(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      sim(i, i) = 1.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        double sq = 0.0;
        auto zi = zt.row(i);
        auto zj = zt.row(j);
        for (std::size_t r = 0; r < zi.size(); ++r) {
          const double t = zi[r] - zj[r];
          sq += t * t;
        }
        sim(i, j) = sim(j, i) = std::exp(-sq / denom);
      }
    }
  }

  AffinityGraph g = sparsify_top_s(sim, opts.s, opts.include_self);
  return opts.symmetrize ? symmetrize(g) : g;
}

NcutValue ncut_loss(const AffinityGraph& g, const rate::Membership& m, double gamma) {
  const std::size_t n = g.size();
  const std::size_t k = m.clusters();
  if (m.count() != n) {
    throw DimensionError("ncut_loss: membership has " + std::to_string(m.count()) +
                         " rows for a graph of " + std::to_string(n) + " nodes");
  }
  if (gamma < 0.0) throw ParameterError("ncut_loss: gamma must be non-negative");
  const auto deg = g.degrees();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) {
      throw DegenerateGraphError("ncut_loss: node " + std::to_string(i) +
                                 " is isolated; increase the sparsity s or check the embeddings");
    }
  }
  const Mat& pi = m.pi;

  NcutValue out;
  out.volumes.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) out.volumes[l] += pi(i, l) * deg[i];
  }
  std::vector<double> v(k, 0.0);
  std::vector<bool> active(k, false);
  for (std::size_t l = 0; l < k; ++l) {
    if (out.volumes[l] >= kMinClusterVolume) {
      active[l] = true;
      v[l] = 1.0 / std::sqrt(out.volumes[l]);
    }
  }

  // L Π = D Π - A Π
  Mat lp = g.multiply(pi) * -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) lp(i, l) += deg[i] * pi(i, l);
  }
  std::vector<double> s_diag(k, 0.0);  // p_lᵀ L p_l
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) s_diag[l] += pi(i, l) * lp(i, l);
  }
  const Mat h = matmul_tn(scale_rows(pi, deg), pi);  // Πᵀ D Π

  Mat e(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    if (!active[a]) continue;
    out.trace_term += v[a] * v[a] * s_diag[a];
    for (std::size_t b = 0; b < k; ++b) {
      if (!active[b]) continue;
      e(a, b) = v[a] * v[b] * h(a, b) - (a == b ? 1.0 : 0.0);
      out.penalty_term += e(a, b) * e(a, b);
    }
  }
  out.penalty_term *= 0.5 * gamma;
  out.value = out.trace_term + out.penalty_term;

  // dF/dH = γ E ∘ (v vᵀ); its Π-gradient is 2 D Π (dF/dH).
  Mat dh(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) dh(a, b) = gamma * e(a, b) * v[a] * v[b];
  }
  const Mat pdh = matmul(pi, dh);

  // Total derivative in v_l, pushed through v_l = vol_l^(-1/2), dvol_l/dπ_il = d_i.
  std::vector<double> dvol(k, 0.0);
  for (std::size_t l = 0; l < k; ++l) {
    if (!active[l]) continue;
    double gv = 2.0 * v[l] * s_diag[l];
    for (std::size_t b = 0; b < k; ++b) gv += 2.0 * gamma * e(l, b) * v[b] * h(l, b);
    dvol[l] = -0.5 * gv * v[l] * v[l] * v[l];
  }

  out.grad_pi = Mat(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      if (!active[l]) continue;
      out.grad_pi(i, l) =
          2.0 * v[l] * v[l] * lp(i, l) + 2.0 * deg[i] * pdh(i, l) + dvol[l] * deg[i];
    }
  }
  return out;
}

std::vector<int> spectral_oracle(const AffinityGraph& g, std::size_t k, std::uint64_t kmeans_seed) {
  const std::size_t n = g.size();
  if (k == 0 || k > n) {
    throw ParameterError("spectral_oracle: k=" + std::to_string(k) + " must lie in [1, " +
                         std::to_string(n) + "]");
  }
  if (!g.symmetric()) throw ParameterError("spectral_oracle: graph must be symmetric");
  if (k == 1) return std::vector<int>(n, 0);

  const auto deg = g.degrees();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) {
      throw DegenerateGraphError("spectral_oracle: node " + std::to_string(i) + " is isolated");
    }
    inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  }
  Mat lnorm = Mat::identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const Edge& e : g.row(i)) lnorm(i, e.col) -= e.weight * (inv_sqrt[i] * inv_sqrt[e.col]);
  }

  const SymEig eig = sym_eig(lnorm);
  Mat embed(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      embed(i, c) = eig.eigenvectors(i, c);
      norm += embed(i, c) * embed(i, c);
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& x : embed.row(i)) x /= norm;
    }
  }
  KMeansOptions opts;
  opts.seed = kmeans_seed;
  return kmeans(embed, k, opts).labels;
}

}  // namespace cgmcr::graph
