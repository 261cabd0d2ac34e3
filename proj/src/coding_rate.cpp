#include "cgmcr/coding_rate.hpp"

#include <cmath>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr::rate {

void EmbeddingBatch::check(double tol) const {
  if (!(eps > 0.0)) throw ParameterError("EmbeddingBatch: eps must be positive");
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double sq = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) sq += z(r, c) * z(r, c);
    if (std::abs(std::sqrt(sq) - 1.0) > tol) {
      throw ParameterError("EmbeddingBatch: column " + std::to_string(c) + " is not unit norm");
    }
  }
}

void Membership::check(double tol) const {
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    double sum = 0.0;
    for (double v : pi.row(i)) {
      if (v < 0.0) throw ParameterError("Membership: negative entry in row " + std::to_string(i));
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw ParameterError("Membership: row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

namespace detail {

WeightedLogdet weighted_logdet(const Mat& z, std::span<const double> w, double alpha,
                               GramSide side) {
  const std::size_t d = z.rows();
  const std::size_t n = z.cols();
  if (w.size() != n) throw DimensionError("weighted_logdet: weight length mismatch");
  if (side == GramSide::automatic) side = d <= n ? GramSide::ambient : GramSide::sample;

  WeightedLogdet out;
  out.grad_w.assign(n, 0.0);

  if (side == GramSide::ambient) {
    // S = Z Diag(w) Zᵀ, summed so that S(a,b) and S(b,a) round identically.
    Mat s(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      auto za = z.row(a);
      for (std::size_t b = a; b < d; ++b) {
        auto zb = z.row(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += w[i] * (za[i] * zb[i]);
        s(a, b) = acc;
        s(b, a) = acc;
      }
    }
    const SymEig eig = sym_eig(s);
    std::vector<double> c(d);
    for (std::size_t r = 0; r < d; ++r) {
      const double al = alpha * eig.eigenvalues[r];
      out.value += std::log1p(al);
      out.alpha_dvalue_dalpha += al / (1.0 + al);
      c[r] = 1.0 / (1.0 + al);
    }
    // Y = Uᵀ Z; M⁻¹ Z = U Diag(c) Y.
    const Mat y = matmul_tn(eig.eigenvectors, z);
    for (std::size_t r = 0; r < d; ++r) {
      auto yr = y.row(r);
      for (std::size_t i = 0; i < n; ++i) out.grad_w[i] += c[r] * yr[i] * yr[i];
    }
    for (double& g : out.grad_w) g *= alpha;
    Mat minv_z = matmul(eig.eigenvectors, scale_rows(y, c));
    out.grad_z = scale_cols(std::move(minv_z), w) * (2.0 * alpha);
    return out;
  }

  // Sample side: K = Diag(w)^½ ZᵀZ Diag(w)^½ shares its nonzero spectrum with S.
  const Mat g = matmul_tn(z, z);
  std::vector<double> sw(n);
  for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);
  Mat k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(i, j) = (sw[i] * sw[j]) * g(i, j);
  }
  const SymEig eig = sym_eig(k);
  std::vector<double> c(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double al = alpha * eig.eigenvalues[r];
    out.value += std::log1p(al);
    out.alpha_dvalue_dalpha += al / (1.0 + al);
    c[r] = 1.0 / (1.0 + al);
  }
  // z_iᵀ M⁻¹ z_i = G_ii - alpha [G W^½ (I + alpha K)⁻¹ W^½ G]_ii  (Woodbury)
  const Mat y = matmul_tn(eig.eigenvectors, scale_rows(g, sw));
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t r = 0; r < n; ++r) q += c[r] * y(r, i) * y(r, i);
    out.grad_w[i] = alpha * (g(i, i) - alpha * q);
  }
  // M⁻¹ Z W = Z T Diag(c) Tᵀ with T = W^½ U.
  const Mat t = scale_rows(eig.eigenvectors, sw);
  const Mat zt = matmul(z, t);
  out.grad_z = matmul_nt(scale_cols(zt, c), t) * (2.0 * alpha);
  return out;
}

}  // namespace detail

namespace {

void require_batch(const EmbeddingBatch& zb) {
  if (zb.count() == 0) throw DimensionError("coding rate: empty batch");
  if (zb.dim() == 0) throw DimensionError("coding rate: zero embedding dimension");
  if (!(zb.eps > 0.0)) throw ParameterError("coding rate: eps must be positive");
}

double rate_scale(std::size_t d, double mass, double eps) {
  return static_cast<double>(d) / (mass * eps * eps);
}

}  // namespace

RateValue rate_R(const EmbeddingBatch& zb) {
  require_batch(zb);
  const std::size_t n = zb.count();
  const std::vector<double> ones(n, 1.0);
  double mass = 0.0;
  for (double v : ones) mass += v;
  auto term = detail::weighted_logdet(zb.z, ones, rate_scale(zb.dim(), mass, zb.eps));
  return {term.value, std::move(term.grad_z)};
}

RateReduction rate_Rc(const EmbeddingBatch& zb, const Membership& m) {
  require_batch(zb);
  const std::size_t n = zb.count();
  const std::size_t k = m.clusters();
  if (m.count() != n) {
    throw DimensionError("rate_Rc: membership has " + std::to_string(m.count()) +
                         " rows but the batch has " + std::to_string(n) + " columns");
  }

  RateReduction out;
  out.grad_z = Mat(zb.dim(), n);
  out.grad_pi = Mat(n, k);
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> w(n);
  for (std::size_t l = 0; l < k; ++l) {
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = m.pi(i, l);
      mass += w[i];
    }
    if (mass < kMinClusterMass) continue;

    const double alpha = rate_scale(zb.dim(), mass, zb.eps);
    auto term = detail::weighted_logdet(zb.z, w, alpha);
    const double share = mass / static_cast<double>(n);
    out.value += share * term.value;
    term.grad_z *= share;
    out.grad_z += term.grad_z;
    // d/dπ_il of (N_l/n) f_l: f_l depends on π_il through Diag(Π_l) and
    // through alpha_l = d / (N_l eps^2).
    const double through_mass = (term.value - term.alpha_dvalue_dalpha) * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      out.grad_pi(i, l) = through_mass + share * term.grad_w[i];
    }
  }
  return out;
}

RateReduction mcr2_objective(const EmbeddingBatch& zb, const Membership& m) {
  RateReduction out = rate_Rc(zb, m);
  const RateValue r = rate_R(zb);
  out.value -= r.value;
  out.grad_z -= r.grad_z;
  return out;
}

}  // namespace cgmcr::rate
