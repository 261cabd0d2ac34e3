#pragma once

// Coding rates of an embedding batch and their analytic gradients.
//
//   R(Z)      = logdet(I + d/(n eps^2) Z Zᵀ)
//   R_c(Z, Π) = (1/n) Σ_l N_l logdet(I + d/(N_l eps^2) Z Diag(Π_l) Zᵀ),  N_l = Σ_i π_il
//
// Z is d×n with one embedding per column; Π is n×k with one membership row
// per sample.

#include <span>
#include <vector>

#include "cgmcr/tensor.hpp"

namespace cgmcr::rate {

struct EmbeddingBatch {
  Mat z;  // d×n
  double eps = 0.5;

  std::size_t dim() const { return z.rows(); }
  std::size_t count() const { return z.cols(); }

  /// Throws if eps <= 0 or any column deviates from unit norm by more than tol.
  void check(double tol = 1e-6) const;
};

struct Membership {
  Mat pi;  // n×k

  std::size_t count() const { return pi.rows(); }
  std::size_t clusters() const { return pi.cols(); }

  /// Throws if an entry is negative or a row does not sum to one within tol.
  void check(double tol = 1e-6) const;
};

/// Clusters whose soft mass Σ_i π_il falls below this are skipped.
inline constexpr double kMinClusterMass = 1e-8;

struct RateValue {
  double value = 0.0;
  Mat grad_z;  // d×n
};

struct RateReduction {
  double value = 0.0;
  Mat grad_z;   // d×n
  Mat grad_pi;  // n×k
};

/// R(Z; eps) and dR/dZ.
RateValue rate_R(const EmbeddingBatch& zb);

/// R_c(Z, Π; eps) and its partials in Z and Π. grad_pi accounts for Π both
/// inside Diag(Π_l) and through the soft mass N_l.
RateReduction rate_Rc(const EmbeddingBatch& zb, const Membership& m);

/// -R + R_c, the rate reduction negated into a loss.
RateReduction mcr2_objective(const EmbeddingBatch& zb, const Membership& m);

namespace detail {

enum class GramSide { automatic, ambient, sample };

/// Pieces of f(w) = logdet(I + alpha Z Diag(w) Zᵀ) needed by both rates.
struct WeightedLogdet {
  double value = 0.0;
  Mat grad_z;                       // df/dZ at fixed alpha
  std::vector<double> grad_w;       // df/dw_i at fixed alpha = alpha z_iᵀ M⁻¹ z_i
  double alpha_dvalue_dalpha = 0.0; // alpha df/dalpha = Σ alpha λ / (1 + alpha λ)
};

/// Evaluates on the d×d side (ambient) or the n×n side (sample). The
/// automatic choice takes the smaller one, ties going to the ambient side.
WeightedLogdet weighted_logdet(const Mat& z, std::span<const double> w, double alpha,
                               GramSide side = GramSide::automatic);

}  // namespace detail

}  // namespace cgmcr::rate
