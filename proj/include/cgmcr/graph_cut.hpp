#pragma once

// Sparse affinity graphs built from embedding batches, the relaxed
// normalized-cut loss over soft memberships, and classical spectral
// clustering used as a reference partitioner.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cgmcr/coding_rate.hpp"
#include "cgmcr/tensor.hpp"

namespace cgmcr::graph {

struct Edge {
  std::size_t col = 0;
  double weight = 0.0;
};

class AffinityGraph {
 public:
  AffinityGraph() = default;
  /// Rows must be sorted by column with no duplicates and non-negative weights.
  AffinityGraph(std::vector<std::vector<Edge>> rows, bool symmetric);

  std::size_t size() const { return rows_.size(); }
  std::span<const Edge> row(std::size_t i) const { return rows_[i]; }
  std::span<const double> degrees() const { return degrees_; }
  bool symmetric() const { return symmetric_; }
  std::size_t nonzeros() const;

  /// Weight a_ij, zero when absent.
  double weight(std::size_t i, std::size_t j) const;

  Mat dense() const;
  /// L = D - A
  Mat laplacian() const;
  /// A * x
  Mat multiply(const Mat& x) const;

 private:
  std::vector<std::vector<Edge>> rows_;
  std::vector<double> degrees_;
  bool symmetric_ = false;
};

enum class AffinityMode { cosine, gaussian };

struct AffinityOptions {
  std::size_t s = 10;
  AffinityMode mode = AffinityMode::cosine;
  std::optional<double> sigma;  // required for gaussian
  bool include_self = true;
  bool symmetrize = true;
};

/// Keeps the s largest entries of each row of a dense similarity after
/// clamping negatives to zero. Ties break toward the lower column. Zero
/// weights are not stored. The result is generally not symmetric.
AffinityGraph sparsify_top_s(const Mat& similarity, std::size_t s, bool include_self);

/// (A + Aᵀ) / 2 on the union of the sparsity patterns.
AffinityGraph symmetrize(const AffinityGraph& g);

/// Symmetric graph from a dense non-negative symmetric matrix.
AffinityGraph from_dense(const Mat& a);

/// A = P_s(ZᵀZ) for cosine mode or P_s(exp(-|z_i - z_j|² / 2σ²)) for gaussian.
AffinityGraph build_affinity(const rate::EmbeddingBatch& zb, const AffinityOptions& opts);

struct NcutValue {
  double value = 0.0;
  double trace_term = 0.0;
  double penalty_term = 0.0;
  Mat grad_pi;                  // n×k
  std::vector<double> volumes;  // Σ_i π_il d_ii, one per cluster
};

/// Volumes below this are treated as empty clusters and dropped.
inline constexpr double kMinClusterVolume = 1e-10;

/// trace(Π̃ᵀ L Π̃) + γ/2 |Π̃ᵀ D Π̃ - I|²_F with Π̃ = Π V and
/// V = Diag(Σ_i π_il d_ii)^(-1/2). The gradient includes the dependence of V
/// on Π. Throws DegenerateGraphError if any node has zero degree.
NcutValue ncut_loss(const AffinityGraph& g, const rate::Membership& m, double gamma);

/// Normalized-cut spectral clustering: the k eigenvectors of
/// I - D^-½ A D^-½ with smallest eigenvalues, rows scaled to unit length,
/// then k-means (k-means++ seeding, 20 restarts, lowest inertia).
std::vector<int> spectral_oracle(const AffinityGraph& g, std::size_t k, std::uint64_t kmeans_seed);

}  // namespace cgmcr::graph
