#pragma once

// Feature files and synthetic datasets.
//
// cgf binary layout (little-endian):
//   "CGF1" | u32 N | u32 D | u8 has_labels | f32 features[N*D] row-major
//          | i32 labels[N] (only when has_labels = 1)
//
// csv layout: a header row, then one point per line; if the last header
// column is named `label` that column holds integer labels.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cgmcr/tensor.hpp"

namespace cgmcr::io {

enum class Split { train, test, all };

struct FeatureMatrix {
  Mat features;  // N×D
  std::optional<std::vector<int>> labels;
  Split split = Split::all;

  std::size_t n_points() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  /// Number of distinct classes (max label + 1), or 0 without labels.
  std::size_t label_count() const;

  /// Throws FormatError on non-finite entries or mislabeled lengths.
  void validate() const;

  /// Rows selected by `index`, in that order.
  FeatureMatrix subset(std::span<const std::size_t> index) const;
};

enum class FeatureFormat { cgf, csv };

/// `.csv` → csv, everything else → cgf.
FeatureFormat format_for(const std::filesystem::path& path);

FeatureMatrix read_cgf(std::istream& in);
void write_cgf(const FeatureMatrix& data, std::ostream& out);
FeatureMatrix read_csv(std::istream& in);
void write_csv(const FeatureMatrix& data, std::ostream& out);

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format);
void save_features(const FeatureMatrix& data, const std::filesystem::path& path, FeatureFormat format);

enum class SyntheticKind { orthogonal_subspaces, gaussian_blobs };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::orthogonal_subspaces;
  std::size_t clusters = 4;
  std::size_t ambient_dim = 50;
  std::size_t subspace_dim = 3;  // orthogonal_subspaces
  double blob_sigma = 0.1;       // gaussian_blobs
  std::size_t points_per_cluster = 200;
  double noise = 0.05;           // orthogonal_subspaces
  std::uint64_t seed = 0;

  void validate() const;
};

/// orthogonal_subspaces: k mutually orthogonal r-dim subspaces from the QR
/// of a seeded Gaussian matrix; unit points in each, isotropic noise, then
/// re-normalized. gaussian_blobs: k means along orthonormal directions with
/// pairwise distance 8σ, isotropic σ samples. Points are grouped by cluster.
FeatureMatrix gen_synthetic(const SyntheticSpec& spec);

}  // namespace cgmcr::io
