#pragma once

// The trainable part of the model: a shared pre-feature layer feeding a
// feature head (unit-norm embeddings) and a cluster head (Gumbel-Softmax
// memberships). Forward and backward passes are written out by hand.
//
//   pre-feature:  Linear(D→H), BatchNorm(H), ReLU
//   feature head: [Linear(H→H), ReLU] × depth, Linear(H→d), L2Normalize
//   cluster head: [Linear(H→H), ReLU] × depth, Linear(H→k), GumbelSoftmax(τ)

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cgmcr/params.hpp"
#include "cgmcr/tensor.hpp"

namespace cgmcr::nn {

using Rng = std::mt19937_64;

enum class Mode { train, eval };

struct Linear {
  Mat weight;  // out×in
  std::vector<double> bias;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

struct BatchNorm {
  std::vector<double> scale;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNorm(std::size_t features = 0)
      : scale(features, 1.0), shift(features, 0.0), running_mean(features, 0.0),
        running_var(features, 1.0) {}
  std::size_t features() const { return scale.size(); }
};

struct Relu {};
struct L2Normalize {};
struct GumbelSoftmax {
  double tau = 1.0;
};

using Layer = std::variant<Linear, BatchNorm, Relu, L2Normalize, GumbelSoftmax>;

/// Tags used in checkpoints.
enum class LayerKind : std::uint32_t {
  linear = 1,
  batchnorm = 2,
  relu = 3,
  l2norm = 4,
  gumbel_softmax = 5,
};

LayerKind kind_of(const Layer& layer);

struct LayerCache {
  Mat input;                       // Linear
  Mat output;                      // ReLU, L2Normalize, GumbelSoftmax
  Mat normalized;                  // BatchNorm x̂
  std::vector<double> stat;        // BatchNorm 1/sqrt(var+eps), L2Normalize row norms
  std::vector<double> batch_mean;  // BatchNorm in train mode
  std::vector<double> batch_var;   // biased batch variance
  bool batch_stats = false;
  double tau = 1.0;
};

/// Row-wise softmax(logits / tau).
Mat softmax(const Mat& logits, double tau);

/// Row-wise softmax((logits + G) / tau) with G_ij = -log(-log(u_ij)) and
/// u_ij uniform on (0,1), clamped to [1e-12, 1 - 1e-12].
Mat gumbel_softmax(const Mat& logits, double tau, Rng& rng);

/// Samples the Gumbel noise used by gumbel_softmax.
Mat sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng);

/// A stack of layers applied to row-major batches (one sample per row).
class Block {
 public:
  Block() = default;
  explicit Block(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// `noise_rng` is only consulted by GumbelSoftmax in train mode.
  Mat forward(const Mat& x, Mode mode, Rng* noise_rng, std::vector<LayerCache>& caches) const;

  /// Writes one gradient buffer per parameter tensor into `grads` (in
  /// parameter order) and returns the gradient with respect to the input.
  Mat backward(const std::vector<LayerCache>& caches, Mat grad,
               std::span<std::vector<double>> grads) const;

  /// Folds train-mode batch statistics into BatchNorm running estimates.
  void update_running_stats(const std::vector<LayerCache>& caches);

  void collect_params(const std::string& prefix, std::vector<ParamView>& out);
  void collect_names(const std::string& prefix, std::vector<std::string>& out) const;
  std::size_t param_tensor_count() const;

 private:
  std::vector<Layer> layers_;
};

struct Architecture {
  std::size_t input_dim = 0;
  std::size_t hidden = 4096;
  std::size_t embed_dim = 128;
  std::size_t clusters = 10;
  std::size_t head_depth = 1;  // hidden Linear+ReLU pairs per head
  double tau = 1.0;

  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ForwardCache {
  std::uint64_t version = 0;
  std::size_t batch = 0;
  std::vector<LayerCache> pre;
  std::vector<LayerCache> feature;
  std::vector<LayerCache> cluster;
};

struct ForwardResult {
  Mat z;   // d×n, unit-norm columns
  Mat pi;  // n×k, rows on the simplex
  ForwardCache cache;
};

class Model {
 public:
  /// Kaiming-uniform initialization (bound sqrt(6 / fan_in), zero bias).
  Model(const Architecture& arch, std::uint64_t seed);

  /// Layers with the right shapes but zero parameters; used by checkpoint loading.
  static Model uninitialized(const Architecture& arch);

  const Architecture& arch() const { return arch_; }

  /// Train mode: batch statistics, Gumbel noise from the model's own stream,
  /// running statistics updated. Eval mode: running statistics, plain softmax.
  ForwardResult forward(const Mat& x, Mode mode);
  /// Eval-mode forward.
  ForwardResult forward(const Mat& x) const;

  /// Reverse pass. grad_z is d×n (matching ForwardResult::z), grad_pi n×k.
  /// Throws ContractError if parameters changed since the forward pass.
  ParamGrads backward(const ForwardCache& cache, const Mat& grad_z, const Mat& grad_pi) const;

  /// Views of all trainable tensors in declaration order. Invalidates caches
  /// from earlier forward passes, since callers may write through the views.
  std::vector<ParamView> parameters();
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_tensor_count() const;

  Block& pre_feature() { return pre_; }
  Block& feature_head() { return feature_; }
  Block& cluster_head() { return cluster_; }
  const Block& pre_feature() const { return pre_; }
  const Block& feature_head() const { return feature_; }
  const Block& cluster_head() const { return cluster_; }

  Rng& noise_rng() { return noise_rng_; }
  const Rng& noise_rng() const { return noise_rng_; }

  std::uint64_t version() const { return version_; }

 private:
  explicit Model(const Architecture& arch);
  ForwardResult run(const Mat& x, Mode mode, Rng* rng) const;

  Architecture arch_;
  Block pre_;
  Block feature_;
  Block cluster_;
  Rng noise_rng_;
  std::uint64_t version_ = 0;
};

}  // namespace cgmcr::nn
