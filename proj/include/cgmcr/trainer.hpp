#pragma once

// Two-stage training loop: a warm-up stage on -R + L_ncut, where the feature
// head sees only -R and the cluster head only L_ncut, then fine-tuning on
// -R + R_c + L_ncut. The per-batch affinity is built from detached embeddings.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cgmcr/data_io.hpp"
#include "cgmcr/graph_cut.hpp"
#include "cgmcr/metrics.hpp"
#include "cgmcr/network.hpp"
#include "cgmcr/optimizer.hpp"

namespace cgmcr::train {

struct TrainConfig {
  double lr = 1e-4;
  double wd = 5e-4;
  std::size_t d = 128;
  std::size_t warmup_epochs = 10;    // T1
  std::size_t finetune_epochs = 10;  // T2
  std::size_t batch_size = 512;
  double gamma = 70.0;
  double eps = 0.5;
  std::size_t s = 10;
  graph::AffinityMode affinity = graph::AffinityMode::cosine;
  std::optional<double> sigma;
  bool self_loops = true;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;  // epochs; 0 disables periodic evaluation
  std::size_t k = 0;
  std::size_t hidden = 4096;
  std::size_t head_depth = 1;
  optim::WeightDecayMode decay_mode = optim::WeightDecayMode::decoupled;
  metrics::NmiNormalization nmi_norm = metrics::NmiNormalization::geometric;
  /// Spectral clustering on the embeddings is skipped above this many points.
  std::size_t spectral_max_points = 5000;

  void validate() const;
  graph::AffinityOptions affinity_options() const;
};

struct IterRecord {
  std::uint64_t iter = 0;
  double rate = 0.0;        // R
  double rate_c = 0.0;      // R_c
  double ncut = 0.0;
  double lr = 0.0;
};

struct EvalRecord {
  std::size_t epoch = 0;
  double acc_ch = 0.0;
  double nmi_ch = 0.0;
  std::optional<double> acc_sc;
  std::optional<double> nmi_sc;
};

struct TrainLog {
  std::vector<IterRecord> iters;
  std::vector<EvalRecord> evals;
  std::size_t iters_per_epoch = 0;
  std::size_t skipped_batches = 0;
  std::vector<std::string> warnings;
};

struct Evaluation {
  std::vector<int> labels_ch;               // argmax of Π
  std::optional<std::vector<int>> labels_sc;  // spectral clustering on Z
  std::optional<double> acc_ch, nmi_ch, acc_sc, nmi_sc;
};

struct EvalOptions {
  graph::AffinityOptions affinity;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool spectral = true;
  std::size_t spectral_max_points = 5000;
  metrics::NmiNormalization nmi_norm = metrics::NmiNormalization::geometric;
};

/// Eval-mode forward over all points; spectral clustering uses the same
/// top-s affinity as training. Metrics are filled in only when labels exist.
Evaluation evaluate(const nn::Model& model, const io::FeatureMatrix& data, const EvalOptions& opts);

struct TrainResult {
  nn::Model model;
  TrainLog log;
};

/// Gradients of one training step, exposed for inspection.
struct StepGradients {
  ParamGrads params;
  double rate = 0.0;
  double rate_c = 0.0;
  double ncut = 0.0;
};

/// Forward, objective and backward on one batch without updating anything
/// but batch-norm running statistics and the noise stream. Throws
/// DegenerateGraphError if the batch affinity has an isolated node.
StepGradients compute_step(nn::Model& model, const Mat& batch, const TrainConfig& cfg, bool finetune);

/// Gradient of only the L_ncut term with respect to all parameters.
ParamGrads ncut_only_gradients(nn::Model& model, const Mat& batch, const TrainConfig& cfg);

/// Runs warm-up then fine-tuning. `eval_data` defaults to `data`.
TrainResult train(const TrainConfig& cfg, const io::FeatureMatrix& data,
                  const io::FeatureMatrix* eval_data = nullptr, std::ostream* progress = nullptr);

/// JSON round-trip of a log (the format written by `cgmcr train`).
void save_log(const TrainLog& log, std::ostream& out);
TrainLog load_log(std::istream& in);

/// CSV views of a log.
void write_iter_csv(const TrainLog& log, std::ostream& out);
void write_eval_csv(const TrainLog& log, std::ostream& out);

}  // namespace cgmcr::train
