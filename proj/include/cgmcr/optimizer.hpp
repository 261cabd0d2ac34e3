#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgmcr/params.hpp"

namespace cgmcr::optim {

enum class WeightDecayMode {
  decoupled,  // p -= lr * wd * p after the Adam update
  l2,         // g += wd * p before the moment updates
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  WeightDecayMode decay_mode = WeightDecayMode::decoupled;
};

class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  std::uint64_t step_count() const { return step_; }
  const AdamOptions& options() const { return opts_; }

  /// First and second moment buffers, one per parameter tensor.
  const std::vector<std::vector<double>>& first_moments() const { return m1_; }
  const std::vector<std::vector<double>>& second_moments() const { return m2_; }

  /// One bias-corrected update. Throws NumericalError naming the tensor and
  /// step if a gradient is not finite; parameters are untouched in that case.
  void step(std::span<const ParamView> params, const ParamGrads& grads);

 private:
  AdamOptions opts_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m1_;
  std::vector<std::vector<double>> m2_;
};

/// Constant lr0 for the first warmup_epochs * iters_per_epoch iterations,
/// then lr0 * (1 + cos(pi p)) / 2 with p the fine-tune progress in [0, 1].
/// `t` is the zero-based iteration index.
double lr_schedule(std::uint64_t t, std::uint64_t warmup_epochs, std::uint64_t finetune_epochs,
                   std::uint64_t iters_per_epoch, double lr0);

}  // namespace cgmcr::optim
