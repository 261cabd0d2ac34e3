#include "cgmcr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr::optim {

void Adam::step(std::span<const ParamView> params, const ParamGrads& grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter/gradient count mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].values.size() != grads[p].size()) {
      throw DimensionError("Adam: gradient shape mismatch for " + params[p].name);
    }
    for (double g : grads[p]) {
      if (!std::isfinite(g)) {
        throw NumericalError("Adam: non-finite gradient in " + params[p].name + " at step " +
                             std::to_string(step_ + 1));
      }
    }
  }
  if (m1_.empty()) {
    for (const auto& p : params) {
      m1_.emplace_back(p.values.size(), 0.0);
      m2_.emplace_back(p.values.size(), 0.0);
    }
  } else if (m1_.size() != params.size()) {
    throw DimensionError("Adam: parameter set changed between steps");
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(opts_.beta1, t);
  const double bc2 = 1.0 - std::pow(opts_.beta2, t);
  const bool coupled = opts_.decay_mode == WeightDecayMode::l2;

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].values;
    const auto& g = grads[p];
    auto& m1 = m1_[p];
    auto& m2 = m2_[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double gi = coupled ? g[i] + opts_.weight_decay * values[i] : g[i];
      m1[i] = opts_.beta1 * m1[i] + (1.0 - opts_.beta1) * gi;
      m2[i] = opts_.beta2 * m2[i] + (1.0 - opts_.beta2) * gi * gi;
      const double mhat = m1[i] / bc1;
      const double vhat = m2[i] / bc2;
      values[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
      if (!coupled) values[i] -= opts_.lr * opts_.weight_decay * values[i];
    }
  }
}

double lr_schedule(std::uint64_t t, std::uint64_t warmup_epochs, std::uint64_t finetune_epochs,
                   std::uint64_t iters_per_epoch, double lr0) {
  const std::uint64_t warm = warmup_epochs * iters_per_epoch;
  const std::uint64_t fine = finetune_epochs * iters_per_epoch;
  if (t < warm || fine == 0) return lr0;
  const double p = std::min(1.0, static_cast<double>(t - warm) / static_cast<double>(fine));
  return lr0 * (1.0 + std::cos(std::numbers::pi * p)) / 2.0;
}

}  // namespace cgmcr::optim
