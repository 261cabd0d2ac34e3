#include "cgmcr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "cgmcr/coding_rate.hpp"
#include "cgmcr/errors.hpp"
#include "json.hpp"

namespace cgmcr::train {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(wd >= 0.0) || !std::isfinite(wd)) throw ConfigError("wd must be non-negative");
  if (d == 0) throw ConfigError("d must be positive");
  if (warmup_epochs + finetune_epochs == 0) throw ConfigError("T1 + T2 must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be non-negative");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive");
  if (s == 0) throw ConfigError("s must be positive");
  if (s > batch_size) throw ConfigError("s must not exceed batch_size");
  if (affinity == graph::AffinityMode::gaussian && (!sigma || !(*sigma > 0.0))) {
    throw ConfigError("gaussian affinity needs sigma > 0");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (k < 2) throw ConfigError("k must be at least 2");
  if (hidden == 0) throw ConfigError("hidden must be positive");
}

graph::AffinityOptions TrainConfig::affinity_options() const {
  graph::AffinityOptions o;
  o.s = s;
  o.mode = affinity;
  o.sigma = sigma;
  o.include_self = self_loops;
  return o;
}

namespace {

constexpr std::size_t kEvalChunk = 1024;

Mat gather_rows(const Mat& x, std::span<const std::size_t> index) {
  Mat out(index.size(), x.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    auto src = x.row(index[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> row_argmax(const Mat& pi) {
  std::vector<int> labels(pi.rows());
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    auto r = pi.row(i);
    labels[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return labels;
}

nn::Architecture architecture_for(const TrainConfig& cfg, std::size_t input_dim) {
  nn::Architecture a;
  a.input_dim = input_dim;
  a.hidden = cfg.hidden;
  a.embed_dim = cfg.d;
  a.clusters = cfg.k;
  a.head_depth = cfg.head_depth;
  a.tau = cfg.tau;
  return a;
}

}  // namespace

Evaluation evaluate(const nn::Model& model, const io::FeatureMatrix& data, const EvalOptions& opts) {
  const std::size_t n = data.n_points();
  const std::size_t d = model.arch().embed_dim;
  const std::size_t k = opts.k ? opts.k : model.arch().clusters;
  Mat z(d, n);
  Mat pi(n, model.arch().clusters);
  std::vector<std::size_t> index;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t stop = std::min(n, start + kEvalChunk);
    index.resize(stop - start);
    std::iota(index.begin(), index.end(), start);
    const auto fwd = model.forward(gather_rows(data.features, index));
    for (std::size_t i = start; i < stop; ++i) {
      for (std::size_t a = 0; a < d; ++a) z(a, i) = fwd.z(a, i - start);
      auto src = fwd.pi.row(i - start);
      std::copy(src.begin(), src.end(), pi.row(i).begin());
    }
  }

  Evaluation ev;
  ev.labels_ch = row_argmax(pi);
  if (opts.spectral && n <= opts.spectral_max_points) {
    graph::AffinityOptions aff = opts.affinity;
    aff.s = std::min(aff.s, n);
    const auto g = graph::build_affinity(rate::EmbeddingBatch{z, 0.5}, aff);
    ev.labels_sc = graph::spectral_oracle(g, k, opts.seed);
  }
  if (data.labels) {
    const auto& truth = *data.labels;
    ev.acc_ch = metrics::clustering_accuracy(ev.labels_ch, truth);
    ev.nmi_ch = metrics::nmi(ev.labels_ch, truth, opts.nmi_norm);
    if (ev.labels_sc) {
      ev.acc_sc = metrics::clustering_accuracy(*ev.labels_sc, truth);
      ev.nmi_sc = metrics::nmi(*ev.labels_sc, truth, opts.nmi_norm);
    }
  }
  return ev;
}

StepGradients compute_step(nn::Model& model, const Mat& batch, const TrainConfig& cfg, bool finetune) {
  const auto fwd = model.forward(batch, nn::Mode::train);
  const rate::EmbeddingBatch zb{fwd.z, cfg.eps};
  const rate::Membership m{fwd.pi};

  // The graph is built from the values of Z only; no gradient flows through it.
  const auto g = graph::build_affinity(zb, cfg.affinity_options());
  const auto cut = graph::ncut_loss(g, m, cfg.gamma);
  const auto r = rate::rate_R(zb);
  const auto rc = rate::rate_Rc(zb, m);

  Mat grad_z = r.grad_z * -1.0;
  Mat grad_pi = cut.grad_pi;
  if (finetune) {
    grad_z += rc.grad_z;
    grad_pi += rc.grad_pi;
  }

  StepGradients out;
  out.params = model.backward(fwd.cache, grad_z, grad_pi);
  out.rate = r.value;
  out.rate_c = rc.value;
  out.ncut = cut.value;
  return out;
}

ParamGrads ncut_only_gradients(nn::Model& model, const Mat& batch, const TrainConfig& cfg) {
  const auto fwd = model.forward(batch, nn::Mode::train);
  const rate::EmbeddingBatch zb{fwd.z, cfg.eps};
  const auto g = graph::build_affinity(zb, cfg.affinity_options());
  const auto cut = graph::ncut_loss(g, rate::Membership{fwd.pi}, cfg.gamma);
  return model.backward(fwd.cache, Mat(fwd.z.rows(), fwd.z.cols()), cut.grad_pi);
}

TrainResult train(const TrainConfig& cfg, const io::FeatureMatrix& data, const io::FeatureMatrix* eval_data,
                  std::ostream* progress) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.n_points();
  if (n < cfg.batch_size) {
    throw ConfigError("batch_size " + std::to_string(cfg.batch_size) + " exceeds the " + std::to_string(n) +
                      " training points");
  }
  const io::FeatureMatrix& held_out = eval_data ? *eval_data : data;

  TrainResult result{nn::Model(architecture_for(cfg, data.dim()), cfg.seed), {}};
  nn::Model& model = result.model;
  TrainLog& log = result.log;

  optim::AdamOptions aopts;
  aopts.lr = cfg.lr;
  aopts.weight_decay = cfg.wd;
  aopts.decay_mode = cfg.decay_mode;
  optim::Adam adam(aopts);

  const std::size_t ipe = n / cfg.batch_size;
  const std::size_t epochs = cfg.warmup_epochs + cfg.finetune_epochs;
  const std::size_t total = ipe * epochs;
  log.iters_per_epoch = ipe;

  EvalOptions eopts;
  eopts.affinity = cfg.affinity_options();
  eopts.k = cfg.k;
  eopts.seed = cfg.seed;
  eopts.spectral_max_points = cfg.spectral_max_points;
  eopts.nmi_norm = cfg.nmi_norm;
  const bool can_eval = held_out.labels.has_value();

  std::seed_seq shuffle_seed{cfg.seed, std::uint64_t{0x5eed}};
  std::mt19937_64 shuffle_rng(shuffle_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const bool finetune = epoch >= cfg.warmup_epochs;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t b = 0; b < ipe; ++b) {
      const std::uint64_t t = epoch * ipe + b;
      const double lr = optim::lr_schedule(t, cfg.warmup_epochs, cfg.finetune_epochs, ipe, cfg.lr);
      const Mat batch = gather_rows(data.features,
                                    std::span<const std::size_t>(order).subspan(b * cfg.batch_size, cfg.batch_size));
      StepGradients step;
      try {
        step = compute_step(model, batch, cfg, finetune);
      } catch (const DegenerateGraphError& e) {
        ++log.skipped_batches;
        log.warnings.push_back("iteration " + std::to_string(t) + ": batch skipped: " + e.what());
        if (progress) *progress << "warning: " << log.warnings.back() << '\n';
        if (static_cast<double>(log.skipped_batches) > 0.01 * static_cast<double>(total)) {
          throw NumericalError("training aborted: " + std::to_string(log.skipped_batches) +
                               " degenerate batches exceed 1% of " + std::to_string(total));
        }
        continue;
      }
      adam.set_lr(lr);
      try {
        adam.step(model.parameters(), step.params);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (iteration " + std::to_string(t) + ")");
      }
      log.iters.push_back(IterRecord{t, step.rate, step.rate_c, step.ncut, lr});
    }

    const bool last = epoch + 1 == epochs;
    const bool due = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0;
    if (can_eval && (due || last)) {
      const auto ev = evaluate(model, held_out, eopts);
      EvalRecord rec;
      rec.epoch = epoch + 1;
      rec.acc_ch = *ev.acc_ch;
      rec.nmi_ch = *ev.nmi_ch;
      rec.acc_sc = ev.acc_sc;
      rec.nmi_sc = ev.nmi_sc;
      log.evals.push_back(rec);
      if (progress) {
        *progress << "epoch " << rec.epoch << ": acc_ch " << rec.acc_ch << " nmi_ch " << rec.nmi_ch;
        if (rec.acc_sc) *progress << " acc_sc " << *rec.acc_sc << " nmi_sc " << *rec.nmi_sc;
        *progress << '\n';
      }
    } else if (progress && !log.iters.empty()) {
      const auto& it = log.iters.back();
      *progress << "epoch " << epoch + 1 << ": R " << it.rate << " Rc " << it.rate_c << " ncut " << it.ncut << '\n';
    }
  }
  return result;
}

void save_log(const TrainLog& log, std::ostream& out) {
  json j;
  j["iters_per_epoch"] = log.iters_per_epoch;
  j["skipped_batches"] = log.skipped_batches;
  j["warnings"] = log.warnings;
  json iters = json::array();
  for (const auto& it : log.iters) {
    iters.push_back({{"iter", it.iter}, {"R", it.rate}, {"Rc", it.rate_c}, {"ncut", it.ncut}, {"lr", it.lr}});
  }
  j["iters"] = std::move(iters);
  json evals = json::array();
  for (const auto& ev : log.evals) {
    json e = {{"epoch", ev.epoch}, {"acc_ch", ev.acc_ch}, {"nmi_ch", ev.nmi_ch}};
    e["acc_sc"] = ev.acc_sc ? json(*ev.acc_sc) : json(nullptr);
    e["nmi_sc"] = ev.nmi_sc ? json(*ev.nmi_sc) : json(nullptr);
    evals.push_back(std::move(e));
  }
  j["evals"] = std::move(evals);
  out << j.dump(1) << '\n';
}

TrainLog load_log(std::istream& in) {
  TrainLog log;
  try {
    const json j = json::parse(in);
    log.iters_per_epoch = j.at("iters_per_epoch").get<std::size_t>();
    log.skipped_batches = j.at("skipped_batches").get<std::size_t>();
    log.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& it : j.at("iters")) {
      log.iters.push_back(IterRecord{it.at("iter").get<std::uint64_t>(), it.at("R").get<double>(),
                                     it.at("Rc").get<double>(), it.at("ncut").get<double>(),
                                     it.at("lr").get<double>()});
    }
    for (const auto& e : j.at("evals")) {
      EvalRecord rec;
      rec.epoch = e.at("epoch").get<std::size_t>();
      rec.acc_ch = e.at("acc_ch").get<double>();
      rec.nmi_ch = e.at("nmi_ch").get<double>();
      if (!e.at("acc_sc").is_null()) rec.acc_sc = e.at("acc_sc").get<double>();
      if (!e.at("nmi_sc").is_null()) rec.nmi_sc = e.at("nmi_sc").get<double>();
      log.evals.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("training log: ") + e.what());
  }
  return log;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_iter_csv(const TrainLog& log, std::ostream& out) {
  out << "iter,R,Rc,ncut,lr\n";
  for (const auto& it : log.iters) {
    out << it.iter << ',' << num(it.rate) << ',' << num(it.rate_c) << ',' << num(it.ncut) << ',' << num(it.lr)
        << '\n';
  }
}

void write_eval_csv(const TrainLog& log, std::ostream& out) {
  out << "epoch,acc_ch,nmi_ch,acc_sc,nmi_sc\n";
  for (const auto& ev : log.evals) {
    out << ev.epoch << ',' << num(ev.acc_ch) << ',' << num(ev.nmi_ch) << ','
        << (ev.acc_sc ? num(*ev.acc_sc) : "") << ',' << (ev.nmi_sc ? num(*ev.nmi_sc) : "") << '\n';
  }
}

}  // namespace cgmcr::train
