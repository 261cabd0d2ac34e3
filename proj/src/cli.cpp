#include "cgmcr/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "cgmcr/checkpoint.hpp"
#include "cgmcr/config.hpp"
#include "cgmcr/data_io.hpp"
#include "cgmcr/errors.hpp"
#include "cgmcr/trainer.hpp"
#include "json.hpp"

namespace cgmcr {

namespace {

using nlohmann::json;

struct GraphFlags {
  std::size_t s = 10;
  std::string affinity = "cosine";
  std::optional<double> sigma;
  bool no_self_loops = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--s", s, "neighbors kept per row")->check(CLI::PositiveNumber);
    cmd->add_option("--affinity", affinity, "cosine or gaussian")
        ->check(CLI::IsMember({"cosine", "gaussian"}));
    cmd->add_option("--sigma", sigma, "gaussian kernel width");
    cmd->add_flag("--no-self-loops", no_self_loops, "drop the diagonal before top-s selection");
  }

  graph::AffinityOptions options() const {
    graph::AffinityOptions o;
    o.s = s;
    o.mode = affinity == "gaussian" ? graph::AffinityMode::gaussian : graph::AffinityMode::cosine;
    o.sigma = sigma;
    o.include_self = !no_self_loops;
    return o;
  }
};

std::vector<std::size_t> histogram(const std::vector<int>& labels, std::size_t k) {
  std::size_t size = k;
  for (int l : labels) size = std::max(size, static_cast<std::size_t>(l) + 1);
  std::vector<std::size_t> h(size, 0);
  for (int l : labels) ++h[static_cast<std::size_t>(l)];
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open " + path + " for writing");
  return f;
}

Mat embed_all(const nn::Model& model, const Mat& x) {
  return model.forward(x).z;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-cut-guided maximal coding rate reduction clustering", "cgmcr"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write a synthetic dataset");
  io::SyntheticSpec spec;
  std::string gen_kind = "subspaces";
  std::string gen_out;
  gen->add_option("--out", gen_out, "output file (.cgf or .csv)")->required();
  gen->add_option("--kind", gen_kind, "subspaces or blobs")->check(CLI::IsMember({"subspaces", "blobs"}));
  gen->add_option("--k", spec.clusters, "clusters");
  gen->add_option("--dim", spec.ambient_dim, "ambient dimension D");
  gen->add_option("--r", spec.subspace_dim, "subspace dimension");
  gen->add_option("--sigma", spec.blob_sigma, "blob standard deviation");
  gen->add_option("--per-cluster", spec.points_per_cluster, "points per cluster");
  gen->add_option("--noise", spec.noise, "noise level for subspaces");
  gen->add_option("--seed", spec.seed, "random seed");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_config, tr_features, tr_eval, tr_checkpoint, tr_log;
  bool tr_quiet = false;
  tr->add_option("--config", tr_config, "key = value config file")->required();
  tr->add_option("--features", tr_features, "training features")->required();
  tr->add_option("--eval-features", tr_eval, "labelled features used for periodic evaluation");
  tr->add_option("--checkpoint", tr_checkpoint, "checkpoint output path")->required();
  tr->add_option("--log", tr_log, "training log output (JSON)");
  tr->add_flag("--quiet", tr_quiet, "no progress on stderr");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint, metrics JSON on stdout");
  std::string ev_checkpoint, ev_features, ev_nmi = "sqrt";
  std::uint64_t ev_seed = 0;
  std::size_t ev_max_points = 5000;
  bool ev_no_spectral = false;
  GraphFlags ev_graph;
  ev->add_option("--checkpoint", ev_checkpoint)->required();
  ev->add_option("--features", ev_features)->required();
  ev->add_option("--seed", ev_seed, "k-means seed for spectral clustering");
  ev->add_option("--nmi-norm", ev_nmi)->check(CLI::IsMember({"sqrt", "arithmetic", "min", "max"}));
  ev->add_option("--spectral-max-points", ev_max_points);
  ev->add_flag("--no-spectral", ev_no_spectral);
  ev_graph.attach(ev);

  // dump-affinity
  auto* da = app.add_subcommand("dump-affinity", "write the top-s affinity of the embeddings as 'i j w' lines");
  std::string da_checkpoint, da_features, da_out;
  GraphFlags da_graph;
  da->add_option("--checkpoint", da_checkpoint)->required();
  da->add_option("--features", da_features)->required();
  da->add_option("--out", da_out)->required();
  da_graph.attach(da);

  // dump-curves
  auto* dc = app.add_subcommand("dump-curves", "convert a training log to CSV");
  std::string dc_log, dc_iters, dc_evals;
  dc->add_option("--log", dc_log)->required();
  dc->add_option("--iters", dc_iters, "per-iteration CSV output");
  dc->add_option("--evals", dc_evals, "per-evaluation CSV output");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      spec.kind = gen_kind == "blobs" ? io::SyntheticKind::gaussian_blobs : io::SyntheticKind::orthogonal_subspaces;
      const auto data = io::gen_synthetic(spec);
      io::save_features(data, gen_out, io::format_for(gen_out));
      return kExitOk;
    }

    if (tr->parsed()) {
      const auto cfg = load_train_config(tr_config);
      const auto data = io::load_features(tr_features, io::format_for(tr_features));
      std::optional<io::FeatureMatrix> held_out;
      if (!tr_eval.empty()) held_out = io::load_features(tr_eval, io::format_for(tr_eval));
      const auto result = train::train(cfg, data, held_out ? &*held_out : nullptr, tr_quiet ? nullptr : &err);
      save_checkpoint(result.model, std::filesystem::path(tr_checkpoint));
      if (!tr_log.empty()) {
        auto f = open_out(tr_log);
        train::save_log(result.log, f);
      }
      for (const auto& w : result.log.warnings) err << "warning: " << w << '\n';
      return kExitOk;
    }

    if (ev->parsed()) {
      const auto model = load_checkpoint(std::filesystem::path(ev_checkpoint));
      const auto data = io::load_features(ev_features, io::format_for(ev_features));
      train::EvalOptions opts;
      opts.affinity = ev_graph.options();
      opts.k = model.arch().clusters;
      opts.seed = ev_seed;
      opts.spectral = !ev_no_spectral;
      opts.spectral_max_points = ev_max_points;
      opts.nmi_norm = ev_nmi == "arithmetic" ? metrics::NmiNormalization::arithmetic
                      : ev_nmi == "min"      ? metrics::NmiNormalization::min
                      : ev_nmi == "max"      ? metrics::NmiNormalization::max
                                             : metrics::NmiNormalization::geometric;
      const auto result = train::evaluate(model, data, opts);
      json j;
      j["n"] = data.n_points();
      j["k"] = opts.k;
      if (data.labels) {
        const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        j["acc_ch"] = opt(result.acc_ch);
        j["nmi_ch"] = opt(result.nmi_ch);
        j["acc_sc"] = opt(result.acc_sc);
        j["nmi_sc"] = opt(result.nmi_sc);
      } else {
        j["histogram_ch"] = histogram(result.labels_ch, opts.k);
        if (result.labels_sc) j["histogram_sc"] = histogram(*result.labels_sc, opts.k);
      }
      out << j.dump(2) << '\n';
      return kExitOk;
    }

    if (da->parsed()) {
      const auto model = load_checkpoint(std::filesystem::path(da_checkpoint));
      const auto data = io::load_features(da_features, io::format_for(da_features));
      auto aff = da_graph.options();
      const auto g = graph::build_affinity(rate::EmbeddingBatch{embed_all(model, data.features), 0.5}, aff);
      auto f = open_out(da_out);
      char buf[64];
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (const auto& e : g.row(i)) {
          std::snprintf(buf, sizeof(buf), " %.17g\n", e.weight);
          f << i << ' ' << e.col << buf;
        }
      }
      if (!f) throw FormatError("write failed: " + da_out);
      return kExitOk;
    }

    if (dc->parsed()) {
      if (dc_iters.empty() && dc_evals.empty()) throw ConfigError("dump-curves: give --iters and/or --evals");
      std::ifstream in(dc_log);
      if (!in) throw FormatError("cannot open log " + dc_log);
      const auto log = train::load_log(in);
      if (!dc_iters.empty()) {
        auto f = open_out(dc_iters);
        train::write_iter_csv(log, f);
      }
      if (!dc_evals.empty()) {
        auto f = open_out(dc_evals);
        train::write_eval_csv(log, f);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cgmcr
