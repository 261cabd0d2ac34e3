#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cgmcr/checkpoint.hpp"
#include "cgmcr/errors.hpp"
#include "cgmcr/trainer.hpp"
#include "oracles.hpp"

using namespace cgmcr;
using namespace cgmcr::train;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.k = 3;
  c.d = 8;
  c.hidden = 16;
  c.batch_size = 30;
  c.s = 5;
  c.warmup_epochs = 2;
  c.finetune_epochs = 2;
  c.lr = 1e-3;
  c.seed = 42;
  return c;
}

io::FeatureMatrix small_data() {
  io::SyntheticSpec spec;
  spec.clusters = 3;
  spec.ambient_dim = 12;
  spec.subspace_dim = 2;
  spec.points_per_cluster = 25;
  spec.seed = 3;
  return io::gen_synthetic(spec);
}

std::string log_text(const TrainLog& log) {
  std::ostringstream out;
  save_log(log, out);
  return out.str();
}

std::string checkpoint_bytes(const nn::Model& m) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(m, out);
  return out.str();
}

}  // namespace

TEST(Trainer, IdenticalSeedsGiveIdenticalRuns) {
  const auto data = small_data();
  const auto a = train::train(small_config(), data);
  const auto b = train::train(small_config(), data);
  EXPECT_EQ(log_text(a.log), log_text(b.log));
  EXPECT_EQ(checkpoint_bytes(a.model), checkpoint_bytes(b.model));
  auto other = small_config();
  other.seed = 43;
  EXPECT_NE(log_text(train::train(other, data).log), log_text(a.log));
}

TEST(Trainer, LogShape) {
  const auto data = small_data();
  const auto r = train::train(small_config(), data);
  EXPECT_EQ(r.log.iters_per_epoch, 2u);  // 75 points, batches of 30, last short batch dropped
  ASSERT_EQ(r.log.iters.size(), 8u);
  for (std::size_t i = 0; i < r.log.iters.size(); ++i) EXPECT_EQ(r.log.iters[i].iter, i);
  EXPECT_EQ(r.log.iters[3].lr, 1e-3);
  EXPECT_LT(r.log.iters[7].lr, 1e-3);
  ASSERT_EQ(r.log.evals.size(), 4u);
  EXPECT_EQ(r.log.evals.back().epoch, 4u);
  EXPECT_TRUE(r.log.evals.back().acc_sc.has_value());
}

TEST(Trainer, WarmupIncreasesR) {
  std::mt19937_64 rng(9);
  io::FeatureMatrix data;
  data.features = oracle::random_matrix(512, 20, rng);
  TrainConfig c;
  c.k = 4;
  c.d = 16;
  c.hidden = 64;
  c.batch_size = 32;
  c.s = 5;
  c.gamma = 0.0;
  c.warmup_epochs = 1;
  c.finetune_epochs = 0;
  c.lr = 1e-3;
  const auto r = train::train(c, data);
  const auto& it = r.log.iters;
  ASSERT_EQ(it.size(), 16u);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    first += it[i].rate;
    last += it[it.size() - 1 - i].rate;
  }
  EXPECT_GT(last, first);
  EXPECT_GT(it.back().rate, it.front().rate);
}

TEST(Trainer, NcutGivesNoFeatureHeadGradient) {
  const auto data = small_data();
  nn::Architecture a;
  a.input_dim = data.dim();
  a.hidden = 16;
  a.embed_dim = 8;
  a.clusters = 3;
  nn::Model m(a, 1);
  const auto grads = ncut_only_gradients(m, data.features, small_config());
  const std::size_t start = m.pre_feature().param_tensor_count();
  const std::size_t stop = start + m.feature_head().param_tensor_count();
  bool cluster_nonzero = false;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    for (double v : grads[t]) {
      if (t >= start && t < stop) {
        EXPECT_EQ(v, 0.0);
      } else if (t >= stop && v != 0.0) {
        cluster_nonzero = true;
      }
    }
  }
  EXPECT_TRUE(cluster_nonzero);
}

TEST(Trainer, WarmupStepKeepsHeadsOnSeparateLosses) {
  const auto data = small_data();
  const auto cfg = small_config();
  nn::Architecture a;
  a.input_dim = data.dim();
  a.hidden = 16;
  a.embed_dim = 8;
  a.clusters = 3;
  nn::Model m1(a, 2), m2(a, 2);
  const auto warm = compute_step(m1, data.features, cfg, false);
  const auto fine = compute_step(m2, data.features, cfg, true);
  EXPECT_EQ(warm.rate, fine.rate);
  EXPECT_EQ(warm.rate_c, fine.rate_c);
  const std::size_t start = m1.pre_feature().param_tensor_count();
  const std::size_t stop = start + m1.feature_head().param_tensor_count();
  bool differs = false;
  for (std::size_t t = start; t < stop; ++t) differs |= warm.params[t] != fine.params[t];
  EXPECT_TRUE(differs);
}

TEST(Trainer, UntrainedUniformHeadScoresChance) {
  const auto data = small_data();
  nn::Architecture a;
  a.input_dim = data.dim();
  a.hidden = 16;
  a.embed_dim = 8;
  a.clusters = 3;
  nn::Model m(a, 3);
  auto& layers = m.cluster_head().layers();
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (auto* l = std::get_if<nn::Linear>(&*it)) {
      for (double& v : l->weight.data()) v = 0.0;
      break;
    }
  }
  EvalOptions o;
  o.k = 3;
  const auto ev = evaluate(m, data, o);
  EXPECT_NEAR(*ev.acc_ch, 1.0 / 3.0, 0.05);
}

TEST(Trainer, EvaluateWithoutLabelsGivesPseudoLabelsOnly) {
  auto data = small_data();
  data.labels.reset();
  const auto r = train::train(small_config(), data);
  EXPECT_TRUE(r.log.evals.empty());
  EvalOptions o;
  o.k = 3;
  const auto ev = evaluate(r.model, data, o);
  EXPECT_EQ(ev.labels_ch.size(), data.n_points());
  EXPECT_TRUE(ev.labels_sc.has_value());
  EXPECT_FALSE(ev.acc_ch.has_value());
  EXPECT_FALSE(ev.nmi_sc.has_value());
}

TEST(Trainer, TooManyDegenerateBatchesFail) {
  auto c = small_config();
  c.affinity = graph::AffinityMode::gaussian;
  c.sigma = 1e-6;  // every off-diagonal kernel value underflows to zero
  c.self_loops = false;
  EXPECT_THROW(train::train(c, small_data()), NumericalError);
}

TEST(Trainer, RejectsBatchLargerThanData) {
  auto c = small_config();
  c.batch_size = 100;
  EXPECT_THROW(train::train(c, small_data()), ConfigError);
}

TEST(TrainLogIo, JsonRoundTripAndCsvHeaders) {
  const auto r = train::train(small_config(), small_data());
  std::istringstream in(log_text(r.log));
  const auto back = load_log(in);
  EXPECT_EQ(log_text(back), log_text(r.log));
  std::ostringstream iters, evals;
  write_iter_csv(r.log, iters);
  write_eval_csv(r.log, evals);
  EXPECT_EQ(iters.str().substr(0, iters.str().find('\n')), "iter,R,Rc,ncut,lr");
  EXPECT_EQ(evals.str().substr(0, evals.str().find('\n')), "epoch,acc_ch,nmi_ch,acc_sc,nmi_sc");
  const std::string text = iters.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
  std::istringstream junk("{\"iters\": 3}");
  EXPECT_THROW(load_log(junk), FormatError);
}
