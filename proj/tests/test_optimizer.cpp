#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cgmcr/errors.hpp"
#include "cgmcr/optimizer.hpp"

using namespace cgmcr;
using namespace cgmcr::optim;

namespace {

// Scalar Adam written out directly, decoupled decay.
struct ScalarAdam {
  double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.0;
  double m = 0, v = 0;
  int t = 0;
  void step(double& x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
    x -= lr * wd * x;
  }
};

}  // namespace

TEST(Adam, ZeroGradientOnlyAppliesDecay) {
  std::vector<double> w{1.0, -2.0, 0.5};
  AdamOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.01;
  Adam adam(o);
  adam.step(std::vector<ParamView>{{"w", w}}, {{0.0, 0.0, 0.0}});
  EXPECT_DOUBLE_EQ(w[0], 1.0 * (1 - 0.1 * 0.01));
  EXPECT_DOUBLE_EQ(w[1], -2.0 * (1 - 0.1 * 0.01));
  o.weight_decay = 0.0;
  Adam plain(o);
  const auto before = w;
  plain.step(std::vector<ParamView>{{"w", w}}, {{0.0, 0.0, 0.0}});
  EXPECT_EQ(w, before);
}

TEST(Adam, FirstStepIsMinusLr) {
  std::vector<double> w{0.0};
  AdamOptions o;
  o.lr = 0.1;
  Adam adam(o);
  adam.step(std::vector<ParamView>{{"w", w}}, {{1.0}});
  EXPECT_NEAR(w[0], -0.1, 1e-9);
  EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, MatchesScalarReferenceOnQuadratic) {
  for (double wd : {0.0, 0.05}) {
    std::vector<double> w{1.0};
    AdamOptions o;
    o.lr = 0.05;
    o.weight_decay = wd;
    Adam adam(o);
    ScalarAdam ref{0.05};
    ref.wd = wd;
    double x = 1.0;
    for (int s = 0; s < 5; ++s) {
      adam.step(std::vector<ParamView>{{"w", w}}, {{2.0 * w[0]}});
      ref.step(x, 2.0 * x);
      EXPECT_NEAR(w[0], x, 1e-12) << "step " << s;
    }
  }
}

TEST(Adam, L2ModeFoldsDecayIntoGradient) {
  std::vector<double> w{2.0};
  AdamOptions o;
  o.lr = 0.1;
  o.weight_decay = 0.5;
  o.decay_mode = WeightDecayMode::l2;
  Adam adam(o);
  adam.step(std::vector<ParamView>{{"w", w}}, {{0.0}});
  // g = wd * w = 1, so the first step is -lr.
  EXPECT_NEAR(w[0], 1.9, 1e-7);
}

TEST(Adam, NonFiniteGradientNamesTensorAndLeavesParams) {
  std::vector<double> a{1.0}, b{2.0};
  Adam adam;
  try {
    adam.step(std::vector<ParamView>{{"first", a}, {"second", b}}, {{0.1}, {NAN}});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 2.0);
}

TEST(Adam, IsDeterministic) {
  std::vector<double> a{0.3, -0.7}, b{0.3, -0.7};
  Adam x, y;
  for (int s = 0; s < 4; ++s) {
    x.step(std::vector<ParamView>{{"p", a}}, {{a[0] - 1, a[1] * 3}});
    y.step(std::vector<ParamView>{{"p", b}}, {{b[0] - 1, b[1] * 3}});
  }
  EXPECT_EQ(a, b);
}

TEST(Schedule, WarmupConstantThenCosine) {
  const double lr0 = 0.2;
  const std::uint64_t ipe = 10, t1 = 3, t2 = 4;
  for (std::uint64_t t = 0; t < 30; ++t) EXPECT_EQ(lr_schedule(t, t1, t2, ipe, lr0), lr0);
  EXPECT_DOUBLE_EQ(lr_schedule(30, t1, t2, ipe, lr0), lr0);
  EXPECT_NEAR(lr_schedule(50, t1, t2, ipe, lr0), lr0 / 2, 1e-15);
  EXPECT_NEAR(lr_schedule(70, t1, t2, ipe, lr0), 0.0, 1e-15);
  double prev = lr0;
  for (std::uint64_t t = 30; t <= 70; ++t) {
    const double lr = lr_schedule(t, t1, t2, ipe, lr0);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
  EXPECT_NEAR(lr_schedule(29, t1, t2, ipe, lr0) - lr_schedule(31, t1, t2, ipe, lr0), 0.0, lr0 * 0.01);
}
