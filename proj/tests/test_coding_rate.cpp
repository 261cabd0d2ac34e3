#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cgmcr/coding_rate.hpp"
#include "cgmcr/errors.hpp"
#include "oracles.hpp"

using namespace cgmcr;
using namespace cgmcr::rate;

namespace {

Mat one_hot(const std::vector<int>& labels, std::size_t k) {
  Mat p(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) p(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return p;
}

// Columns 0..n/2-1 in span(e0, e1), the rest in span(e2, e3).
Mat two_orthogonal_groups(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat z(6, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t off = j < n / 2 ? 0 : 2;
    z(off, j) = g(rng);
    z(off + 1, j) = g(rng);
  }
  return oracle::unit_columns(z);
}

}  // namespace

TEST(RateR, RankOneColumnIsLog17) {
  const EmbeddingBatch zb{Mat{{1}, {0}, {0}, {0}}, 0.5};
  EXPECT_NEAR(rate_R(zb).value, std::log(17.0), 1e-14);
}

TEST(RateR, OrthonormalColumnsGive8Log2) {
  std::mt19937_64 rng(1);
  const Mat q = orthonormal_columns(oracle::random_matrix(8, 8, rng));
  EXPECT_NEAR(rate_R({q, 1.0}).value, 8.0 * std::log(2.0), 1e-12);
}

TEST(RateR, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Mat z = oracle::unit_columns(oracle::random_matrix(16, 32, rng));
  const auto r = rate_R({z, 0.5});
  const Mat fd = oracle::fd_gradient([](const Mat& x) { return rate_R({x, 0.5}).value; }, z);
  EXPECT_LT(oracle::rel_error(r.grad_z, fd), 1e-5);
}

TEST(RateR, BothGramSidesAgree) {
  std::mt19937_64 rng(3);
  for (auto [d, n] : {std::pair<std::size_t, std::size_t>{5, 12}, {12, 5}, {7, 7}}) {
    const Mat z = oracle::random_matrix(d, n, rng);
    const std::vector<double> w(n, 0.3);
    const auto a = detail::weighted_logdet(z, w, 0.9, detail::GramSide::ambient);
    const auto s = detail::weighted_logdet(z, w, 0.9, detail::GramSide::sample);
    EXPECT_NEAR(a.value, s.value, 1e-10);
    EXPECT_LT(oracle::rel_error(a.grad_z, s.grad_z), 1e-10);
    EXPECT_LT(oracle::rel_error(a.grad_w, s.grad_w), 1e-10);
    EXPECT_NEAR(a.alpha_dvalue_dalpha, s.alpha_dvalue_dalpha, 1e-10);
  }
}

TEST(RateR, RotationInvariance) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Mat z = oracle::unit_columns(oracle::random_matrix(10, 15, rng));
    const Mat q = orthonormal_columns(oracle::random_matrix(10, 10, rng));
    EXPECT_NEAR(rate_R({matmul(q, z), 0.5}).value, rate_R({z, 0.5}).value, 1e-9);
  }
}

TEST(RateRc, SingleClusterEqualsR) {
  std::mt19937_64 rng(5);
  for (std::size_t n : {1, 7, 49, 100}) {
    const Mat z = oracle::unit_columns(oracle::random_matrix(9, n, rng));
    const EmbeddingBatch zb{z, 0.5};
    EXPECT_EQ(rate_Rc(zb, {Mat(n, 1, 1.0)}).value, rate_R(zb).value) << "n=" << n;
  }
}

TEST(RateRc, OrthogonalGroupsReduceTheRate) {
  std::mt19937_64 rng(6);
  const Mat z = two_orthogonal_groups(20, rng);
  std::vector<int> labels(20, 0);
  for (std::size_t i = 10; i < 20; ++i) labels[i] = 1;
  const EmbeddingBatch zb{z, 0.5};
  EXPECT_LT(rate_Rc(zb, {one_hot(labels, 2)}).value, rate_R(zb).value);
}

TEST(RateRc, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  const Mat z = oracle::unit_columns(oracle::random_matrix(16, 32, rng));
  const Mat pi = oracle::random_stochastic(32, 4, rng);
  const auto r = rate_Rc({z, 0.5}, {pi});
  const Mat fz = oracle::fd_gradient([&](const Mat& x) { return rate_Rc({x, 0.5}, {pi}).value; }, z);
  const Mat fp = oracle::fd_gradient([&](const Mat& p) { return rate_Rc({z, 0.5}, {p}).value; }, pi);
  EXPECT_LT(oracle::rel_error(r.grad_z, fz), 1e-5);
  EXPECT_LT(oracle::rel_error(r.grad_pi, fp), 1e-5);
}

TEST(RateRc, EmptyClusterContributesNothing) {
  std::mt19937_64 rng(8);
  const Mat z = oracle::unit_columns(oracle::random_matrix(5, 10, rng));
  Mat pi(10, 3);
  for (std::size_t i = 0; i < 10; ++i) pi(i, i % 2) = 1.0;
  const auto with_empty = rate_Rc({z, 0.5}, {pi});
  Mat two(10, 2);
  for (std::size_t i = 0; i < 10; ++i) two(i, i % 2) = 1.0;
  EXPECT_DOUBLE_EQ(with_empty.value, rate_Rc({z, 0.5}, {two}).value);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_TRUE(std::isfinite(with_empty.grad_pi(i, 2)));
}

TEST(RateRc, PermutationEquivariance) {
  std::mt19937_64 rng(9);
  const Mat z = oracle::unit_columns(oracle::random_matrix(6, 12, rng));
  const Mat pi = oracle::random_stochastic(12, 3, rng);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mat zp(6, 12), pp(12, 3);
  for (std::size_t j = 0; j < 12; ++j) {
    for (std::size_t a = 0; a < 6; ++a) zp(a, j) = z(a, perm[j]);
    for (std::size_t l = 0; l < 3; ++l) pp(j, l) = pi(perm[j], l);
  }
  const auto base = rate_Rc({z, 0.5}, {pi});
  const auto moved = rate_Rc({zp, 0.5}, {pp});
  EXPECT_NEAR(moved.value, base.value, 1e-12);
  for (std::size_t j = 0; j < 12; ++j) {
    for (std::size_t a = 0; a < 6; ++a) EXPECT_NEAR(moved.grad_z(a, j), base.grad_z(a, perm[j]), 1e-12);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(moved.grad_pi(j, l), base.grad_pi(perm[j], l), 1e-12);
  }
  EXPECT_NEAR(rate_R({zp, 0.5}).value, rate_R({z, 0.5}).value, 1e-12);
}

TEST(RateReductionProperty, NonNegativeOnRandomPairs) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> dd(2, 20), nn(2, 40), kk(2, 8);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = dd(rng), n = nn(rng), k = kk(rng);
    const EmbeddingBatch zb{oracle::unit_columns(oracle::random_matrix(d, n, rng)), 0.5};
    const Membership m{oracle::random_stochastic(n, k, rng)};
    EXPECT_GE(rate_R(zb).value - rate_Rc(zb, m).value, -1e-9);
  }
}

TEST(Mcr2Objective, SingleClusterCancels) {
  std::mt19937_64 rng(11);
  const EmbeddingBatch zb{oracle::unit_columns(oracle::random_matrix(5, 9, rng)), 0.5};
  EXPECT_EQ(mcr2_objective(zb, {Mat(9, 1, 1.0)}).value, 0.0);
}

TEST(Mcr2Objective, OrthogonalGroupsNegative) {
  std::mt19937_64 rng(12);
  const Mat z = two_orthogonal_groups(16, rng);
  std::vector<int> labels(16, 0);
  for (std::size_t i = 8; i < 16; ++i) labels[i] = 1;
  EXPECT_LT(mcr2_objective({z, 0.5}, {one_hot(labels, 2)}).value, 0.0);
}

TEST(Mcr2Objective, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  const Mat z = oracle::unit_columns(oracle::random_matrix(8, 20, rng));
  const Mat pi = oracle::random_stochastic(20, 3, rng);
  const auto r = mcr2_objective({z, 0.5}, {pi});
  const Mat fz = oracle::fd_gradient([&](const Mat& x) { return mcr2_objective({x, 0.5}, {pi}).value; }, z);
  const Mat fp = oracle::fd_gradient([&](const Mat& p) { return mcr2_objective({z, 0.5}, {p}).value; }, pi);
  EXPECT_LT(oracle::rel_error(r.grad_z, fz), 1e-5);
  EXPECT_LT(oracle::rel_error(r.grad_pi, fp), 1e-5);
}

TEST(RateChecks, ShapeMismatchAndBadEps) {
  EXPECT_THROW(rate_Rc({Mat(3, 4, 0.5), 0.5}, {Mat(5, 2, 0.5)}), DimensionError);
  EXPECT_THROW(rate_R({Mat(3, 4, 0.5), 0.0}), ParameterError);
}
