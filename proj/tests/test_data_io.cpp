#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "cgmcr/data_io.hpp"
#include "cgmcr/errors.hpp"
#include "cgmcr/graph_cut.hpp"
#include "cgmcr/metrics.hpp"
#include "oracles.hpp"

using namespace cgmcr;
using namespace cgmcr::io;

namespace {

FeatureMatrix random_features(std::size_t n, std::size_t d, bool labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureMatrix f;
  f.features = oracle::random_matrix(n, d, rng);
  // Representable in float32, so the binary round trip is exact.
  for (double& v : f.features.data()) v = static_cast<double>(static_cast<float>(v));
  if (labels) {
    f.labels.emplace(n);
    for (std::size_t i = 0; i < n; ++i) (*f.labels)[i] = static_cast<int>(i % 3);
  }
  return f;
}

std::string cgf_bytes(const FeatureMatrix& f) {
  std::ostringstream out(std::ios::binary);
  write_cgf(f, out);
  return out.str();
}

}  // namespace

TEST(Cgf, RoundTripIsExact) {
  for (bool labels : {false, true}) {
    const auto f = random_features(10, 4, labels, 1);
    const std::string bytes = cgf_bytes(f);
    EXPECT_EQ(bytes.size(), 13 + 10 * 4 * 4 + (labels ? 40u : 0u));
    std::istringstream in(bytes);
    const auto back = read_cgf(in);
    EXPECT_EQ(back.features, f.features);
    EXPECT_EQ(back.labels, f.labels);
    EXPECT_EQ(cgf_bytes(back), bytes);
  }
}

TEST(Cgf, HeaderLayout) {
  const std::string b = cgf_bytes(random_features(2, 3, true, 2));
  EXPECT_EQ(b.substr(0, 4), "CGF1");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 1);
}

TEST(Cgf, EmptyAndMalformedInputs) {
  std::istringstream empty("");
  EXPECT_THROW(read_cgf(empty), FormatError);

  std::string zero("CGF1");
  zero += std::string("\0\0\0\0\3\0\0\0\0", 9);
  std::istringstream zero_in(zero);
  try {
    read_cgf(zero_in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }

  std::string bytes = cgf_bytes(random_features(3, 2, false, 3));
  std::istringstream cut(bytes.substr(0, bytes.size() - 2));
  try {
    read_cgf(cut);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }

  const float nan = NAN;
  std::memcpy(bytes.data() + 13, &nan, 4);
  std::istringstream bad(bytes);
  EXPECT_THROW(read_cgf(bad), FormatError);
}

TEST(Csv, RoundTripWithinTolerance) {
  for (bool labels : {false, true}) {
    const auto f = random_features(10, 4, labels, 4);
    std::stringstream s;
    write_csv(f, s);
    const auto back = read_csv(s);
    ASSERT_EQ(back.features.rows(), 10u);
    ASSERT_EQ(back.features.cols(), 4u);
    for (std::size_t i = 0; i < f.features.size(); ++i)
      EXPECT_NEAR(back.features.data()[i], f.features.data()[i], 1e-6);
    EXPECT_EQ(back.labels, f.labels);
  }
}

TEST(Csv, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), FormatError);
  std::istringstream header_only("a,b,label\n");
  EXPECT_THROW(read_csv(header_only), FormatError);
  std::istringstream ragged("a,b\n1,2\n3\n");
  try {
    read_csv(ragged);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream junk("a,b\n1,x\n");
  EXPECT_THROW(read_csv(junk), FormatError);
}

TEST(Files, FormatFollowsExtensionAndRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path() / "cgmcr_data_io_test";
  std::filesystem::create_directories(dir);
  const auto f = random_features(6, 3, true, 5);
  for (const char* name : {"x.cgf", "x.csv"}) {
    const auto path = dir / name;
    save_features(f, path, format_for(path));
    const auto back = load_features(path, format_for(path));
    EXPECT_EQ(back.labels, f.labels);
  }
  EXPECT_EQ(format_for("a.csv"), FeatureFormat::csv);
  EXPECT_EQ(format_for("a.bin"), FeatureFormat::cgf);
  EXPECT_THROW(load_features(dir / "missing.cgf", FeatureFormat::cgf), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, NoiselessSubspacesAreOrthogonal) {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.points_per_cluster = 20;
  spec.seed = 6;
  const auto f = gen_synthetic(spec);
  const auto& l = *f.labels;
  for (std::size_t i = 0; i < f.n_points(); ++i) {
    double n = 0;
    for (double v : f.features.row(i)) n += v * v;
    EXPECT_NEAR(n, 1.0, 1e-12);
    for (std::size_t j = 0; j < f.n_points(); ++j) {
      if (l[i] == l[j]) continue;
      double d = 0;
      for (std::size_t c = 0; c < f.dim(); ++c) d += f.features(i, c) * f.features(j, c);
      EXPECT_NEAR(d, 0.0, 1e-10);
    }
  }
}

TEST(Synthetic, SameSeedSameData) {
  SyntheticSpec spec;
  spec.seed = 7;
  EXPECT_EQ(gen_synthetic(spec).features, gen_synthetic(spec).features);
  spec.kind = SyntheticKind::gaussian_blobs;
  EXPECT_EQ(gen_synthetic(spec).features, gen_synthetic(spec).features);
}

TEST(Synthetic, BlobMeansAreEightSigmaApart) {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::gaussian_blobs;
  spec.clusters = 3;
  spec.ambient_dim = 5;
  spec.points_per_cluster = 4000;
  spec.blob_sigma = 0.5;
  const auto f = gen_synthetic(spec);
  std::vector<std::vector<double>> mean(3, std::vector<double>(5, 0.0));
  for (std::size_t i = 0; i < f.n_points(); ++i)
    for (std::size_t c = 0; c < 5; ++c) mean[(*f.labels)[i]][c] += f.features(i, c) / 4000.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      double d = 0;
      for (std::size_t c = 0; c < 5; ++c) d += (mean[a][c] - mean[b][c]) * (mean[a][c] - mean[b][c]);
      EXPECT_NEAR(std::sqrt(d), 8 * 0.5, 0.1);
    }
}

TEST(Synthetic, RejectsTooManySubspaces) {
  SyntheticSpec spec;
  spec.clusters = 20;
  spec.subspace_dim = 3;
  spec.ambient_dim = 50;
  EXPECT_THROW(gen_synthetic(spec), ParameterError);
}

TEST(Synthetic, SpectralBaselineOnReferenceDataset) {
  SyntheticSpec spec;  // k=4, r=3, D=50, 200 per cluster, noise 0.05
  spec.seed = 0;
  const auto f = gen_synthetic(spec);
  graph::AffinityOptions o;
  o.s = 10;
  const auto g = graph::build_affinity({f.features.transpose(), 0.5}, o);
  const auto labels = graph::spectral_oracle(g, 4, 0);
  EXPECT_GE(metrics::clustering_accuracy(labels, *f.labels), 0.98);
}
