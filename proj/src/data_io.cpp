#include "cgmcr/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "cgmcr/errors.hpp"

namespace cgmcr::io {

std::size_t FeatureMatrix::label_count() const {
  if (!labels || labels->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end()) + 1);
}

void FeatureMatrix::validate() const {
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (double v : features.row(i)) {
      if (!std::isfinite(v)) throw FormatError("features: non-finite value in row " + std::to_string(i));
    }
  }
  if (labels) {
    if (labels->size() != n_points()) throw FormatError("features: label count does not match rows");
    for (int l : *labels) {
      if (l < 0) throw FormatError("features: negative label");
    }
  }
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> index) const {
  FeatureMatrix out;
  out.split = split;
  out.features = Mat(index.size(), dim());
  if (labels) out.labels.emplace(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    auto src = features.row(index[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    if (labels) (*out.labels)[r] = (*labels)[index[r]];
  }
  return out;
}

FeatureFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::cgf;
}

FeatureMatrix read_cgf(std::istream& in) {
  binary::Reader r(in, "cgf");
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::string(magic, 4) != "CGF1") r.fail("bad magic (expected CGF1)", 0);
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  if (n == 0) throw FormatError("cgf: empty dataset (N = 0)");
  if (d == 0) throw FormatError("cgf: zero feature dimension");
  const auto flag_at = r.offset();
  const std::uint8_t has_labels = r.u8();
  if (has_labels > 1) r.fail("has_labels must be 0 or 1", flag_at);

  FeatureMatrix out;
  out.features = Mat(n, d);
  for (double& v : out.features.data()) {
    const auto at = r.offset();
    const float f = r.f32();
    if (!std::isfinite(f)) r.fail("non-finite feature value", at);
    v = static_cast<double>(f);
  }
  if (has_labels == 1) {
    out.labels.emplace(n);
    for (int& l : *out.labels) {
      const auto at = r.offset();
      l = r.i32();
      if (l < 0) r.fail("negative label", at);
    }
  }
  return out;
}

void write_cgf(const FeatureMatrix& data, std::ostream& out) {
  data.validate();
  out.write("CGF1", 4);
  binary::put_u32(out, static_cast<std::uint32_t>(data.n_points()));
  binary::put_u32(out, static_cast<std::uint32_t>(data.dim()));
  binary::put_u8(out, data.labels ? 1 : 0);
  for (double v : data.features.data()) binary::put_f32(out, static_cast<float>(v));
  if (data.labels) {
    for (int l : *data.labels) binary::put_i32(out, l);
  }
  if (!out) throw FormatError("cgf: write failed");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    fields.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class T>
T parse_number(std::string_view text, std::size_t line_no) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw FormatError("csv: line " + std::to_string(line_no) + ": cannot parse '" +
                      std::string(text) + "'");
  }
  return value;
}

}  // namespace

FeatureMatrix read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n_cols = 0;
  bool labelled = false;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      have_header = true;
      n_cols = fields.size();
      labelled = fields.back() == "label";
      if (labelled && n_cols < 2) throw FormatError("csv: line 1: no feature columns");
      continue;
    }
    if (fields.size() != n_cols) {
      throw FormatError("csv: line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " fields, found " + std::to_string(fields.size()));
    }
    const std::size_t n_feat = labelled ? n_cols - 1 : n_cols;
    for (std::size_t c = 0; c < n_feat; ++c) {
      const double v = parse_number<double>(fields[c], line_no);
      if (!std::isfinite(v)) {
        throw FormatError("csv: line " + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
    }
    if (labelled) {
      const int l = parse_number<int>(fields.back(), line_no);
      if (l < 0) throw FormatError("csv: line " + std::to_string(line_no) + ": negative label");
      labels.push_back(l);
    }
    ++rows;
  }
  if (!have_header) throw FormatError("csv: empty file");
  if (rows == 0) throw FormatError("csv: empty dataset (header only)");

  FeatureMatrix out;
  const std::size_t n_feat = labelled ? n_cols - 1 : n_cols;
  out.features = Mat(rows, n_feat, std::move(values));
  if (labelled) out.labels = std::move(labels);
  return out;
}

void write_csv(const FeatureMatrix& data, std::ostream& out) {
  data.validate();
  for (std::size_t c = 0; c < data.dim(); ++c) out << (c ? "," : "") << 'f' << c;
  if (data.labels) out << ",label";
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.n_points(); ++i) {
    auto r = data.features.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", r[c]);
      out << (c ? "," : "") << buf;
    }
    if (data.labels) out << ',' << (*data.labels)[i];
    out << '\n';
  }
  if (!out) throw FormatError("csv: write failed");
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file " + path.string());
  FeatureMatrix m = format == FeatureFormat::cgf ? read_cgf(in) : read_csv(in);
  m.validate();
  return m;
}

void save_features(const FeatureMatrix& data, const std::filesystem::path& path, FeatureFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (format == FeatureFormat::cgf) {
    write_cgf(data, out);
  } else {
    write_csv(data, out);
  }
}

void SyntheticSpec::validate() const {
  if (clusters == 0 || ambient_dim == 0 || points_per_cluster == 0) {
    throw ParameterError("synthetic: clusters, dimension and points per cluster must be positive");
  }
  if (noise < 0.0) throw ParameterError("synthetic: noise must be non-negative");
  if (kind == SyntheticKind::orthogonal_subspaces) {
    if (subspace_dim == 0) throw ParameterError("synthetic: subspace dimension must be positive");
    if (subspace_dim * clusters > ambient_dim) {
      throw ParameterError("synthetic: r*k = " + std::to_string(subspace_dim * clusters) +
                           " exceeds the ambient dimension " + std::to_string(ambient_dim));
    }
  } else {
    if (!(blob_sigma > 0.0)) throw ParameterError("synthetic: blob sigma must be positive");
    if (clusters > ambient_dim) throw ParameterError("synthetic: more blobs than dimensions");
  }
}

FeatureMatrix gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t k = spec.clusters;
  const std::size_t dim = spec.ambient_dim;
  const std::size_t per = spec.points_per_cluster;
  const std::size_t basis_cols = spec.kind == SyntheticKind::orthogonal_subspaces ? spec.subspace_dim * k : k;

  Mat g(dim, basis_cols);
  for (double& v : g.data()) v = gauss(rng);
  const Mat basis = orthonormal_columns(g);

  FeatureMatrix out;
  out.features = Mat(k * per, dim);
  out.labels.emplace(k * per);
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t p = 0; p < per; ++p, ++row) {
      auto x = out.features.row(row);
      (*out.labels)[row] = static_cast<int>(c);
      if (spec.kind == SyntheticKind::orthogonal_subspaces) {
        const std::size_t r = spec.subspace_dim;
        std::vector<double> coef(r);
        double norm = 0.0;
        do {
          norm = 0.0;
          for (double& v : coef) {
            v = gauss(rng);
            norm += v * v;
          }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (std::size_t a = 0; a < r; ++a) {
          const double w = coef[a] / norm;
          for (std::size_t j = 0; j < dim; ++j) x[j] += w * basis(j, c * r + a);
        }
        if (spec.noise > 0.0) {
          for (double& v : x) v += spec.noise * gauss(rng);
          double nn = 0.0;
          for (double v : x) nn += v * v;
          nn = std::sqrt(nn);
          for (double& v : x) v /= nn;
        }
      } else {
        const double spread = 8.0 * spec.blob_sigma / std::sqrt(2.0);
        for (std::size_t j = 0; j < dim; ++j) x[j] = spread * basis(j, c) + spec.blob_sigma * gauss(rng);
      }
    }
  }
  return out;
}

}  // namespace cgmcr::io
