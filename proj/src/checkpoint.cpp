#include "cgmcr/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "cgmcr/errors.hpp"

namespace cgmcr {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'M', 'C'};

struct LayerDims {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
};

// Feature counts entering and leaving each layer of a block.
std::vector<LayerDims> layer_dims(const nn::Block& block, std::size_t input) {
  std::vector<LayerDims> dims;
  std::size_t width = input;
  for (const nn::Layer& layer : block.layers()) {
    std::size_t out = width;
    if (const auto* l = std::get_if<nn::Linear>(&layer)) out = l->out_dim();
    dims.push_back({static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(out)});
    width = out;
  }
  return dims;
}

void put_values(std::ostream& out, std::span<const double> values) {
  for (double v : values) binary::put_f64(out, v);
}

void get_values(binary::Reader& in, std::span<double> values) {
  for (double& v : values) {
    const auto at = in.offset();
    v = in.f64();
    if (!std::isfinite(v)) in.fail("non-finite parameter", at);
  }
}

void write_block(std::ostream& out, const nn::Block& block, std::size_t input) {
  const auto dims = layer_dims(block, input);
  for (std::size_t i = 0; i < block.layers().size(); ++i) {
    const nn::Layer& layer = block.layers()[i];
    binary::put_u32(out, static_cast<std::uint32_t>(nn::kind_of(layer)));
    binary::put_u32(out, dims[i].in);
    binary::put_u32(out, dims[i].out);
    if (const auto* l = std::get_if<nn::Linear>(&layer)) {
      put_values(out, l->weight.data());
      put_values(out, l->bias);
    } else if (const auto* bn = std::get_if<nn::BatchNorm>(&layer)) {
      binary::put_f64(out, bn->momentum);
      binary::put_f64(out, bn->eps);
      put_values(out, bn->scale);
      put_values(out, bn->shift);
      put_values(out, bn->running_mean);
      put_values(out, bn->running_var);
    } else if (const auto* gs = std::get_if<nn::GumbelSoftmax>(&layer)) {
      binary::put_f64(out, gs->tau);
    }
  }
}

void read_block(binary::Reader& in, nn::Block& block, std::size_t input) {
  const auto dims = layer_dims(block, input);
  for (std::size_t i = 0; i < block.layers().size(); ++i) {
    nn::Layer& layer = block.layers()[i];
    const auto at = in.offset();
    const std::uint32_t kind = in.u32();
    const std::uint32_t din = in.u32();
    const std::uint32_t dout = in.u32();
    if (kind != static_cast<std::uint32_t>(nn::kind_of(layer)) || din != dims[i].in ||
        dout != dims[i].out) {
      in.fail("layer does not match the declared architecture", at);
    }
    if (auto* l = std::get_if<nn::Linear>(&layer)) {
      get_values(in, l->weight.data());
      get_values(in, l->bias);
    } else if (auto* bn = std::get_if<nn::BatchNorm>(&layer)) {
      bn->momentum = in.f64();
      bn->eps = in.f64();
      get_values(in, bn->scale);
      get_values(in, bn->shift);
      get_values(in, bn->running_mean);
      get_values(in, bn->running_var);
      for (double v : bn->running_var) {
        if (!(v > 0.0)) in.fail("batchnorm running variance must be positive", at);
      }
    } else if (auto* gs = std::get_if<nn::GumbelSoftmax>(&layer)) {
      gs->tau = in.f64();
      if (!(gs->tau > 0.0)) in.fail("temperature must be positive", at);
    }
  }
}

}  // namespace

void save_checkpoint(const nn::Model& model, std::ostream& out) {
  const nn::Architecture& a = model.arch();
  out.write(kMagic, 4);
  binary::put_u32(out, kCheckpointVersion);
  for (std::size_t v : {a.input_dim, a.hidden, a.embed_dim, a.clusters, a.head_depth}) {
    binary::put_u32(out, static_cast<std::uint32_t>(v));
  }
  binary::put_f64(out, a.tau);

  std::ostringstream rng_text;
  rng_text << model.noise_rng();
  const std::string state = rng_text.str();
  binary::put_u32(out, static_cast<std::uint32_t>(state.size()));
  out.write(state.data(), static_cast<std::streamsize>(state.size()));

  const std::size_t layers = model.pre_feature().layers().size() +
                             model.feature_head().layers().size() +
                             model.cluster_head().layers().size();
  binary::put_u32(out, static_cast<std::uint32_t>(layers));
  write_block(out, model.pre_feature(), a.input_dim);
  write_block(out, model.feature_head(), a.hidden);
  write_block(out, model.cluster_head(), a.hidden);
  if (!out) throw FormatError("checkpoint: write failed");
}

nn::Model load_checkpoint(std::istream& in) {
  binary::Reader r(in, "checkpoint");
  char magic[4];
  r.read_bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) r.fail("bad magic (expected CGMC)", 0);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    r.fail("unsupported format version " + std::to_string(version), 4);
  }
  nn::Architecture a;
  a.input_dim = r.u32();
  a.hidden = r.u32();
  a.embed_dim = r.u32();
  a.clusters = r.u32();
  a.head_depth = r.u32();
  a.tau = r.f64();
  try {
    a.validate();
  } catch (const ParameterError& e) {
    r.fail(e.what(), 8);
  }

  const auto state_at = r.offset();
  const std::uint32_t state_len = r.u32();
  if (state_len > (1u << 20)) r.fail("implausible RNG state length", state_at);
  std::string state(state_len, '\0');
  r.read_bytes(state.data(), state_len);

  nn::Model model = nn::Model::uninitialized(a);
  std::istringstream rng_text(state);
  rng_text >> model.noise_rng();
  if (!rng_text) r.fail("corrupt RNG state", state_at);

  const auto count_at = r.offset();
  const std::uint32_t layers = r.u32();
  const std::size_t expected = model.pre_feature().layers().size() +
                               model.feature_head().layers().size() +
                               model.cluster_head().layers().size();
  if (layers != expected) r.fail("layer count does not match the architecture", count_at);
  read_block(r, model.pre_feature(), a.input_dim);
  read_block(r, model.feature_head(), a.hidden);
  read_block(r, model.cluster_head(), a.hidden);
  return model;
}

void save_checkpoint(const nn::Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

nn::Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace cgmcr
