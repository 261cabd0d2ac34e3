#include "cgmcr/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgmcr/errors.hpp"

namespace cgmcr::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void softmax_rows_inplace(Mat& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
}

Mat tempered_softmax(Mat logits, const Mat* noise, double tau) {
  if (!(tau > 0.0)) throw ParameterError("softmax: temperature must be positive");
  auto d = logits.data();
  if (noise != nullptr) {
    auto nd = noise->data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += nd[i];
  }
  for (double& v : d) v /= tau;
  softmax_rows_inplace(logits);
  return logits;
}

Mat linear_forward(const Linear& l, const Mat& x) {
  if (x.cols() != l.in_dim()) {
    throw DimensionError("Linear: input has " + std::to_string(x.cols()) + " features, expected " +
                         std::to_string(l.in_dim()));
  }
  Mat y = matmul_nt(x, l.weight);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += l.bias[j];
  }
  return y;
}

Mat batchnorm_forward(const BatchNorm& bn, const Mat& x, Mode mode, LayerCache& cache) {
  const std::size_t n = x.rows();
  const std::size_t f = x.cols();
  if (f != bn.features()) throw DimensionError("BatchNorm: feature count mismatch");
  std::vector<double> mean(f, 0.0);
  std::vector<double> var(f, 0.0);
  if (mode == Mode::train) {
    if (n < 2) throw DimensionError("BatchNorm: train mode needs at least two samples");
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < f; ++j) mean[j] += r[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = x.row(i);
      for (std::size_t j = 0; j < f; ++j) {
        const double t = r[j] - mean[j];
        var[j] += t * t;
      }
    }
    for (double& v : var) v /= static_cast<double>(n);
    cache.batch_stats = true;
    cache.batch_mean = mean;
    cache.batch_var = var;
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  cache.stat.resize(f);
  for (std::size_t j = 0; j < f; ++j) cache.stat[j] = 1.0 / std::sqrt(var[j] + bn.eps);
  cache.normalized = Mat(n, f);
  Mat y(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    auto xr = x.row(i);
    auto hr = cache.normalized.row(i);
    auto yr = y.row(i);
    for (std::size_t j = 0; j < f; ++j) {
      hr[j] = (xr[j] - mean[j]) * cache.stat[j];
      yr[j] = bn.scale[j] * hr[j] + bn.shift[j];
    }
  }
  return y;
}

Mat l2_forward(const Mat& x, LayerCache& cache) {
  Mat y = x;
  cache.stat.resize(x.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    const double norm = std::max(std::sqrt(sq), 1e-12);
    cache.stat[i] = norm;
    for (double& v : r) v /= norm;
  }
  return y;
}

}  // namespace

LayerKind kind_of(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const Linear&) { return LayerKind::linear; },
                        [](const BatchNorm&) { return LayerKind::batchnorm; },
                        [](const Relu&) { return LayerKind::relu; },
                        [](const L2Normalize&) { return LayerKind::l2norm; },
                        [](const GumbelSoftmax&) { return LayerKind::gumbel_softmax; },
                    },
                    layer);
}

Mat softmax(const Mat& logits, double tau) { return tempered_softmax(logits, nullptr, tau); }

Mat sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mat g(rows, cols);
  for (double& v : g.data()) {
    const double u = std::clamp(unit(rng), 1e-12, 1.0 - 1e-12);
    v = -std::log(-std::log(u));
  }
  return g;
}

Mat gumbel_softmax(const Mat& logits, double tau, Rng& rng) {
  const Mat noise = sample_gumbel(logits.rows(), logits.cols(), rng);
  return tempered_softmax(logits, &noise, tau);
}

Mat Block::forward(const Mat& x, Mode mode, Rng* noise_rng, std::vector<LayerCache>& caches) const {
  caches.assign(layers_.size(), LayerCache{});
  Mat h = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    LayerCache& cache = caches[li];
    h = std::visit(
        Overloaded{
            [&](const Linear& l) {
              cache.input = h;
              return linear_forward(l, h);
            },
            [&](const BatchNorm& bn) { return batchnorm_forward(bn, h, mode, cache); },
            [&](const Relu&) {
              Mat y = h;
              for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
              cache.output = y;
              return y;
            },
            [&](const L2Normalize&) {
              Mat y = l2_forward(h, cache);
              cache.output = y;
              return y;
            },
            [&](const GumbelSoftmax& gs) {
              cache.tau = gs.tau;
              Mat y;
              if (mode == Mode::train) {
                if (noise_rng == nullptr) throw ContractError("GumbelSoftmax: train mode needs an RNG");
                y = gumbel_softmax(h, gs.tau, *noise_rng);
              } else {
                y = softmax(h, gs.tau);
              }
              cache.output = y;
              return y;
            },
        },
        layers_[li]);
  }
  return h;
}

Mat Block::backward(const std::vector<LayerCache>& caches, Mat grad,
                    std::span<std::vector<double>> grads) const {
  if (caches.size() != layers_.size()) throw ContractError("Block::backward: cache does not match");
  std::size_t slot = param_tensor_count();
  if (grads.size() != slot) throw ContractError("Block::backward: wrong number of gradient slots");

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerCache& cache = caches[li];
    grad = std::visit(
        Overloaded{
            [&](const Linear& l) {
              // y = x Wᵀ + b
              slot -= 2;
              const Mat dw = matmul_tn(grad, cache.input);
              grads[slot].assign(dw.data().begin(), dw.data().end());
              std::vector<double> db(l.out_dim(), 0.0);
              for (std::size_t i = 0; i < grad.rows(); ++i) {
                auto r = grad.row(i);
                for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
              }
              grads[slot + 1] = std::move(db);
              return matmul(grad, l.weight);
            },
            [&](const BatchNorm& bn) {
              slot -= 2;
              const std::size_t n = grad.rows();
              const std::size_t f = grad.cols();
              std::vector<double> dscale(f, 0.0);
              std::vector<double> dshift(f, 0.0);
              for (std::size_t i = 0; i < n; ++i) {
                auto gr = grad.row(i);
                auto hr = cache.normalized.row(i);
                for (std::size_t j = 0; j < f; ++j) {
                  dscale[j] += gr[j] * hr[j];
                  dshift[j] += gr[j];
                }
              }
              Mat dx(n, f);
              if (cache.batch_stats) {
                // dx = inv_std * (dx̂ - mean(dx̂) - x̂ mean(dx̂ ∘ x̂))
                const double inv_n = 1.0 / static_cast<double>(n);
                for (std::size_t i = 0; i < n; ++i) {
                  auto gr = grad.row(i);
                  auto hr = cache.normalized.row(i);
                  auto dr = dx.row(i);
                  for (std::size_t j = 0; j < f; ++j) {
                    const double dxhat = gr[j] * bn.scale[j];
                    const double mean_dxhat = dshift[j] * bn.scale[j] * inv_n;
                    const double mean_dxhat_xhat = dscale[j] * bn.scale[j] * inv_n;
                    dr[j] = cache.stat[j] * (dxhat - mean_dxhat - hr[j] * mean_dxhat_xhat);
                  }
                }
              } else {
                for (std::size_t i = 0; i < n; ++i) {
                  auto gr = grad.row(i);
                  auto dr = dx.row(i);
                  for (std::size_t j = 0; j < f; ++j) dr[j] = gr[j] * bn.scale[j] * cache.stat[j];
                }
              }
              grads[slot] = std::move(dscale);
              grads[slot + 1] = std::move(dshift);
              return dx;
            },
            [&](const Relu&) {
              Mat dx = grad;
              auto dd = dx.data();
              auto od = cache.output.data();
              for (std::size_t i = 0; i < dd.size(); ++i) {
                if (!(od[i] > 0.0)) dd[i] = 0.0;
              }
              return dx;
            },
            [&](const L2Normalize&) {
              // dx = (dy - y (y·dy)) / |x|
              Mat dx = grad;
              for (std::size_t i = 0; i < dx.rows(); ++i) {
                auto dr = dx.row(i);
                auto yr = cache.output.row(i);
                double proj = 0.0;
                for (std::size_t j = 0; j < dr.size(); ++j) proj += yr[j] * dr[j];
                for (std::size_t j = 0; j < dr.size(); ++j) dr[j] = (dr[j] - yr[j] * proj) / cache.stat[i];
              }
              return dx;
            },
            [&](const GumbelSoftmax&) {
              // Noise is an additive constant; dx = y ∘ (dy - y·dy) / τ
              Mat dx = grad;
              for (std::size_t i = 0; i < dx.rows(); ++i) {
                auto dr = dx.row(i);
                auto yr = cache.output.row(i);
                double proj = 0.0;
                for (std::size_t j = 0; j < dr.size(); ++j) proj += yr[j] * dr[j];
                for (std::size_t j = 0; j < dr.size(); ++j) dr[j] = yr[j] * (dr[j] - proj) / cache.tau;
              }
              return dx;
            },
        },
        layers_[li]);
  }
  return grad;
}

void Block::update_running_stats(const std::vector<LayerCache>& caches) {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    auto* bn = std::get_if<BatchNorm>(&layers_[li]);
    if (bn == nullptr || !caches[li].batch_stats) continue;
    const double n = static_cast<double>(caches[li].normalized.rows());
    const double unbias = n / (n - 1.0);
    for (std::size_t j = 0; j < bn->features(); ++j) {
      bn->running_mean[j] = (1.0 - bn->momentum) * bn->running_mean[j] + bn->momentum * caches[li].batch_mean[j];
      bn->running_var[j] =
          (1.0 - bn->momentum) * bn->running_var[j] + bn->momentum * caches[li].batch_var[j] * unbias;
    }
  }
}

void Block::collect_params(const std::string& prefix, std::vector<ParamView>& out) {
  std::vector<std::string> names;
  collect_names(prefix, names);
  std::size_t next = 0;
  for (Layer& layer : layers_) {
    if (auto* l = std::get_if<Linear>(&layer)) {
      out.push_back({names[next++], l->weight.data()});
      out.push_back({names[next++], l->bias});
    } else if (auto* bn = std::get_if<BatchNorm>(&layer)) {
      out.push_back({names[next++], bn->scale});
      out.push_back({names[next++], bn->shift});
    }
  }
}

void Block::collect_names(const std::string& prefix, std::vector<std::string>& out) const {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const std::string base = prefix + "." + std::to_string(li);
    if (std::holds_alternative<Linear>(layers_[li])) {
      out.push_back(base + ".weight");
      out.push_back(base + ".bias");
    } else if (std::holds_alternative<BatchNorm>(layers_[li])) {
      out.push_back(base + ".scale");
      out.push_back(base + ".shift");
    }
  }
}

std::size_t Block::param_tensor_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers_) {
    if (std::holds_alternative<Linear>(layer) || std::holds_alternative<BatchNorm>(layer)) count += 2;
  }
  return count;
}

void Architecture::validate() const {
  if (input_dim == 0 || hidden == 0 || embed_dim == 0) {
    throw ParameterError("Architecture: dimensions must be positive");
  }
  if (clusters < 1) throw ParameterError("Architecture: need at least one cluster");
  if (!(tau > 0.0)) throw ParameterError("Architecture: tau must be positive");
}

namespace {

Linear make_linear(std::size_t in, std::size_t out) {
  return Linear{Mat(out, in), std::vector<double>(out, 0.0)};
}

Block make_head(std::size_t hidden, std::size_t depth, std::size_t out, Layer last) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    layers.emplace_back(make_linear(hidden, hidden));
    layers.emplace_back(Relu{});
  }
  layers.emplace_back(make_linear(hidden, out));
  layers.push_back(std::move(last));
  return Block(std::move(layers));
}

}  // namespace

Model::Model(const Architecture& arch) : arch_(arch) {
  arch_.validate();
  pre_ = Block({make_linear(arch.input_dim, arch.hidden), BatchNorm(arch.hidden), Relu{}});
  feature_ = make_head(arch.hidden, arch.head_depth, arch.embed_dim, L2Normalize{});
  cluster_ = make_head(arch.hidden, arch.head_depth, arch.clusters, GumbelSoftmax{arch.tau});
}

Model Model::uninitialized(const Architecture& arch) { return Model(arch); }

Model::Model(const Architecture& arch, std::uint64_t seed) : Model(arch) {
  std::seed_seq init_seq{seed, std::uint64_t{0x1417}};
  Rng init_rng(init_seq);
  for (Block* block : {&pre_, &feature_, &cluster_}) {
    for (Layer& layer : block->layers()) {
      auto* l = std::get_if<Linear>(&layer);
      if (l == nullptr) continue;
      const double bound = std::sqrt(6.0 / static_cast<double>(l->in_dim()));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& w : l->weight.data()) w = dist(init_rng);
    }
  }
  std::seed_seq noise_seq{seed, std::uint64_t{0x6a5d}};
  noise_rng_.seed(noise_seq);
}

ForwardResult Model::run(const Mat& x, Mode mode, Rng* rng) const {
  if (x.cols() != arch_.input_dim) {
    throw DimensionError("Model::forward: input has " + std::to_string(x.cols()) +
                         " features, expected " + std::to_string(arch_.input_dim));
  }
  ForwardResult out;
  out.cache.version = version_;
  out.cache.batch = x.rows();
  const Mat h = pre_.forward(x, mode, nullptr, out.cache.pre);
  out.z = feature_.forward(h, mode, nullptr, out.cache.feature).transpose();
  out.pi = cluster_.forward(h, mode, rng, out.cache.cluster);
  return out;
}

ForwardResult Model::forward(const Mat& x, Mode mode) {
  if (mode == Mode::eval) return run(x, mode, nullptr);
  ForwardResult out = run(x, mode, &noise_rng_);
  pre_.update_running_stats(out.cache.pre);
  feature_.update_running_stats(out.cache.feature);
  cluster_.update_running_stats(out.cache.cluster);
  return out;
}

ForwardResult Model::forward(const Mat& x) const { return run(x, Mode::eval, nullptr); }

ParamGrads Model::backward(const ForwardCache& cache, const Mat& grad_z, const Mat& grad_pi) const {
  if (cache.version != version_) {
    throw ContractError("Model::backward: parameters changed since the forward pass");
  }
  const std::size_t n = cache.batch;
  if (grad_z.rows() != arch_.embed_dim || grad_z.cols() != n) {
    throw DimensionError("Model::backward: grad_z must be d×n");
  }
  if (grad_pi.rows() != n || grad_pi.cols() != arch_.clusters) {
    throw DimensionError("Model::backward: grad_pi must be n×k");
  }

  const std::size_t n_pre = pre_.param_tensor_count();
  const std::size_t n_feat = feature_.param_tensor_count();
  const std::size_t n_clus = cluster_.param_tensor_count();
  ParamGrads grads(n_pre + n_feat + n_clus);
  std::span<std::vector<double>> all(grads);

  Mat dh = feature_.backward(cache.feature, grad_z.transpose(), all.subspan(n_pre, n_feat));
  dh += cluster_.backward(cache.cluster, grad_pi, all.subspan(n_pre + n_feat, n_clus));
  pre_.backward(cache.pre, std::move(dh), all.subspan(0, n_pre));
  return grads;
}

std::vector<ParamView> Model::parameters() {
  ++version_;
  std::vector<ParamView> out;
  pre_.collect_params("pre_feature", out);
  feature_.collect_params("feature_head", out);
  cluster_.collect_params("cluster_head", out);
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  pre_.collect_names("pre_feature", names);
  feature_.collect_names("feature_head", names);
  cluster_.collect_names("cluster_head", names);
  return names;
}

std::size_t Model::parameter_tensor_count() const {
  return pre_.param_tensor_count() + feature_.param_tensor_count() + cluster_.param_tensor_count();
}

}  // namespace cgmcr::nn
