#include "advregions/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "advregions/error.hpp"
#include "advregions/io.hpp"
#include "advregions/json.hpp"

namespace advregions {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

struct ConvLayer {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, k = 0, stride = 1, pad = 0;
  int out_h = 0, out_w = 0;
  bool pool = false;
  int pool_h = 0, pool_w = 0;
  RowMat weight;  // out_c x (in_c * k * k)
  Vec bias;

  int block_h() const { return pool ? pool_h : out_h; }
  int block_w() const { return pool ? pool_w : out_w; }
};

struct DenseLayer {
  RowMat weight;  // out x in
  Vec bias;
};

struct ConvTrace {
  RowMat cols;    // (in_c*k*k) x (out_h*out_w)
  RowMat pre;     // out_c x (out_h*out_w)
  RowMat act;     // ReLU(pre)
  RowMat pooled;  // out_c x (pool_h*pool_w), only when pooling
  std::vector<Eigen::Index> argmax;
};

struct Trace {
  std::vector<ConvTrace> conv;
  std::vector<Vec> dense_in;
  std::vector<Vec> dense_pre;
  Vec logits;
};

struct Grads {
  std::vector<RowMat> conv_w;
  std::vector<Vec> conv_b;
  std::vector<RowMat> dense_w;
  std::vector<Vec> dense_b;
};

void softmax2(const Vec& z, std::array<double, 2>& p) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  p = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double cross_entropy(const Vec& z, int label) {
  const double m = std::max(z[0], z[1]);
  const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
  return lse - z[label];
}

}  // namespace

void ModelConfig::validate() const {
  if (conv_blocks.empty()) throw ConfigError("model: at least one conv block is required");
  for (const auto& b : conv_blocks) {
    if (b.filters <= 0) throw ConfigError("model: conv filters must be positive");
    if (b.kernel <= 0 || b.kernel % 2 == 0) throw ConfigError("model: conv kernel must be odd and positive");
    if (b.stride <= 0) throw ConfigError("model: conv stride must be positive");
  }
  for (int w : dense_widths) {
    if (w <= 0) throw ConfigError("model: dense widths must be positive");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("model: learning rate must be positive");
  if (epochs < 0) throw ConfigError("model: epochs must be non-negative");
  if (batch_size <= 0) throw ConfigError("model: batch size must be positive");
}

struct Model::Impl {
  ModelConfig config;
  InputShape shape;
  std::array<std::string, 2> class_names;
  TrainingLog log;
  std::vector<ConvLayer> conv;
  std::vector<DenseLayer> dense;

  void build() {
    config.validate();
    int c = shape.channels, h = shape.height, w = shape.width;
    for (const auto& b : config.conv_blocks) {
      ConvLayer l;
      l.in_c = c;
      l.in_h = h;
      l.in_w = w;
      l.out_c = b.filters;
      l.k = b.kernel;
      l.stride = b.stride;
      l.pad = b.kernel / 2;
      l.out_h = (h + 2 * l.pad - l.k) / l.stride + 1;
      l.out_w = (w + 2 * l.pad - l.k) / l.stride + 1;
      l.pool = b.pool;
      if (l.pool) {
        if (l.out_h < 2 || l.out_w < 2) throw ConfigError("model: feature map too small to pool");
        l.pool_h = l.out_h / 2;
        l.pool_w = l.out_w / 2;
      }
      if (l.out_h <= 0 || l.out_w <= 0) throw ConfigError("model: conv stack shrinks the input to nothing");
      l.weight = RowMat::Zero(l.out_c, static_cast<Eigen::Index>(l.in_c) * l.k * l.k);
      l.bias = Vec::Zero(l.out_c);
      c = l.out_c;
      h = l.block_h();
      w = l.block_w();
      conv.push_back(std::move(l));
    }
    int in = c * h * w;
    std::vector<int> widths = config.dense_widths;
    widths.push_back(2);
    for (int out : widths) {
      dense.push_back({RowMat::Zero(out, in), Vec::Zero(out)});
      in = out;
    }
  }

  void initialise() {
    std::mt19937_64 rng(config.seed);
    auto fill = [&rng](RowMat& m, double stddev) {
      std::normal_distribution<double> dist(0.0, stddev);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    };
    for (auto& l : conv) fill(l.weight, std::sqrt(2.0 / static_cast<double>(l.weight.cols())));
    for (std::size_t i = 0; i < dense.size(); ++i) {
      const double fan_in = static_cast<double>(dense[i].weight.cols());
      fill(dense[i].weight, std::sqrt((i + 1 == dense.size() ? 1.0 : 2.0) / fan_in));
    }
  }

  RowMat im2col(const RowMat& in, const ConvLayer& l) const {
    RowMat cols = RowMat::Zero(static_cast<Eigen::Index>(l.in_c) * l.k * l.k,
                               static_cast<Eigen::Index>(l.out_h) * l.out_w);
    for (int c = 0; c < l.in_c; ++c) {
      for (int ky = 0; ky < l.k; ++ky) {
        for (int kx = 0; kx < l.k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * l.k + ky) * l.k + kx;
          double* dst = cols.row(row).data();
          for (int oy = 0; oy < l.out_h; ++oy) {
            const int iy = oy * l.stride - l.pad + ky;
            if (iy < 0 || iy >= l.in_h) continue;
            for (int ox = 0; ox < l.out_w; ++ox) {
              const int ix = ox * l.stride - l.pad + kx;
              if (ix < 0 || ix >= l.in_w) continue;
              dst[oy * l.out_w + ox] = in(c, static_cast<Eigen::Index>(iy) * l.in_w + ix);
            }
          }
        }
      }
    }
    return cols;
  }

  RowMat col2im(const RowMat& dcols, const ConvLayer& l) const {
    RowMat din = RowMat::Zero(l.in_c, static_cast<Eigen::Index>(l.in_h) * l.in_w);
    for (int c = 0; c < l.in_c; ++c) {
      for (int ky = 0; ky < l.k; ++ky) {
        for (int kx = 0; kx < l.k; ++kx) {
          const Eigen::Index row = (static_cast<Eigen::Index>(c) * l.k + ky) * l.k + kx;
          const double* src = dcols.row(row).data();
          for (int oy = 0; oy < l.out_h; ++oy) {
            const int iy = oy * l.stride - l.pad + ky;
            if (iy < 0 || iy >= l.in_h) continue;
            for (int ox = 0; ox < l.out_w; ++ox) {
              const int ix = ox * l.stride - l.pad + kx;
              if (ix < 0 || ix >= l.in_w) continue;
              din(c, static_cast<Eigen::Index>(iy) * l.in_w + ix) += src[oy * l.out_w + ox];
            }
          }
        }
      }
    }
    return din;
  }

  static void pool_forward(const ConvLayer& l, ConvTrace& t) {
    t.pooled.resize(l.out_c, static_cast<Eigen::Index>(l.pool_h) * l.pool_w);
    t.argmax.resize(static_cast<std::size_t>(t.pooled.size()));
    for (int c = 0; c < l.out_c; ++c) {
      for (int py = 0; py < l.pool_h; ++py) {
        for (int px = 0; px < l.pool_w; ++px) {
          Eigen::Index best = (2 * py) * l.out_w + 2 * px;
          double best_v = t.act(c, best);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index idx = static_cast<Eigen::Index>(2 * py + dy) * l.out_w + 2 * px + dx;
              if (t.act(c, idx) > best_v) {
                best_v = t.act(c, idx);
                best = idx;
              }
            }
          }
          const Eigen::Index p = static_cast<Eigen::Index>(py) * l.pool_w + px;
          t.pooled(c, p) = best_v;
          t.argmax[static_cast<std::size_t>(c) * l.pool_h * l.pool_w + p] = best;
        }
      }
    }
  }

  static RowMat unpool(const ConvLayer& l, const ConvTrace& t, const RowMat& dpooled) {
    RowMat dact = RowMat::Zero(l.out_c, static_cast<Eigen::Index>(l.out_h) * l.out_w);
    const Eigen::Index plane = static_cast<Eigen::Index>(l.pool_h) * l.pool_w;
    for (int c = 0; c < l.out_c; ++c) {
      for (Eigen::Index p = 0; p < plane; ++p) {
        dact(c, t.argmax[static_cast<std::size_t>(c * plane + p)]) += dpooled(c, p);
      }
    }
    return dact;
  }

  void conv_forward(std::size_t i, const RowMat& in, ConvTrace& t) const {
    const ConvLayer& l = conv[i];
    t.cols = im2col(in, l);
    t.pre.noalias() = l.weight * t.cols;
    t.pre.colwise() += l.bias;
    t.act = t.pre.cwiseMax(0.0);
    if (l.pool) pool_forward(l, t);
  }

  static const RowMat& block_output(const ConvLayer& l, const ConvTrace& t) {
    return l.pool ? t.pooled : t.act;
  }

  void dense_forward(const Vec& flat, Trace& t) const {
    t.dense_in.resize(dense.size());
    t.dense_pre.resize(dense.size());
    Vec x = flat;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      t.dense_in[i] = x;
      t.dense_pre[i].noalias() = dense[i].weight * x;
      t.dense_pre[i] += dense[i].bias;
      x = (i + 1 == dense.size()) ? t.dense_pre[i] : Vec(t.dense_pre[i].cwiseMax(0.0));
    }
    t.logits = x;
  }

  static Vec flatten(const RowMat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

  RowMat image_matrix(const Image& image) const {
    return Eigen::Map<const RowMat>(image.pixels().data(), image.channels(),
                                    static_cast<Eigen::Index>(image.plane_size()));
  }

  void forward(const Image& image, Trace& t) const {
    t.conv.resize(conv.size());
    RowMat x = image_matrix(image);
    for (std::size_t i = 0; i < conv.size(); ++i) {
      conv_forward(i, i == 0 ? x : block_output(conv[i - 1], t.conv[i - 1]), t.conv[i]);
    }
    dense_forward(flatten(block_output(conv.back(), t.conv.back())), t);
  }

  Vec dense_backward(const Trace& t, Vec dout, Grads* g) const {
    for (std::size_t i = dense.size(); i-- > 0;) {
      if (i + 1 != dense.size()) {
        dout = dout.cwiseProduct((t.dense_pre[i].array() > 0.0).cast<double>().matrix());
      }
      if (g != nullptr) {
        g->dense_w[i].noalias() += dout * t.dense_in[i].transpose();
        g->dense_b[i] += dout;
      }
      dout = dense[i].weight.transpose() * dout;
    }
    return dout;
  }

  // Gradient w.r.t. the last conv layer's post-ReLU activations.
  RowMat head_backward_to_activations(const Trace& t, const Vec& dlogits, Grads* g) const {
    const Vec dflat = dense_backward(t, dlogits, g);
    const ConvLayer& l = conv.back();
    const RowMat dblock = Eigen::Map<const RowMat>(
        dflat.data(), l.out_c, static_cast<Eigen::Index>(l.block_h()) * l.block_w());
    return l.pool ? unpool(l, t.conv.back(), dblock) : dblock;
  }

  // Backward through conv layer i given d(act_i); returns d(input of layer i).
  RowMat conv_backward(std::size_t i, const ConvTrace& t, const RowMat& dact, Grads* g,
                       bool need_input) const {
    const ConvLayer& l = conv[i];
    const RowMat dpre = dact.cwiseProduct((t.pre.array() > 0.0).cast<double>().matrix());
    if (g != nullptr) {
      g->conv_w[i].noalias() += dpre * t.cols.transpose();
      g->conv_b[i] += dpre.rowwise().sum();
    }
    if (!need_input) return {};
    const RowMat dcols = l.weight.transpose() * dpre;
    return col2im(dcols, l);
  }

  // Full backward pass; returns d(image) as C x HW when need_input is set.
  RowMat backward(const Trace& t, const Vec& dlogits, Grads* g, bool need_input) const {
    RowMat dact = head_backward_to_activations(t, dlogits, g);
    for (std::size_t i = conv.size(); i-- > 0;) {
      const bool more = i > 0 || need_input;
      RowMat din = conv_backward(i, t.conv[i], dact, g, more);
      if (i == 0) return din;
      const ConvLayer& prev = conv[i - 1];
      dact = prev.pool ? unpool(prev, t.conv[i - 1], din) : din;
    }
    return {};
  }

  Grads zero_grads() const {
    Grads g;
    for (const auto& l : conv) {
      g.conv_w.push_back(RowMat::Zero(l.weight.rows(), l.weight.cols()));
      g.conv_b.push_back(Vec::Zero(l.bias.size()));
    }
    for (const auto& d : dense) {
      g.dense_w.push_back(RowMat::Zero(d.weight.rows(), d.weight.cols()));
      g.dense_b.push_back(Vec::Zero(d.bias.size()));
    }
    return g;
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    for (std::size_t i = 0; i < conv.size(); ++i) {
      f("conv" + std::to_string(i) + ".weight", conv[i].weight.data(), conv[i].weight.size());
      f("conv" + std::to_string(i) + ".bias", conv[i].bias.data(), conv[i].bias.size());
    }
    for (std::size_t i = 0; i < dense.size(); ++i) {
      f("dense" + std::to_string(i) + ".weight", dense[i].weight.data(), dense[i].weight.size());
      f("dense" + std::to_string(i) + ".bias", dense[i].bias.data(), dense[i].bias.size());
    }
  }
};

Model::Model(ModelConfig config, InputShape shape, std::array<std::string, 2> class_names)
    : impl_(std::make_unique<Impl>()) {
  if (shape.channels != 1 && shape.channels != 3) throw ConfigError("model: input channels must be 1 or 3");
  if (shape.height < Image::kMinSide || shape.width < Image::kMinSide) {
    throw ConfigError("model: input sides must be >= 8");
  }
  impl_->config = std::move(config);
  impl_->shape = shape;
  impl_->class_names = std::move(class_names);
  impl_->build();
  impl_->initialise();
}

Model::~Model() = default;
Model::Model(const Model& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}
Model& Model::operator=(const Model& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

const ModelConfig& Model::config() const noexcept { return impl_->config; }
const InputShape& Model::input_shape() const noexcept { return impl_->shape; }
const std::array<std::string, 2>& Model::class_names() const noexcept { return impl_->class_names; }
const TrainingLog& Model::training_log() const noexcept { return impl_->log; }
std::size_t Model::conv_layer_count() const noexcept { return impl_->conv.size(); }
std::size_t Model::dense_layer_count() const noexcept { return impl_->dense.size(); }

std::span<double> Model::conv_weights(std::size_t i) {
  auto& w = impl_->conv.at(i).weight;
  return {w.data(), static_cast<std::size_t>(w.size())};
}
std::span<double> Model::conv_bias(std::size_t i) {
  auto& b = impl_->conv.at(i).bias;
  return {b.data(), static_cast<std::size_t>(b.size())};
}
std::span<double> Model::dense_weights(std::size_t i) {
  auto& w = impl_->dense.at(i).weight;
  return {w.data(), static_cast<std::size_t>(w.size())};
}
std::span<double> Model::dense_bias(std::size_t i) {
  auto& b = impl_->dense.at(i).bias;
  return {b.data(), static_cast<std::size_t>(b.size())};
}
std::span<const double> Model::conv_weights(std::size_t i) const {
  const auto& w = impl_->conv.at(i).weight;
  return {w.data(), static_cast<std::size_t>(w.size())};
}
std::span<const double> Model::conv_bias(std::size_t i) const {
  const auto& b = impl_->conv.at(i).bias;
  return {b.data(), static_cast<std::size_t>(b.size())};
}
std::span<const double> Model::dense_weights(std::size_t i) const {
  const auto& w = impl_->dense.at(i).weight;
  return {w.data(), static_cast<std::size_t>(w.size())};
}
std::span<const double> Model::dense_bias(std::size_t i) const {
  const auto& b = impl_->dense.at(i).bias;
  return {b.data(), static_cast<std::size_t>(b.size())};
}

std::size_t Model::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : impl_->conv) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  for (const auto& d : impl_->dense) n += static_cast<std::size_t>(d.weight.size() + d.bias.size());
  return n;
}

void Model::check_input(const Image& image) const {
  const auto& s = impl_->shape;
  if (image.channels() != s.channels || image.height() != s.height || image.width() != s.width) {
    throw ValidationError("image shape " + std::to_string(image.channels()) + "x" +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                          " does not match model input " + std::to_string(s.channels) + "x" +
                          std::to_string(s.height) + "x" + std::to_string(s.width));
  }
}

std::array<double, 2> Model::logits(const Image& image) const {
  check_input(image);
  Trace t;
  impl_->forward(image, t);
  return {t.logits[0], t.logits[1]};
}

Prediction Model::predict(const Image& image) const {
  check_input(image);
  Trace t;
  impl_->forward(image, t);
  Prediction p;
  softmax2(t.logits, p.probabilities);
  p.label = p.probabilities[1] > p.probabilities[0] ? Label::target : Label::source;
  return p;
}

double Model::loss(const Image& image, Label label) const {
  check_input(image);
  Trace t;
  impl_->forward(image, t);
  return cross_entropy(t.logits, index_of(label));
}

Tensor3 Model::final_conv_activations(const Image& image) const {
  check_input(image);
  Trace t;
  impl_->forward(image, t);
  const ConvLayer& l = impl_->conv.back();
  Tensor3 out(l.out_c, l.out_h, l.out_w);
  const RowMat& act = t.conv.back().act;
  std::copy(act.data(), act.data() + act.size(), out.values.begin());
  return out;
}

Tensor3 Model::loss_gradient_wrt_input(const Image& image, Label label) const {
  check_input(image);
  Trace t;
  impl_->forward(image, t);
  std::array<double, 2> p{};
  softmax2(t.logits, p);
  Vec dlogits(2);
  dlogits << p[0], p[1];
  dlogits[index_of(label)] -= 1.0;
  const RowMat din = impl_->backward(t, dlogits, nullptr, true);
  Tensor3 out(image.channels(), image.height(), image.width());
  std::copy(din.data(), din.data() + din.size(), out.values.begin());
  for (double v : out.values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite input gradient");
  }
  return out;
}

Tensor3 Model::class_gradient_wrt_activations(const Image& image, int class_index) const {
  check_input(image);
  if (class_index != 0 && class_index != 1) throw ValidationError("class index must be 0 or 1");
  Trace t;
  impl_->forward(image, t);
  Vec dlogits = Vec::Zero(2);
  dlogits[class_index] = 1.0;
  const RowMat dact = impl_->head_backward_to_activations(t, dlogits, nullptr);
  const ConvLayer& l = impl_->conv.back();
  Tensor3 out(l.out_c, l.out_h, l.out_w);
  std::copy(dact.data(), dact.data() + dact.size(), out.values.begin());
  for (double v : out.values) {
    if (!std::isfinite(v)) throw NumericalError("non-finite activation gradient");
  }
  return out;
}

std::array<double, 2> Model::logits_from_activations(const Tensor3& activations) const {
  const ConvLayer& l = impl_->conv.back();
  if (activations.channels != l.out_c || activations.height != l.out_h || activations.width != l.out_w) {
    throw ValidationError("activation stack does not match the last conv layer");
  }
  ConvTrace ct;
  ct.act = Eigen::Map<const RowMat>(activations.values.data(), l.out_c,
                                    static_cast<Eigen::Index>(l.out_h) * l.out_w);
  if (l.pool) Impl::pool_forward(l, ct);
  Trace t;
  impl_->dense_forward(Impl::flatten(Impl::block_output(l, ct)), t);
  return {t.logits[0], t.logits[1]};
}

Model train(const LabeledImageSet& train_set, const ModelConfig& config) {
  config.validate();
  if (train_set.empty()) throw ValidationError("train: empty training set");
  train_set.validate();
  const Image& first = train_set.images.front();
  Model model(config, InputShape{first.channels(), first.height(), first.width()},
              train_set.class_names);
  Model::Impl& m = *model.impl_;

  Grads adam_m = m.zero_grads();
  Grads adam_v = m.zero_grads();
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0xA5A5A5A5DEADBEEFull);
  Trace trace;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      Grads g = m.zero_grads();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        const int label = index_of(train_set.labels[idx]);
        m.forward(train_set.images[idx], trace);
        total += cross_entropy(trace.logits, label);
        std::array<double, 2> p{};
        softmax2(trace.logits, p);
        Vec dlogits(2);
        dlogits << p[0], p[1];
        dlogits[label] -= 1.0;
        m.backward(trace, dlogits, &g, false);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto update = [&](auto& param, auto& grad, auto& mom, auto& vel) {
        grad *= scale;
        mom = beta1 * mom + (1.0 - beta1) * grad;
        vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
        param.array() -= config.learning_rate * (mom.array() / c1) /
                         ((vel.array() / c2).sqrt() + adam_eps);
      };
      for (std::size_t i = 0; i < m.conv.size(); ++i) {
        update(m.conv[i].weight, g.conv_w[i], adam_m.conv_w[i], adam_v.conv_w[i]);
        update(m.conv[i].bias, g.conv_b[i], adam_m.conv_b[i], adam_v.conv_b[i]);
      }
      for (std::size_t i = 0; i < m.dense.size(); ++i) {
        update(m.dense[i].weight, g.dense_w[i], adam_m.dense_w[i], adam_v.dense_w[i]);
        update(m.dense[i].bias, g.dense_b[i], adam_m.dense_b[i], adam_v.dense_b[i]);
      }
    }
    const double mean = total / static_cast<double>(train_set.size());
    if (!std::isfinite(mean)) throw TrainingError(epoch, "training loss diverged (non-finite)");
    m.log.epoch_loss.push_back(mean);
    spdlog::debug("epoch {} loss {:.6f}", epoch, mean);
  }
  if (m.log.epoch_loss.size() >= 2 && !(m.log.epoch_loss.back() < m.log.epoch_loss.front())) {
    m.log.warnings.push_back("training loss did not decrease from the first to the last epoch");
    spdlog::warn("{}", m.log.warnings.back());
  }
  return model;
}

double accuracy(const Model& model, const LabeledImageSet& set) {
  if (set.empty()) throw ValidationError("accuracy: empty set");
  if (set.images.size() != set.labels.size()) throw ValidationError("accuracy: label count mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (model.predict(set.images[i]).label == set.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

void save_model(const Model& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["kind"] = "model";
  header["config"] = model.config();
  header["input_shape"] = model.input_shape();
  header["class_names"] = model.class_names();
  header["training_log"] = {{"epoch_loss", model.training_log().epoch_loss},
                            {"warnings", model.training_log().warnings}};
  std::vector<double> payload;
  nlohmann::json tensors = nlohmann::json::array();
  model.impl_->for_each_tensor([&](const std::string& name, const double* data, Eigen::Index n) {
    tensors.push_back({{"name", name}, {"size", n}});
    payload.insert(payload.end(), data, data + n);
  });
  header["tensors"] = tensors;
  io::write_container(path, header, payload);
}

Model load_model(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "model");
  try {
    Model model(c.header.at("config").get<ModelConfig>(), c.header.at("input_shape").get<InputShape>(),
                c.header.at("class_names").get<std::array<std::string, 2>>());
    const auto& log = c.header.at("training_log");
    model.impl_->log.epoch_loss = log.at("epoch_loss").get<std::vector<double>>();
    model.impl_->log.warnings = log.at("warnings").get<std::vector<std::string>>();
    const auto& tensors = c.header.at("tensors");
    std::size_t offset = 0;
    std::size_t k = 0;
    bool ok = true;
    model.impl_->for_each_tensor([&](const std::string& name, double* data, Eigen::Index n) {
      if (k >= tensors.size() || tensors[k].at("name") != name ||
          tensors[k].at("size").get<Eigen::Index>() != n || offset + static_cast<std::size_t>(n) > c.payload.size()) {
        ok = false;
        return;
      }
      std::copy(c.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                c.payload.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(n)), data);
      offset += static_cast<std::size_t>(n);
      ++k;
    });
    if (!ok || k != tensors.size() || offset != c.payload.size()) {
      throw IngestionError(path.string(), "checkpoint tensors do not match its architecture");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(path.string(), std::string("malformed checkpoint header: ") + e.what());
  }
}

}  // namespace advregions
