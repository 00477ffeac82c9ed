#include "tactile/model.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace tactile {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

int parse_int_token(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer '" + s + "' in layer stack");
  }
  if (used != s.size()) throw std::invalid_argument("bad integer '" + s + "' in layer stack");
  return v;
}

double parse_double_token(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number '" + s + "' in layer stack");
  }
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "' in layer stack");
  return v;
}

Activation parse_activation(const std::string& s, bool allow_softmax) {
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  if (s == "softmax" && allow_softmax) return Activation::Softmax;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

LayerSpec LayerSpec::conv2d(int filters, int kernel, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.filters = filters;
  s.kernel = kernel;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::maxpool2d(int pool) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool2d;
  s.pool = pool;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::dense(int units, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

std::vector<LayerSpec> parse_layer_stack(const std::string& text, int class_count) {
  std::vector<LayerSpec> out;
  for (const std::string& token : split(text, ',')) {
    if (token.empty()) throw std::invalid_argument("empty layer token in stack");
    std::vector<std::string> parts = split(token, ':');
    const std::string& kind = parts[0];
    auto argc = parts.size() - 1;
    if (kind == "conv2d") {
      if (argc < 2 || argc > 3) throw std::invalid_argument("conv2d takes filters:kernel[:act]");
      Activation act = argc == 3 ? parse_activation(parts[3], false) : Activation::Relu;
      int filters = parse_int_token(parts[1]);
      int kernel = parse_int_token(parts[2]);
      if (filters < 1 || kernel < 1) {
        throw std::invalid_argument("conv2d needs positive filters and kernel in '" + token + "'");
      }
      out.push_back(LayerSpec::conv2d(filters, kernel, act));
    } else if (kind == "maxpool2d") {
      if (argc != 1) throw std::invalid_argument("maxpool2d takes one pool size");
      int pool = parse_int_token(parts[1]);
      if (pool < 1) throw std::invalid_argument("maxpool2d needs a positive size in '" + token + "'");
      out.push_back(LayerSpec::maxpool2d(pool));
    } else if (kind == "flatten") {
      if (argc != 0) throw std::invalid_argument("flatten takes no arguments");
      out.push_back(LayerSpec::flatten());
    } else if (kind == "dense") {
      if (argc < 1 || argc > 2) throw std::invalid_argument("dense takes units[:act]");
      int units = parts[1] == "C" ? class_count : parse_int_token(parts[1]);
      if (units < 1) throw std::invalid_argument("dense needs positive units in '" + token + "'");
      Activation act = argc == 2 ? parse_activation(parts[2], true) : Activation::Relu;
      out.push_back(LayerSpec::dense(units, act));
    } else if (kind == "dropout") {
      if (argc != 1) throw std::invalid_argument("dropout takes one rate");
      double rate = parse_double_token(parts[1]);
      if (!(rate >= 0.0 && rate < 1.0)) {
        throw std::invalid_argument("dropout rate must be in [0, 1) in '" + token + "'");
      }
      out.push_back(LayerSpec::dropout(rate));
    } else {
      throw std::invalid_argument("unknown layer '" + kind + "'");
    }
  }
  return out;
}

std::vector<LayerSpec> preset_layer_stack(const std::string& name, int class_count) {
  if (name == "mlp_desk") {
    return parse_layer_stack("flatten,dense:32:relu,dense:C:softmax", class_count);
  }
  if (name == "mnist_cnn") {
    return parse_layer_stack(
        "conv2d:8:3,maxpool2d:2,conv2d:8:3,maxpool2d:2,flatten,dense:C:softmax",
        class_count);
  }
  if (name == "fashion_cnn") {
    return parse_layer_stack(
        "conv2d:16:3,maxpool2d:2,conv2d:32:3,maxpool2d:2,conv2d:64:3,flatten,"
        "dense:64:relu,dropout:0.25,dense:C:softmax",
        class_count);
  }
  if (name == "cifar_cnn") {
    return parse_layer_stack(
        "conv2d:32:3,conv2d:32:3,maxpool2d:2,dropout:0.3,conv2d:64:3,conv2d:64:3,"
        "maxpool2d:2,dropout:0.4,flatten,dense:64:relu,dropout:0.5,dense:C:softmax",
        class_count);
  }
  throw std::invalid_argument("unknown model preset '" + name + "'");
}

bool is_preset_name(const std::string& name) {
  return name == "mlp_desk" || name == "mnist_cnn" || name == "fashion_cnn" ||
         name == "cifar_cnn";
}

Model::Model(std::vector<LayerSpec> layers, Shape input, std::uint64_t seed)
    : input_(input) {
  if (input.height <= 0 || input.width <= 0 || input.channels <= 0) {
    throw std::invalid_argument("model input shape must be positive");
  }
  if (layers.empty()) throw std::invalid_argument("model needs at least one layer");

  Shape cur = input;
  bool flattened = false;
  std::size_t flatten_at = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& spec = layers[i];
    Layer layer;
    layer.spec = spec;
    layer.in = cur;
    bool last = i + 1 == layers.size();
    switch (spec.kind) {
      case LayerKind::Conv2d: {
        if (flattened) throw std::invalid_argument("conv2d after flatten");
        if (spec.filters < 1 || spec.kernel < 1) {
          throw std::invalid_argument("conv2d needs positive filters and kernel");
        }
        if (cur.height < spec.kernel || cur.width < spec.kernel) {
          throw std::invalid_argument("conv2d kernel larger than its input");
        }
        if (spec.activation == Activation::Softmax) {
          throw std::invalid_argument("softmax is only valid on the final dense layer");
        }
        layer.out = {cur.height - spec.kernel + 1, cur.width - spec.kernel + 1,
                     spec.filters};
        layer.w.assign(static_cast<std::size_t>(spec.filters) * cur.channels *
                           spec.kernel * spec.kernel,
                       0.0);
        layer.b.assign(static_cast<std::size_t>(spec.filters), 0.0);
        break;
      }
      case LayerKind::MaxPool2d: {
        if (flattened) throw std::invalid_argument("maxpool2d after flatten");
        if (spec.pool < 1) throw std::invalid_argument("maxpool2d needs a positive pool size");
        if (cur.height < spec.pool || cur.width < spec.pool) {
          throw std::invalid_argument("maxpool2d window larger than its input");
        }
        layer.out = {cur.height / spec.pool, cur.width / spec.pool, cur.channels};
        break;
      }
      case LayerKind::Flatten: {
        if (flattened) throw std::invalid_argument("model must have exactly one flatten");
        layer.out = {1, 1, cur.size()};
        flattened = true;
        flatten_at = i;
        break;
      }
      case LayerKind::Dense: {
        if (!flattened) throw std::invalid_argument("dense before flatten");
        if (spec.units < 1) throw std::invalid_argument("dense needs positive units");
        if (spec.activation == Activation::Softmax && !last) {
          throw std::invalid_argument("softmax is only valid on the final dense layer");
        }
        layer.out = {1, 1, spec.units};
        layer.w.assign(static_cast<std::size_t>(spec.units) * cur.size(), 0.0);
        layer.b.assign(static_cast<std::size_t>(spec.units), 0.0);
        break;
      }
      case LayerKind::Dropout: {
        if (!(spec.rate >= 0.0 && spec.rate < 1.0)) {
          throw std::invalid_argument("dropout rate must be in [0, 1)");
        }
        layer.out = cur;
        break;
      }
    }
    cur = layer.out;
    layers_.push_back(std::move(layer));
  }
  if (!flattened) throw std::invalid_argument("model must have exactly one flatten");
  const Layer& head = layers_.back();
  if (head.spec.kind != LayerKind::Dense || head.spec.activation != Activation::Softmax) {
    throw std::invalid_argument("model must end with a softmax dense layer");
  }
  if (head.spec.units < 2) throw std::invalid_argument("model needs at least 2 classes");
  class_count_ = head.spec.units;
  feature_cut_ = flatten_at;
  init_weights(seed);
}

void Model::set_feature_cut(std::size_t layer_index) {
  if (layer_index >= layers_.size()) {
    throw std::out_of_range("feature cut index out of range");
  }
  feature_cut_ = layer_index;
}

int Model::feature_size() const { return layers_[feature_cut_].out.size(); }

void Model::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Layer& layer : layers_) {
    if (layer.w.empty()) continue;
    int fan_in = layer.spec.kind == LayerKind::Conv2d
                     ? layer.in.channels * layer.spec.kernel * layer.spec.kernel
                     : layer.in.size();
    double limit = std::sqrt(6.0 / fan_in);
    for (double& w : layer.w) w = (2.0 * uniform01(rng) - 1.0) * limit;
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
}

const std::vector<double>& Model::forward(const Sample& x, bool train_mode,
                                          std::mt19937_64* rng, Cache& cache,
                                          std::size_t limit) const {
  if (!(x.shape == input_)) {
    throw std::invalid_argument("sample shape does not match model input");
  }
  cache.act.resize(layers_.size() + 1);
  cache.pool_src.assign(layers_.size(), {});
  cache.drop_mask.assign(layers_.size(), {});
  cache.act[0] = x.data;

  for (std::size_t li = 0; li < limit; ++li) {
    const Layer& layer = layers_[li];
    const std::vector<double>& in = cache.act[li];
    std::vector<double>& out = cache.act[li + 1];
    switch (layer.spec.kind) {
      case LayerKind::Conv2d: {
        const int ih = layer.in.height, iw = layer.in.width, ic = layer.in.channels;
        const int oh = layer.out.height, ow = layer.out.width, of = layer.out.channels;
        const int k = layer.spec.kernel;
        out.assign(static_cast<std::size_t>(oh) * ow * of, 0.0);
        (void)ih;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            for (int f = 0; f < of; ++f) {
              double acc = layer.b[static_cast<std::size_t>(f)];
              for (int c = 0; c < ic; ++c) {
                const double* wrow =
                    layer.w.data() + (static_cast<std::size_t>(f) * ic + c) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                  const double* irow = in.data() +
                      (static_cast<std::size_t>(oy + ky) * iw + ox) * ic + c;
                  for (int kx = 0; kx < k; ++kx) {
                    acc += irow[static_cast<std::size_t>(kx) * ic] * wrow[ky * k + kx];
                  }
                }
              }
              if (layer.spec.activation == Activation::Relu && acc < 0.0) acc = 0.0;
              out[(static_cast<std::size_t>(oy) * ow + ox) * of + f] = acc;
            }
          }
        }
        break;
      }
      case LayerKind::MaxPool2d: {
        const int iw = layer.in.width, ic = layer.in.channels;
        const int oh = layer.out.height, ow = layer.out.width;
        const int p = layer.spec.pool;
        out.assign(static_cast<std::size_t>(oh) * ow * ic, 0.0);
        cache.pool_src[li].assign(out.size(), 0);
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            for (int c = 0; c < ic; ++c) {
              int best = ((oy * p) * iw + ox * p) * ic + c;
              double bv = in[static_cast<std::size_t>(best)];
              for (int py = 0; py < p; ++py) {
                for (int px = 0; px < p; ++px) {
                  int idx = ((oy * p + py) * iw + (ox * p + px)) * ic + c;
                  if (in[static_cast<std::size_t>(idx)] > bv) {
                    bv = in[static_cast<std::size_t>(idx)];
                    best = idx;
                  }
                }
              }
              std::size_t o = (static_cast<std::size_t>(oy) * ow + ox) * ic + c;
              out[o] = bv;
              cache.pool_src[li][o] = best;
            }
          }
        }
        break;
      }
      case LayerKind::Flatten: {
        out = in;
        break;
      }
      case LayerKind::Dense: {
        const auto in_n = static_cast<Eigen::Index>(layer.in.size());
        const auto out_n = static_cast<Eigen::Index>(layer.out.size());
        out.assign(static_cast<std::size_t>(out_n), 0.0);
        Eigen::Map<const RowMat> w(layer.w.data(), out_n, in_n);
        Eigen::Map<const Eigen::VectorXd> b(layer.b.data(), out_n);
        Eigen::Map<const Eigen::VectorXd> xin(in.data(), in_n);
        Eigen::Map<Eigen::VectorXd> y(out.data(), out_n);
        y.noalias() = w * xin + b;
        if (layer.spec.activation == Activation::Relu) {
          for (double& v : out) v = v > 0.0 ? v : 0.0;
        } else if (layer.spec.activation == Activation::Softmax) {
          double mx = *std::max_element(out.begin(), out.end());
          double sum = 0.0;
          for (double& v : out) {
            v = std::exp(v - mx);
            sum += v;
          }
          for (double& v : out) v /= sum;
        }
        break;
      }
      case LayerKind::Dropout: {
        out = in;
        if (train_mode && layer.spec.rate > 0.0) {
          if (rng == nullptr) {
            throw std::logic_error("dropout in train mode needs a generator");
          }
          cache.drop_mask[li].assign(out.size(), 1);
          double scale = 1.0 / (1.0 - layer.spec.rate);
          for (std::size_t i = 0; i < out.size(); ++i) {
            if (uniform01(*rng) < layer.spec.rate) {
              cache.drop_mask[li][i] = 0;
              out[i] = 0.0;
            } else {
              out[i] *= scale;
            }
          }
        }
        break;
      }
    }
  }
  return cache.act[limit];
}

void Model::backward(const Cache& cache, std::vector<double> grad_out,
                     std::vector<std::vector<double>>& gw,
                     std::vector<std::vector<double>>& gb) const {
  std::vector<double> g = std::move(grad_out);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::vector<double>& in = cache.act[li];
    const std::vector<double>& out = cache.act[li + 1];
    switch (layer.spec.kind) {
      case LayerKind::Dense: {
        if (layer.spec.activation == Activation::Relu) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (out[i] <= 0.0) g[i] = 0.0;
          }
        }
        const auto in_n = static_cast<Eigen::Index>(layer.in.size());
        const auto out_n = static_cast<Eigen::Index>(layer.out.size());
        Eigen::Map<const RowMat> w(layer.w.data(), out_n, in_n);
        Eigen::Map<const Eigen::VectorXd> gvec(g.data(), out_n);
        Eigen::Map<const Eigen::VectorXd> xin(in.data(), in_n);
        Eigen::Map<RowMat> gwm(gw[li].data(), out_n, in_n);
        Eigen::Map<Eigen::VectorXd> gbm(gb[li].data(), out_n);
        gwm.noalias() += gvec * xin.transpose();
        gbm += gvec;
        std::vector<double> gin(static_cast<std::size_t>(in_n), 0.0);
        Eigen::Map<Eigen::VectorXd> ginm(gin.data(), in_n);
        ginm.noalias() = w.transpose() * gvec;
        g = std::move(gin);
        break;
      }
      case LayerKind::Conv2d: {
        if (layer.spec.activation == Activation::Relu) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (out[i] <= 0.0) g[i] = 0.0;
          }
        }
        const int iw = layer.in.width, ic = layer.in.channels;
        const int oh = layer.out.height, ow = layer.out.width, of = layer.out.channels;
        const int k = layer.spec.kernel;
        std::vector<double> gin(in.size(), 0.0);
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            for (int f = 0; f < of; ++f) {
              double go = g[(static_cast<std::size_t>(oy) * ow + ox) * of + f];
              if (go == 0.0) continue;
              gb[li][static_cast<std::size_t>(f)] += go;
              for (int c = 0; c < ic; ++c) {
                std::size_t wbase = (static_cast<std::size_t>(f) * ic + c) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                  std::size_t ibase =
                      (static_cast<std::size_t>(oy + ky) * iw + ox) * ic + c;
                  for (int kx = 0; kx < k; ++kx) {
                    std::size_t ii = ibase + static_cast<std::size_t>(kx) * ic;
                    gw[li][wbase + ky * k + kx] += go * in[ii];
                    gin[ii] += go * layer.w[wbase + ky * k + kx];
                  }
                }
              }
            }
          }
        }
        g = std::move(gin);
        break;
      }
      case LayerKind::MaxPool2d: {
        std::vector<double> gin(in.size(), 0.0);
        const std::vector<int>& src = cache.pool_src[li];
        for (std::size_t o = 0; o < g.size(); ++o) {
          gin[static_cast<std::size_t>(src[o])] += g[o];
        }
        g = std::move(gin);
        break;
      }
      case LayerKind::Flatten:
        break;
      case LayerKind::Dropout: {
        const std::vector<std::uint8_t>& mask = cache.drop_mask[li];
        if (!mask.empty()) {
          double scale = 1.0 / (1.0 - layer.spec.rate);
          for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = mask[i] ? g[i] * scale : 0.0;
          }
        }
        break;
      }
    }
  }
}

std::vector<double> Model::predict_proba(const Sample& x) const {
  thread_local Cache scratch;
  return forward(x, false, nullptr, scratch, layers_.size());
}

std::vector<double> Model::extract_features(const Sample& x) const {
  thread_local Cache scratch;
  return forward(x, false, nullptr, scratch, feature_cut_ + 1);
}

namespace {

void check_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train batch size must be >= 1");
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must be in [0, 1)");
  }
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be > 0");
}

}  // namespace

double Model::train(const Dataset& data, const TrainConfig& cfg, bool warm_start) {
  data.validate();
  if (!(data.shape == input_)) {
    throw std::invalid_argument("training data shape does not match model input");
  }
  if (data.class_count != class_count_) {
    throw std::invalid_argument("training data class count does not match model");
  }
  check_train_config(cfg);

  if (!warm_start) init_weights(cfg.seed);
  for (Layer& layer : layers_) {
    layer.mw.assign(layer.w.size(), 0.0);
    layer.vw.assign(layer.w.size(), 0.0);
    layer.mb.assign(layer.b.size(), 0.0);
    layer.vb.assign(layer.b.size(), 0.0);
  }

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x747261696Eull));
  const std::size_t n = data.items.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<std::vector<double>> gw(layers_.size()), gb(layers_.size());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    gw[li].resize(layers_[li].w.size());
    gb[li].resize(layers_[li].b.size());
  }

  Cache cache;
  long t = 0;
  double epoch_mean = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t m = std::min<std::size_t>(cfg.batch_size, n - start);
      for (std::size_t li = 0; li < layers_.size(); ++li) {
        std::fill(gw[li].begin(), gw[li].end(), 0.0);
        std::fill(gb[li].begin(), gb[li].end(), 0.0);
      }
      for (std::size_t bi = 0; bi < m; ++bi) {
        const LabeledSample& item = data.items[order[start + bi]];
        const std::vector<double>& probs = forward(item.sample, true, &rng, cache, layers_.size());
        double p = std::max(probs[static_cast<std::size_t>(item.label)], 1e-300);
        total -= std::log(p);
        std::vector<double> grad(probs);
        grad[static_cast<std::size_t>(item.label)] -= 1.0;
        for (double& gv : grad) gv /= static_cast<double>(m);
        backward(cache, std::move(grad), gw, gb);
      }
      ++t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
      for (std::size_t li = 0; li < layers_.size(); ++li) {
        Layer& layer = layers_[li];
        auto step = [&](std::vector<double>& w, std::vector<double>& mo,
                        std::vector<double>& vo, const std::vector<double>& gr) {
          for (std::size_t i = 0; i < w.size(); ++i) {
            mo[i] = cfg.beta1 * mo[i] + (1.0 - cfg.beta1) * gr[i];
            vo[i] = cfg.beta2 * vo[i] + (1.0 - cfg.beta2) * gr[i] * gr[i];
            w[i] -= cfg.learning_rate * (mo[i] / bc1) / (std::sqrt(vo[i] / bc2) + cfg.epsilon);
          }
        };
        step(layer.w, layer.mw, layer.vw, gw[li]);
        step(layer.b, layer.mb, layer.vb, gb[li]);
      }
    }
    epoch_mean = total / static_cast<double>(n);
    if (!std::isfinite(epoch_mean)) {
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch));
    }
  }
  return epoch_mean;
}

double Model::mean_loss(const Dataset& data) const {
  data.validate();
  if (!(data.shape == input_)) {
    throw std::invalid_argument("data shape does not match model input");
  }
  thread_local Cache scratch;
  double total = 0.0;
  for (const LabeledSample& item : data.items) {
    const std::vector<double>& probs = forward(item.sample, false, nullptr, scratch, layers_.size());
    total -= std::log(std::max(probs[static_cast<std::size_t>(item.label)], 1e-300));
  }
  return total / static_cast<double>(data.items.size());
}

double Model::evaluate(const Dataset& data) const {
  data.validate();
  if (!(data.shape == input_)) {
    throw std::invalid_argument("data shape does not match model input");
  }
  thread_local Cache scratch;
  std::size_t correct = 0;
  for (const LabeledSample& item : data.items) {
    const std::vector<double>& probs = forward(item.sample, false, nullptr, scratch, layers_.size());
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c) {
      if (probs[c] > probs[best]) best = c;
    }
    if (static_cast<int>(best) == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.items.size());
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.w.size() + layer.b.size();
  return n;
}

std::vector<double> Model::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Layer& layer : layers_) {
    flat.insert(flat.end(), layer.w.begin(), layer.w.end());
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
  }
  return flat;
}

void Model::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector length mismatch");
  }
  std::size_t pos = 0;
  for (Layer& layer : layers_) {
    std::copy_n(flat.begin() + pos, layer.w.size(), layer.w.begin());
    pos += layer.w.size();
    std::copy_n(flat.begin() + pos, layer.b.size(), layer.b.begin());
    pos += layer.b.size();
  }
}

std::vector<double> Model::loss_gradient(const Dataset& data) const {
  data.validate();
  if (!(data.shape == input_)) {
    throw std::invalid_argument("data shape does not match model input");
  }
  std::vector<std::vector<double>> gw(layers_.size()), gb(layers_.size());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    gw[li].assign(layers_[li].w.size(), 0.0);
    gb[li].assign(layers_[li].b.size(), 0.0);
  }
  Cache cache;
  const double n = static_cast<double>(data.items.size());
  for (const LabeledSample& item : data.items) {
    const std::vector<double>& probs = forward(item.sample, false, nullptr, cache, layers_.size());
    std::vector<double> grad(probs);
    grad[static_cast<std::size_t>(item.label)] -= 1.0;
    for (double& gv : grad) gv /= n;
    backward(cache, std::move(grad), gw, gb);
  }
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    flat.insert(flat.end(), gw[li].begin(), gw[li].end());
    flat.insert(flat.end(), gb[li].begin(), gb[li].end());
  }
  return flat;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

void write_f32_tensor(std::ostream& os, const std::vector<double>& data,
                      const std::vector<std::uint32_t>& dims) {
  write_u32(os, static_cast<std::uint32_t>(dims.size()));
  std::size_t n = 1;
  for (std::uint32_t d : dims) {
    write_u32(os, d);
    n *= d;
  }
  if (n != data.size()) throw std::logic_error("tensor dims do not match data");
  for (double v : data) {
    float f = static_cast<float>(v);
    os.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
}

void read_f32_tensor(std::istream& is, std::vector<double>& data,
                     const std::vector<std::uint32_t>& want_dims) {
  std::uint32_t rank = read_u32(is);
  if (rank != want_dims.size()) throw std::runtime_error("checkpoint tensor rank mismatch");
  std::size_t n = 1;
  for (std::uint32_t want : want_dims) {
    std::uint32_t d = read_u32(is);
    if (d != want) throw std::runtime_error("checkpoint tensor shape mismatch");
    n *= d;
  }
  data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    float f = 0;
    is.read(reinterpret_cast<char*>(&f), sizeof f);
    if (!is) throw std::runtime_error("checkpoint truncated");
    data[i] = static_cast<double>(f);
  }
}

std::vector<std::uint32_t> weight_dims(const Model&, const LayerSpec& spec, Shape in) {
  if (spec.kind == LayerKind::Conv2d) {
    return {static_cast<std::uint32_t>(spec.filters),
            static_cast<std::uint32_t>(in.channels),
            static_cast<std::uint32_t>(spec.kernel),
            static_cast<std::uint32_t>(spec.kernel)};
  }
  return {static_cast<std::uint32_t>(spec.units),
          static_cast<std::uint32_t>(in.size())};
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

void Model::save_weights(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write("TACM", 4);
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<std::uint32_t>(layers_.size()));
  for (const Layer& layer : layers_) {
    write_u32(os, static_cast<std::uint32_t>(layer.spec.kind));
    if (layer.w.empty()) {
      write_u32(os, 0);
      continue;
    }
    write_u32(os, 2);
    write_f32_tensor(os, layer.w, weight_dims(*this, layer.spec, layer.in));
    write_f32_tensor(os, layer.b,
                     {static_cast<std::uint32_t>(layer.b.size())});
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

void Model::load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TACM", 4) != 0) {
    throw std::runtime_error("bad checkpoint magic");
  }
  if (read_u32(is) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  if (read_u32(is) != layers_.size()) {
    throw std::runtime_error("checkpoint layer count mismatch");
  }
  for (Layer& layer : layers_) {
    if (read_u32(is) != static_cast<std::uint32_t>(layer.spec.kind)) {
      throw std::runtime_error("checkpoint layer kind mismatch");
    }
    std::uint32_t tensors = read_u32(is);
    if (layer.w.empty()) {
      if (tensors != 0) throw std::runtime_error("unexpected tensors for layer");
      continue;
    }
    if (tensors != 2) throw std::runtime_error("expected weight and bias tensors");
    read_f32_tensor(is, layer.w, weight_dims(*this, layer.spec, layer.in));
    read_f32_tensor(is, layer.b, {static_cast<std::uint32_t>(layer.b.size())});
  }
}

}  // namespace tactile
