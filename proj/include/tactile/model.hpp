#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tactile/core.hpp"

namespace tactile {

enum class LayerKind { Conv2d, MaxPool2d, Flatten, Dense, Dropout };
enum class Activation { None, Relu, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  int filters = 0;   // conv2d
  int kernel = 0;    // conv2d
  int pool = 0;      // maxpool2d
  int units = 0;     // dense
  double rate = 0.0; // dropout
  Activation activation = Activation::None;

  static LayerSpec conv2d(int filters, int kernel, Activation act = Activation::Relu);
  static LayerSpec maxpool2d(int pool);
  static LayerSpec flatten();
  static LayerSpec dense(int units, Activation act = Activation::Relu);
  static LayerSpec dropout(double rate);
};

// Parses a comma-separated layer stack, e.g.
//   "conv2d:8:3,maxpool2d:2,flatten,dense:8,dense:C:softmax"
// where dense units "C" resolves to class_count. Activations: relu (default
// for conv2d/dense), none, softmax (dense only).
std::vector<LayerSpec> parse_layer_stack(const std::string& text, int class_count);

// Named stacks: mlp_desk, mnist_cnn, fashion_cnn, cifar_cnn.
std::vector<LayerSpec> preset_layer_stack(const std::string& name, int class_count);

// True for preset names accepted by preset_layer_stack.
bool is_preset_name(const std::string& name);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 10;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
};

// Sequential classifier trained with Adam on categorical cross-entropy.
// All arithmetic is double precision; checkpoints store float32.
//
// Stack rules, enforced at construction: exactly one flatten; dense layers
// only after it; the final layer is dense with softmax and defines the class
// count; softmax appears nowhere else.
class Model {
 public:
  Model(std::vector<LayerSpec> layers, Shape input, std::uint64_t seed);

  Shape input_shape() const { return input_; }
  int class_count() const { return class_count_; }
  std::size_t layer_count() const { return layers_.size(); }

  // Index of the layer whose output is the feature map F-hat; defaults to the
  // flatten layer.
  std::size_t feature_cut() const { return feature_cut_; }
  void set_feature_cut(std::size_t layer_index);
  int feature_size() const;

  // Class posterior for one sample (dropout off).
  std::vector<double> predict_proba(const Sample& x) const;

  // Flattened output of the feature-cut layer (dropout off).
  std::vector<double> extract_features(const Sample& x) const;

  // Runs epochs x ceil(N / batch_size) Adam steps over shuffled minibatches
  // and returns the final epoch's mean loss. warm_start keeps current
  // weights; otherwise they are re-initialized from cfg.seed. The optimizer
  // state starts fresh either way. A non-finite loss aborts with
  // std::runtime_error.
  double train(const Dataset& data, const TrainConfig& cfg, bool warm_start = true);

  // Mean cross-entropy over a labeled set (dropout off).
  double mean_loss(const Dataset& data) const;

  // Top-1 accuracy; argmax ties resolve to the lowest class index.
  double evaluate(const Dataset& data) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  // d(mean loss)/d(parameters) in parameters() order, dropout off.
  std::vector<double> loss_gradient(const Dataset& data) const;

  // Binary checkpoint: magic "TACM", version, per-layer shape header,
  // row-major float32 little-endian weights. load_weights requires the same
  // architecture.
  void save_weights(const std::string& path) const;
  void load_weights(const std::string& path);

 private:
  struct Layer {
    LayerSpec spec;
    Shape in, out;
    std::vector<double> w, b;
    // Adam moments, reset at the start of every train() call.
    std::vector<double> mw, vw, mb, vb;
  };

  struct Cache {
    // Post-activation output per layer; input sits at index 0.
    std::vector<std::vector<double>> act;
    std::vector<std::vector<int>> pool_src;
    std::vector<std::vector<std::uint8_t>> drop_mask;
  };

  void init_weights(std::uint64_t seed);
  // Runs layers [0, limit); limit = layer_count() yields the posterior.
  const std::vector<double>& forward(const Sample& x, bool train_mode,
                                     std::mt19937_64* rng, Cache& cache,
                                     std::size_t limit) const;
  // Backpropagates d(loss)/d(logits) through the cache into grad buffers.
  void backward(const Cache& cache, std::vector<double> grad_out,
                std::vector<std::vector<double>>& gw,
                std::vector<std::vector<double>>& gb) const;

  Shape input_;
  int class_count_ = 0;
  std::size_t feature_cut_ = 0;
  std::vector<Layer> layers_;
};

}  // namespace tactile
