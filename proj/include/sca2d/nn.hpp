#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sca2d/augment.hpp"
#include "sca2d/core.hpp"

// A small CNN stack written for double precision and deterministic replay:
// every source of randomness (init, shuffling, dropout, augmentation) comes
// from explicit seeds. Training runs on one thread; inference fans out
// across worker threads without touching shared state.

namespace sca2d::nn {

struct Shape {
  int h = 1, w = 1, c = 1;
  std::size_t size() const { return static_cast<std::size_t>(h) * w * c; }
  bool operator==(const Shape&) const = default;
};

/// Batch of n activation tensors stored back to back.
struct Batch {
  int n = 0;
  Shape shape;
  std::vector<double> data;

  void resize(int n_, Shape s) {
    n = n_;
    shape = s;
    data.assign(static_cast<std::size_t>(n_) * s.size(), 0.0);
  }
  std::size_t example_size() const { return shape.size(); }
  double* example(int i) { return data.data() + i * example_size(); }
  const double* example(int i) const { return data.data() + i * example_size(); }
};

/// Per-call scratch carried from forward to backward (pool argmaxes,
/// dropout masks, batch statistics). Owned by the caller so concurrent
/// forward passes never share state.
struct Aux {
  virtual ~Aux() = default;
};

struct ForwardCtx {
  bool training = false;
  std::mt19937_64* rng = nullptr;     // dropout mask source while training
  bool identity_dropout = false;      // gradient checking: keep everything
  bool update_running_stats = true;   // batchnorm moving averages
};

enum class LayerType : std::uint8_t {
  Conv2d = 0,
  BatchNorm = 1,
  Relu = 2,
  MaxPool = 3,
  Dropout = 4,
  Flatten = 5,
  Dense = 6,
  Softmax = 7,
};

enum class Init : std::uint8_t { HeUniform = 0, GlorotUniform = 1 };
enum class Padding : std::uint8_t { Valid = 0, Same = 1 };

/// Flat description of one layer, rich enough to rebuild it (used by the
/// checkpoint format).
struct LayerSpec {
  LayerType type = LayerType::Relu;
  int filters = 0, kh = 0, kw = 0;   // conv
  Padding padding = Padding::Valid;  // conv
  double l2 = 0.0;                   // conv weight penalty coefficient
  double momentum = 0.9, eps = 1e-5; // batchnorm
  int ph = 0, pw = 0, sh = 0, sw = 0;  // pool window and stride
  double rate = 0.0;                 // dropout
  int units = 0;                     // dense
  Init init = Init::HeUniform;       // dense weight init
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual LayerSpec spec() const = 0;

  /// Locks in the input shape, allocates parameters, returns the output shape.
  virtual Shape prepare(Shape in) = 0;
  virtual void init_params(std::mt19937_64&) {}
  virtual std::unique_ptr<Aux> make_aux() const { return nullptr; }

  virtual void forward(const Batch& in, Batch& out, const ForwardCtx& ctx,
                       Aux* aux) const = 0;
  /// Gradients accumulate into the layer's grad buffer; `din` is overwritten.
  virtual void backward(const Batch& in, const Batch& dout, Batch& din, const Aux* aux) = 0;

  virtual std::span<double> params() { return {}; }
  virtual std::span<const double> params() const { return {}; }
  virtual std::span<double> grads() { return {}; }
  // batchnorm running statistics (saved with checkpoints, not optimized)
  virtual std::span<double> extra_state() { return {}; }
  virtual std::span<const double> extra_state() const { return {}; }
  virtual double l2_penalty() const { return 0.0; }
  /// Adds the penalty term's contribution to the accumulated gradients.
  virtual void add_l2_grads() {}
  void zero_grads() {
    for (double& g : grads()) g = 0.0;
  }
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

// Concrete layer constructors (the acceptance-critical stack is built from
// these through make_table_cnn; tests compose them directly).
std::unique_ptr<Layer> conv2d(int filters, int kh, int kw, double l2 = 0.0,
                              Padding padding = Padding::Valid);
std::unique_ptr<Layer> batch_norm(double momentum = 0.9, double eps = 1e-5);
std::unique_ptr<Layer> relu();
std::unique_ptr<Layer> max_pool(int ph = 2, int pw = 2, int sh = -1, int sw = -1);
std::unique_ptr<Layer> dropout(double rate);
std::unique_ptr<Layer> flatten();
std::unique_ptr<Layer> dense(int units, Init init = Init::HeUniform);
std::unique_ptr<Layer> softmax();

class Network {
 public:
  void add(std::unique_ptr<Layer> layer);
  /// Fixes shapes and initializes all parameters from `seed`.
  void build(Shape input, std::uint64_t seed);
  bool built() const { return built_; }
  Shape input_shape() const { return input_; }
  Shape output_shape() const { return output_; }

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  /// Sum of all layers' weight penalties (the regularization loss term).
  double penalty() const;
  std::vector<LayerSpec> describe() const;

  /// Forward pass for a prepared batch. Thread-safe when ctx neither trains
  /// nor updates running statistics.
  void forward(const Batch& in, Batch& out, const ForwardCtx& ctx) const;

  /// Mean cross-entropy of the labels plus the weight penalty; also leaves
  /// the activations needed by backward() in the internal workspace.
  double forward_loss(const Batch& in, const std::vector<std::uint8_t>& labels,
                      const ForwardCtx& ctx);
  /// Backpropagates from the last forward_loss call and accumulates
  /// gradients (including the penalty term) into the layers.
  void backward(const Batch& in, const std::vector<std::uint8_t>& labels);

  /// Class probabilities for every image, computed in inference mode and
  /// fanned out across worker threads.
  Posteriors predict_proba(const ImageSet& images) const;

  /// Flat copies of every parameter (and batchnorm running stat), used for
  /// checkpointing inside the training loop.
  std::vector<double> snapshot() const;
  void restore(const std::vector<double>& snap);

 private:
  friend class AdamOptimizer;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Batch> acts_;                 // training workspace
  std::vector<std::unique_ptr<Aux>> auxs_;  // training workspace
  Batch dact_a_, dact_b_;                   // gradient ping-pong buffers
  Shape input_, output_;
  bool built_ = false;
};

/// Network from stored layer specs (checkpoint loading).
Network network_from_specs(const std::vector<LayerSpec>& specs);

/// The reference architecture: two L2-regularized conv blocks
/// (conv -> batchnorm -> relu -> 2x2 max-pool -> dropout 0.5, with 8 then 16
/// filters, 5x5 then 3x3 kernels), a 250-unit dense block and a 256-way
/// softmax head. Inputs of height 1 get the 1D variant: 1xk kernels and
/// 1x2 pools over the width axis.
Network make_table_cnn(Shape input);

class AdamOptimizer {
 public:
  AdamOptimizer(Network& net, double lr = 2e-4, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  /// One bias-corrected update from the currently accumulated gradients.
  void step();
  long steps_taken() const { return t_; }

 private:
  Network& net_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
  int max_epochs = 100;
  int batch_size = 64;
  double lr = 2e-4;
  double val_fraction = 0.1;
  int patience = 20;          // epochs without val-loss improvement
  std::uint64_t seed = 1;     // shuffling, dropout and augmentation seeds
  augment::Augmenter augmenter;  // applied to training examples only
  bool verbose = false;
};

struct TrainHistory {
  std::vector<double> train_loss;  // one entry per epoch run
  std::vector<double> val_loss;
  int best_epoch = -1;  // 0-based epoch of the restored checkpoint
  double best_val_loss = 0.0;
  int epochs_run = 0;
};

/// Mini-batch Adam training with a held-out validation split, early
/// stopping, and restoration of the best-validation-loss weights. The
/// network must be built beforehand.
TrainHistory train(Network& net, const ImageSet& data, const TrainConfig& cfg);

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t n_params = 0;
};

/// Central finite differences (step h) on every parameter against the
/// analytic gradients, with dropout forced to identity and batchnorm
/// running-stat updates disabled. Returns the worst relative error.
GradCheckResult gradient_check(Network& net, const Batch& x,
                               const std::vector<std::uint8_t>& labels, double h = 1e-5);

/// Deterministic per-example seed stream (shared by training augmentation
/// and the synthetic generator).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace sca2d::nn
