#pragma once

// Recurrent window classifier:
//
//   dense(3->32) -> batch norm -> dropout -> LSTM(32) -> dropout -> LSTM(32)
//   -> dropout -> dense(32->3) on the last hidden state -> softmax
//
// Both LSTM cells are unrolled over the w time steps of a window. Dropout is
// only active in training mode; inference uses the batch-norm running
// statistics. All training math runs in double precision.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "falldet/common.hpp"
#include "falldet/windowing.hpp"
#include "json.hpp"

namespace falldet::model {

inline constexpr int kInputDim = 3;
inline constexpr int kHidden = 32;
inline constexpr int kDenseDim = 32;
inline constexpr int kClasses = static_cast<int>(kNumClasses);

using Rng = std::mt19937_64;
using ClassDistribution = std::array<double, kNumClasses>;
/// One window: 3 rows (x, y, z) by w columns (time steps).
using WindowInput = Eigen::Matrix<double, 3, Eigen::Dynamic>;

enum class Mode { Train, Infer };

/// Gate blocks are stacked as [input; forget; candidate; output].
struct LstmWeights {
  Eigen::MatrixXd input;      // 4H x in
  Eigen::MatrixXd recurrent;  // 4H x H
  Eigen::VectorXd bias;       // 4H
};

/// Trainable tensors. Gradients share this layout.
struct Weights {
  Eigen::MatrixXd dense_in_w;  // 32 x 3
  Eigen::VectorXd dense_in_b;
  Eigen::VectorXd bn_gamma;
  Eigen::VectorXd bn_beta;
  LstmWeights lstm1;
  LstmWeights lstm2;
  Eigen::MatrixXd dense_out_w;  // 3 x 32
  Eigen::VectorXd dense_out_b;

  /// Same shapes, all zeros.
  static Weights zeros();
  Weights& operator+=(const Weights& other);
  Weights& operator*=(double k);
};
using Gradients = Weights;

struct BatchNormState {
  Eigen::VectorXd running_mean;
  Eigen::VectorXd running_var;
  double epsilon = 1e-5;
  double momentum = 0.9;
};

struct ModelParams {
  Weights weights;
  BatchNormState bn;

  /// Throws DivergenceError on a non-finite entry or non-positive running variance.
  void validate() const;
};

/// Name, shape and storage of one tensor; `data` is column-major.
struct TensorView {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  double* data = nullptr;
  Eigen::Index size() const { return rows * cols; }
};
/// Every trainable tensor in a fixed order.
std::vector<TensorView> tensors(Weights& w);

/// Glorot-uniform dense and LSTM weights, forget-gate bias 1, other biases 0,
/// bn scale 1 / shift 0, running mean 0 / variance 1.
ModelParams init_params(std::uint64_t seed);

WindowInput to_input(const windowing::Window& w);

/// Scaled keep masks for one batch (entries are 0 or 1/(1-rate)).
struct DropoutMasks {
  std::vector<Eigen::MatrixXd> after_bn;     // per sample, 32 x w
  std::vector<Eigen::MatrixXd> after_lstm1;  // per sample, 32 x w
  std::vector<Eigen::VectorXd> after_lstm2;  // per sample, 32
  bool empty() const { return after_bn.empty(); }
};
DropoutMasks make_dropout_masks(std::size_t batch, Eigen::Index width, double rate, Rng& rng);

struct LossWeights {
  double bkg = 1.0;
  double alert = 1.0;
  double fall = 1.0;

  /// (1, |B|/|A|, |B|/|F|). Throws Error if a class count is zero.
  static LossWeights from_counts(const windowing::ClassCounts& counts);
  static LossWeights uniform() { return {}; }
  double operator[](ActivityClass c) const;
  LossWeights scaled(double k) const { return {bkg * k, alert * k, fall * k}; }
};

inline constexpr double kProbFloor = 1e-12;

/// sum_i m(label_i) * -log(max(p_i[label_i], 1e-12))
double weighted_loss(std::span<const ClassDistribution> probs, std::span<const ActivityClass> labels,
                     const LossWeights& weights);

/// Batch forward pass. In Train mode batch norm uses statistics over the
/// batch and time axes and `masks` (if non-empty) are applied.
std::vector<ClassDistribution> forward_batch(std::span<const WindowInput> batch, const ModelParams& params,
                                             Mode mode, const DropoutMasks& masks = {});

/// Single window. In Train mode dropout masks are drawn from `rng` with `dropout_rate`.
ClassDistribution forward(const WindowInput& window, const ModelParams& params, Mode mode, Rng& rng,
                          double dropout_rate = 0.5);

struct BatchStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // biased, over batch x time
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
  std::vector<ClassDistribution> probs;
  /// Batch-norm statistics seen in Train mode (empty in Infer mode).
  BatchStats bn_stats;
};

/// Weighted loss of the batch and its exact gradient by backpropagation
/// through the unrolled network. Per-sample work is reduced in index order, so
/// results do not depend on the thread count.
LossAndGrad loss_and_grad(std::span<const WindowInput> batch, std::span<const ActivityClass> labels,
                          const ModelParams& params, const LossWeights& weights, Mode mode,
                          const DropoutMasks& masks = {}, unsigned threads = 0);

/// Plain loss of the batch under the same conventions as loss_and_grad.
double batch_loss(std::span<const WindowInput> batch, std::span<const ActivityClass> labels,
                  const ModelParams& params, const LossWeights& weights, Mode mode,
                  const DropoutMasks& masks = {});

enum class Optimizer { Sgd, Adam };
Optimizer optimizer_from_string(std::string_view name);
std::string_view to_string(Optimizer opt);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double dropout_rate = 0.5;
  std::uint64_t seed = 1;
  std::size_t width = 256;
  Optimizer optimizer = Optimizer::Adam;
  /// false trains with plain cross-entropy (all multipliers 1).
  bool weighted_loss = true;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const;
};
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainResult {
  ModelParams params;
  LossWeights loss_weights;
  /// Weighted training loss summed over the minibatches of each epoch.
  std::vector<double> loss_history;
};

/// Callback invoked after each epoch with (epoch index, epoch loss).
using EpochCallback = std::function<void(std::size_t, double)>;

TrainResult train(std::span<const windowing::Window> windows, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(std::span<const WindowInput> inputs, std::span<const ActivityClass> labels,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

ActivityClass argmax(const ClassDistribution& p);

/// Dropout-free inference path with preallocated buffers, usable in float
/// or double precision.
template <typename Scalar>
class InferenceModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit InferenceModel(const ModelParams& params);

  ClassDistribution predict(const WindowInput& window);
  ActivityClass classify(const WindowInput& window) { return argmax(predict(window)); }

 private:
  struct Cell {
    Matrix input, recurrent;
    Vector bias;
  };
  void step(const Cell& cell, const Vector& x, Vector& h, Vector& c);

  Matrix dense_in_w_;
  Vector dense_in_b_, bn_scale_, bn_shift_;
  Cell lstm1_, lstm2_;
  Matrix dense_out_w_;
  Vector dense_out_b_;
  Vector x_, u_, h1_, c1_, h2_, c2_, gates_;
};

extern template class InferenceModel<float>;
extern template class InferenceModel<double>;

/// Versioned JSON checkpoint with every tensor, the batch-norm state, the
/// train config and the window parameters. Reload is bit-exact.
nlohmann::json checkpoint_to_json(const ModelParams& params, const TrainConfig& cfg,
                                  const windowing::WindowParams& window);
struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  windowing::WindowParams window;
};
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Gradient verification against central finite differences.

struct TensorCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  std::size_t coords_per_tensor = 200;
  /// Denominator floor, relative to the loss value:
  /// rel = |a - n| / max(|a|, |n|, floor * max(1, |loss|)).
  double floor = 1e-6;
  std::uint64_t seed = 7;
};

/// Compares `analytic` against central differences of batch_loss with the
/// same masks. Tensors with fewer than coords_per_tensor entries are checked
/// exhaustively.
GradCheckReport gradient_check(const ModelParams& params, std::span<const WindowInput> batch,
                               std::span<const ActivityClass> labels, const LossWeights& weights,
                               Mode mode, const DropoutMasks& masks, const Gradients& analytic,
                               const GradCheckOptions& opts = {});

/// Same, with the analytic gradient taken from loss_and_grad.
GradCheckReport gradient_check(const ModelParams& params, std::span<const WindowInput> batch,
                               std::span<const ActivityClass> labels, const LossWeights& weights,
                               Mode mode, const DropoutMasks& masks, const GradCheckOptions& opts = {});

}  // namespace falldet::model
