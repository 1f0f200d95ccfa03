#include <algorithm>
#include <cmath>
#include <numeric>

#include "falldet/model.hpp"

namespace falldet::model {

namespace {

class AdamState {
 public:
  explicit AdamState(double lr) : lr_(lr), m_(Weights::zeros()), v_(Weights::zeros()) {}

  void step(Weights& params, Gradients& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    auto p = tensors(params);
    auto g = tensors(grad);
    auto m = tensors(m_);
    auto v = tensors(v_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      Eigen::Map<Eigen::ArrayXd> pk(p[k].data, p[k].size());
      Eigen::Map<Eigen::ArrayXd> gk(g[k].data, g[k].size());
      Eigen::Map<Eigen::ArrayXd> mk(m[k].data, m[k].size());
      Eigen::Map<Eigen::ArrayXd> vk(v[k].data, v[k].size());
      mk = kBeta1 * mk + (1.0 - kBeta1) * gk;
      vk = kBeta2 * vk + (1.0 - kBeta2) * gk.square();
      pk -= lr_ * (mk / c1) / ((vk / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::size_t t_ = 0;
  Weights m_;
  Weights v_;
};

void sgd_step(Weights& params, Gradients& grad, double lr) {
  auto p = tensors(params);
  auto g = tensors(grad);
  for (std::size_t k = 0; k < p.size(); ++k) {
    Eigen::Map<Eigen::ArrayXd>(p[k].data, p[k].size()) -= lr * Eigen::Map<Eigen::ArrayXd>(g[k].data, g[k].size());
  }
}

}  // namespace

TrainResult train(std::span<const WindowInput> inputs, std::span<const ActivityClass> labels,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (inputs.size() != labels.size()) throw Error("inputs and labels differ in length");
  if (inputs.empty()) throw Error("training set is empty");
  for (const auto& x : inputs) {
    if (static_cast<std::size_t>(x.cols()) != cfg.width) {
      throw Error("training window width " + std::to_string(x.cols()) + " does not match configured w=" +
                  std::to_string(cfg.width));
    }
  }
  windowing::ClassCounts counts;
  for (auto c : labels) counts.add(c);

  TrainResult result;
  result.loss_weights = cfg.weighted_loss ? LossWeights::from_counts(counts) : LossWeights::uniform();
  result.params = init_params(cfg.seed);
  if (cfg.epochs == 0) return result;

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam(cfg.learning_rate);
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<WindowInput> batch;
  std::vector<ActivityClass> batch_labels;
  auto& bn = result.params.bn;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t last = std::min(order.size(), first + cfg.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = first; i < last; ++i) {
        batch.push_back(inputs[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      const auto masks = make_dropout_masks(batch.size(), static_cast<Eigen::Index>(cfg.width),
                                            cfg.dropout_rate, rng);
      auto lg = loss_and_grad(batch, batch_labels, result.params, result.loss_weights, Mode::Train, masks,
                              cfg.threads);
      bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * lg.bn_stats.mean;
      bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * lg.bn_stats.var;
      if (cfg.optimizer == Optimizer::Adam) {
        adam.step(result.params.weights, lg.grad);
      } else {
        sgd_step(result.params.weights, lg.grad, cfg.learning_rate);
      }
      epoch_loss += lg.loss;
    }
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  result.params.validate();
  return result;
}

TrainResult train(std::span<const windowing::Window> windows, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  std::vector<WindowInput> inputs;
  std::vector<ActivityClass> labels;
  inputs.reserve(windows.size());
  labels.reserve(windows.size());
  for (const auto& w : windows) {
    inputs.push_back(to_input(w));
    labels.push_back(w.label);
  }
  return train(inputs, labels, cfg, on_epoch);
}

}  // namespace falldet::model
