#include <algorithm>
#include <cmath>
#include <numeric>

#include "falldet/model.hpp"

namespace falldet::model {

GradCheckReport gradient_check(const ModelParams& params, std::span<const WindowInput> batch,
                               std::span<const ActivityClass> labels, const LossWeights& weights, Mode mode,
                               const DropoutMasks& masks, const Gradients& analytic,
                               const GradCheckOptions& opts) {
  ModelParams probe = params;
  Gradients grad = analytic;
  auto probe_tensors = tensors(probe.weights);
  auto grad_tensors = tensors(grad);
  Rng rng(opts.seed);
  const double base = batch_loss(batch, labels, params, weights, mode, masks);
  const double floor = opts.floor * std::max(1.0, std::abs(base));

  GradCheckReport report;
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    const auto& t = probe_tensors[k];
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(t.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (coords.size() > opts.coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.coords_per_tensor);
    }
    TensorCheck check{t.name, coords.size(), 0.0};
    for (auto i : coords) {
      const double original = t.data[i];
      t.data[i] = original + opts.step;
      const double plus = batch_loss(batch, labels, probe, weights, mode, masks);
      t.data[i] = original - opts.step;
      const double minus = batch_loss(batch, labels, probe, weights, mode, masks);
      t.data[i] = original;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double a = grad_tensors[k].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      check.max_rel_error = std::max(check.max_rel_error, std::abs(a - numeric) / denom);
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.tensors.push_back(std::move(check));
  }
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

GradCheckReport gradient_check(const ModelParams& params, std::span<const WindowInput> batch,
                               std::span<const ActivityClass> labels, const LossWeights& weights, Mode mode,
                               const DropoutMasks& masks, const GradCheckOptions& opts) {
  const auto lg = loss_and_grad(batch, labels, params, weights, mode, masks, 1);
  return gradient_check(params, batch, labels, weights, mode, masks, lg.grad, opts);
}

}  // namespace falldet::model
