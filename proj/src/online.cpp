#include "falldet/online.hpp"

#include <cmath>

#include "falldet/evaluation.hpp"

namespace falldet::online {

nlohmann::json to_json(const Detection& d) {
  return {{"start", d.start}, {"t_sec", d.t_sec()}, {"class", std::string(to_string(d.cls))}};
}

OnlineDetector::OnlineDetector(const windowing::WindowParams& params, Backend backend)
    : params_(params), backend_(std::move(backend)) {
  params_.validate();
  if (const auto* p = std::get_if<model::ModelParams>(&backend_)) {
    net_.emplace(*p);
  } else {
    std::get<BaselineBackend>(backend_).thresholds.validate();
  }
  ring_.resize(params_.width);
  linear_.resize(params_.width);
  input_.resize(3, static_cast<Eigen::Index>(params_.width));
}

ActivityClass OnlineDetector::classify(const std::vector<Vec3>& window) {
  if (const auto* b = std::get_if<BaselineBackend>(&backend_)) {
    return baseline::classify(baseline::indicator_value(b->indicator, window), b->thresholds);
  }
  if (input_.cols() != static_cast<Eigen::Index>(window.size())) {
    input_.resize(3, static_cast<Eigen::Index>(window.size()));
  }
  for (std::size_t t = 0; t < window.size(); ++t) {
    for (int k = 0; k < 3; ++k) input_(k, static_cast<Eigen::Index>(t)) = window[t][k];
  }
  return net_->classify(input_);
}

std::optional<Detection> OnlineDetector::push_sample(const Vec3& sample) {
  for (double v : sample) {
    if (!std::isfinite(v)) throw Error("non-finite sample component");
  }
  ring_[head_] = sample;
  head_ = (head_ + 1) % params_.width;
  ++seen_;
  if (seen_ < params_.width || (seen_ - params_.width) % params_.stride != 0) return std::nullopt;
  // head_ now points at the oldest buffered sample
  for (std::size_t i = 0; i < params_.width; ++i) linear_[i] = ring_[(head_ + i) % params_.width];
  return Detection{seen_ - params_.width, classify(linear_)};
}

void OnlineDetector::reset() {
  head_ = 0;
  seen_ = 0;
}

std::vector<Detection> replay(OnlineDetector& detector, const sensordata::Sequence& seq) {
  detector.reset();
  std::vector<Detection> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (auto d = detector.push_sample(seq.accel(i))) out.push_back(*d);
  }
  return out;
}

std::vector<Detection> offline_detections(const sensordata::Sequence& seq, const windowing::WindowParams& params,
                                          const Backend& backend) {
  const std::vector<ActivityClass> labels(seq.size(), ActivityClass::Bkg);
  const auto windows = windowing::segment(seq, labels, params);
  std::vector<ActivityClass> predicted;
  if (const auto* b = std::get_if<BaselineBackend>(&backend)) {
    predicted = evaluation::predict_baseline(b->thresholds, b->indicator, windows);
  } else {
    predicted = evaluation::predict_model(std::get<model::ModelParams>(backend), windows);
  }
  std::vector<Detection> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out.push_back({windows[i].start, predicted[i]});
  return out;
}

}  // namespace falldet::online
