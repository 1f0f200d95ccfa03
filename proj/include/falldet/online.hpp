#pragma once

// Streaming detector: keeps the latest w samples in a ring buffer and
// classifies a window every `stride` samples, with the same window boundaries
// and labels as offline segmentation of the full recording.
//
// A fall is reported at the earliest when the window containing it is
// complete, so detection lags the event by up to w / 200 s plus the stride.

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "falldet/baseline.hpp"
#include "falldet/model.hpp"
#include "falldet/sensordata.hpp"
#include "falldet/windowing.hpp"
#include "json.hpp"

namespace falldet::online {

struct Detection {
  std::size_t start = 0;  // first sample of the classified window
  ActivityClass cls = ActivityClass::Bkg;

  double t_sec() const { return static_cast<double>(start) / kSampleRateHz; }
  bool operator==(const Detection&) const = default;
};

/// `{"start": int, "t_sec": float, "class": "BKG|ALERT|FALL"}`
nlohmann::json to_json(const Detection& d);

struct BaselineBackend {
  baseline::Thresholds thresholds;
  baseline::Indicator indicator = baseline::Indicator::C9;
};

using Backend = std::variant<model::ModelParams, BaselineBackend>;

class OnlineDetector {
 public:
  OnlineDetector(const windowing::WindowParams& params, Backend backend);

  /// Throws Error on a non-finite component.
  std::optional<Detection> push_sample(const Vec3& sample);
  /// Empties the buffer; the backend is kept.
  void reset();

  std::size_t samples_seen() const { return seen_; }
  std::size_t buffered() const { return std::min(seen_, params_.width); }
  const windowing::WindowParams& params() const { return params_; }
  const Backend& backend() const { return backend_; }

  /// Classifies samples laid out oldest first; shared with the offline path.
  ActivityClass classify(const std::vector<Vec3>& window);

 private:
  windowing::WindowParams params_;
  Backend backend_;
  std::optional<model::InferenceModel<double>> net_;
  std::vector<Vec3> ring_;
  std::size_t head_ = 0;  // next write position
  std::size_t seen_ = 0;
  std::vector<Vec3> linear_;
  model::WindowInput input_;
};

/// Feeds every sample of `seq` through a fresh detector state.
std::vector<Detection> replay(OnlineDetector& detector, const sensordata::Sequence& seq);

/// Offline reference: segment the whole recording, then classify each window.
std::vector<Detection> offline_detections(const sensordata::Sequence& seq, const windowing::WindowParams& params,
                                          const Backend& backend);

}  // namespace falldet::online
