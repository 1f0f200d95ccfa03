#pragma once

// Variance-magnitude indicators C8 (x and z axes) and C9 (all three axes)
// with two-threshold window classification.
//
// Values are in raw accelerometer counts, like the thresholds derived from them.

#include <cstddef>
#include <span>
#include <vector>

#include "falldet/common.hpp"
#include "falldet/windowing.hpp"
#include "json.hpp"

namespace falldet::baseline {

enum class Indicator { C8, C9 };

enum class VarianceKind {
  Population,  // divide by n
  Sample,      // divide by n - 1
};

Indicator indicator_from_string(std::string_view name);
std::string_view to_string(Indicator ind);

/// Per-axis variance of the samples.
Vec3 axis_variances(std::span<const Vec3> samples, VarianceKind kind = VarianceKind::Population);

double c8(std::span<const Vec3> samples, VarianceKind kind = VarianceKind::Population);
double c9(std::span<const Vec3> samples, VarianceKind kind = VarianceKind::Population);
double c8(const windowing::Window& w, VarianceKind kind = VarianceKind::Population);
double c9(const windowing::Window& w, VarianceKind kind = VarianceKind::Population);
double indicator_value(Indicator ind, std::span<const Vec3> samples,
                       VarianceKind kind = VarianceKind::Population);

struct Thresholds {
  double alert = 0.0;
  double fall = 0.0;

  /// Throws Error unless 0 <= alert <= fall, both finite.
  void validate() const;
  bool operator==(const Thresholds&) const = default;
};

/// FALL if value >= fall, else ALERT if value >= alert, else BKG.
ActivityClass classify(double value, const Thresholds& th);
ActivityClass classify_c9(const windowing::Window& w, const Thresholds& th,
                          VarianceKind kind = VarianceKind::Population);

/// 0, every midpoint between consecutive distinct sorted values, and max + 1.
std::vector<double> candidate_grid(std::span<const double> values);

struct Calibration {
  Thresholds thresholds;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

/// Accuracy-maximizing thresholds over candidate_grid of the indicator values.
/// Ties go to the smallest fall threshold, then the smallest alert threshold.
/// Throws Error if any class is missing from `labels`.
Calibration calibrate_thresholds(std::span<const double> values, std::span<const ActivityClass> labels);
Calibration calibrate_thresholds(std::span<const windowing::Window> train,
                                 Indicator ind = Indicator::C9,
                                 VarianceKind kind = VarianceKind::Population);

/// Persisted form `{ "theta_alert", "theta_fall", "w", "stride" }` plus the indicator.
struct ThresholdFile {
  Thresholds thresholds;
  windowing::WindowParams window;
  Indicator indicator = Indicator::C9;
};
nlohmann::json to_json(const ThresholdFile& f);
ThresholdFile threshold_file_from_json(const nlohmann::json& j);

}  // namespace falldet::baseline
