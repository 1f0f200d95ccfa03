#include "falldet/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace falldet::baseline {

Indicator indicator_from_string(std::string_view name) {
  if (name == "c8" || name == "C8") return Indicator::C8;
  if (name == "c9" || name == "C9") return Indicator::C9;
  throw Error("unknown indicator '" + std::string(name) + "' (expected c8 or c9)");
}

std::string_view to_string(Indicator ind) { return ind == Indicator::C8 ? "c8" : "c9"; }

Vec3 axis_variances(std::span<const Vec3> samples, VarianceKind kind) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error("variance needs at least 2 samples");
  Vec3 mean{0.0, 0.0, 0.0};
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < 3; ++k) mean[k] += s[k];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  Vec3 ss{0.0, 0.0, 0.0};
  for (const auto& s : samples) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = s[k] - mean[k];
      ss[k] += d * d;
    }
  }
  const double denom = static_cast<double>(kind == VarianceKind::Population ? n : n - 1);
  for (auto& v : ss) v /= denom;
  return ss;
}

double c8(std::span<const Vec3> samples, VarianceKind kind) {
  const auto v = axis_variances(samples, kind);
  return std::sqrt(v[0] + v[2]);
}

double c9(std::span<const Vec3> samples, VarianceKind kind) {
  const auto v = axis_variances(samples, kind);
  return std::sqrt(v[0] + v[1] + v[2]);
}

double c8(const windowing::Window& w, VarianceKind kind) { return c8(std::span(w.samples), kind); }
double c9(const windowing::Window& w, VarianceKind kind) { return c9(std::span(w.samples), kind); }

double indicator_value(Indicator ind, std::span<const Vec3> samples, VarianceKind kind) {
  return ind == Indicator::C8 ? c8(samples, kind) : c9(samples, kind);
}

void Thresholds::validate() const {
  if (!std::isfinite(alert) || !std::isfinite(fall) || alert < 0.0 || alert > fall) {
    throw Error("thresholds must satisfy 0 <= alert <= fall");
  }
}

ActivityClass classify(double value, const Thresholds& th) {
  if (value >= th.fall) return ActivityClass::Fall;
  if (value >= th.alert) return ActivityClass::Alert;
  return ActivityClass::Bkg;
}

ActivityClass classify_c9(const windowing::Window& w, const Thresholds& th, VarianceKind kind) {
  return classify(c9(w, kind), th);
}

std::vector<double> candidate_grid(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> grid{0.0};
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double mid = sorted[i - 1] + (sorted[i] - sorted[i - 1]) / 2.0;
    if (mid > grid.back()) grid.push_back(mid);
  }
  const double top = sorted.empty() ? 1.0 : sorted.back() + 1.0;
  if (top > grid.back()) grid.push_back(top);
  return grid;
}

Calibration calibrate_thresholds(std::span<const double> values, std::span<const ActivityClass> labels) {
  if (values.size() != labels.size()) throw Error("values and labels differ in length");
  std::array<std::size_t, kNumClasses> totals{};
  for (auto c : labels) ++totals[index_of(c)];
  for (auto c : kAllClasses) {
    if (totals[index_of(c)] == 0) {
      throw Error("calibration set has no " + std::string(to_string(c)) + " window");
    }
  }

  const auto grid = candidate_grid(values);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });

  // below[c][k]: windows of class c whose value is < grid[k]
  std::array<std::vector<std::size_t>, kNumClasses> below;
  for (auto& b : below) b.assign(grid.size(), 0);
  std::array<std::size_t, kNumClasses> running{};
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (cursor < order.size() && values[order[cursor]] < grid[k]) {
      ++running[index_of(labels[order[cursor]])];
      ++cursor;
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) below[c][k] = running[c];
  }

  const auto bkg = index_of(ActivityClass::Bkg);
  const auto alert = index_of(ActivityClass::Alert);
  const auto fall = index_of(ActivityClass::Fall);
  // correct(a, f) = [below_B(a) - below_A(a)] + [below_A(f) + F - below_F(f)], a <= f
  long long best_alert_score = 0;
  std::size_t best_alert_idx = 0;
  long long best_total = -1;
  Calibration out;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const long long alert_score =
        static_cast<long long>(below[bkg][f]) - static_cast<long long>(below[alert][f]);
    if (f == 0 || alert_score > best_alert_score) {
      best_alert_score = alert_score;
      best_alert_idx = f;
    }
    const long long total = best_alert_score + static_cast<long long>(below[alert][f]) +
                            static_cast<long long>(totals[fall]) - static_cast<long long>(below[fall][f]);
    if (total > best_total) {
      best_total = total;
      out.thresholds = {grid[best_alert_idx], grid[f]};
    }
  }
  out.correct = static_cast<std::size_t>(best_total);
  out.total = values.size();
  return out;
}

Calibration calibrate_thresholds(std::span<const windowing::Window> train, Indicator ind,
                                 VarianceKind kind) {
  std::vector<double> values;
  std::vector<ActivityClass> labels;
  values.reserve(train.size());
  labels.reserve(train.size());
  for (const auto& w : train) {
    values.push_back(indicator_value(ind, w.samples, kind));
    labels.push_back(w.label);
  }
  return calibrate_thresholds(values, labels);
}

nlohmann::json to_json(const ThresholdFile& f) {
  return {{"theta_alert", f.thresholds.alert},
          {"theta_fall", f.thresholds.fall},
          {"w", f.window.width},
          {"stride", f.window.stride},
          {"indicator", std::string(to_string(f.indicator))}};
}

ThresholdFile threshold_file_from_json(const nlohmann::json& j) {
  try {
    ThresholdFile f;
    f.thresholds = {j.at("theta_alert").get<double>(), j.at("theta_fall").get<double>()};
    f.thresholds.validate();
    f.window = {j.at("w").get<std::size_t>(), j.at("stride").get<std::size_t>()};
    f.window.validate();
    f.indicator = indicator_from_string(j.value("indicator", std::string("c9")));
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed thresholds file: ") + e.what());
  }
}

}  // namespace falldet::baseline
