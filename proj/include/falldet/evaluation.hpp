#pragma once

// Confusion matrices, per-class recall, subject-disjoint splits, window-size
// sweeps and per-window timelines.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "falldet/annotation.hpp"
#include "falldet/baseline.hpp"
#include "falldet/model.hpp"
#include "falldet/windowing.hpp"
#include "json.hpp"

namespace falldet::evaluation {

/// counts[true][predicted]
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t row_sum(ActivityClass truth) const;
  std::size_t at(ActivityClass truth, ActivityClass predicted) const {
    return counts[index_of(truth)][index_of(predicted)];
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws Error on length mismatch or empty input.
ConfusionMatrix confusion_matrix(std::span<const ActivityClass> predicted, std::span<const ActivityClass> truth);

/// Recall per class; std::nullopt for classes with an empty row.
using Recalls = std::array<std::optional<double>, kNumClasses>;
Recalls per_class_accuracy(const ConfusionMatrix& cm);

/// Fraction of the diagonal over the total.
double overall_accuracy(const ConfusionMatrix& cm);

using Dataset = std::vector<annotation::AnnotatedSequence>;

struct SubjectSplit {
  std::set<std::string> train;
  std::set<std::string> test;
};

/// Shuffles the distinct subjects with `seed` and sends round(fraction * n)
/// of them (at least one, at most n - 1 when n > 1) to training.
SubjectSplit split_subjects(const Dataset& data, double train_fraction, std::uint64_t seed);

struct WindowedSplit {
  std::vector<windowing::Window> train;
  std::vector<windowing::Window> test;
};
WindowedSplit window_split(const Dataset& data, const SubjectSplit& split, const windowing::WindowParams& p,
                           const windowing::LabelRule& rule = {});

std::vector<ActivityClass> labels_of(std::span<const windowing::Window> windows);
std::vector<ActivityClass> predict_model(const model::ModelParams& params,
                                         std::span<const windowing::Window> windows);
std::vector<ActivityClass> predict_baseline(const baseline::Thresholds& th, baseline::Indicator ind,
                                            std::span<const windowing::Window> windows);

struct SweepConfig {
  model::TrainConfig train;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 1;
  windowing::LabelRule rule;
  /// Grid cells evaluated concurrently; 0 = hardware concurrency.
  unsigned threads = 1;
};

struct SweepRow {
  std::size_t width = 0;
  int stride_percent = 0;
  std::size_t stride = 0;
  windowing::ClassCounts train_counts;
  windowing::ClassCounts test_counts;
  ConfusionMatrix confusion;
  Recalls recall;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // width-major, then stride, in input order
};

/// Default width grid: powers of two from 32 to 1024.
std::vector<std::size_t> default_sweep_widths();

/// Re-windows, splits, trains (with cfg.train.width set per cell) and
/// evaluates each (width, stride) cell. Errors are rethrown tagged with the cell.
SweepResult sweep(const Dataset& data, std::span<const std::size_t> widths, std::span<const int> stride_percents,
                  const SweepConfig& cfg);

struct TimelineRow {
  std::size_t start = 0;
  std::size_t end = 0;
  ActivityClass truth = ActivityClass::Bkg;
  ActivityClass baseline = ActivityClass::Bkg;
  ActivityClass model = ActivityClass::Bkg;
};

struct Timeline {
  std::string source;
  std::vector<TimelineRow> rows;  // ordered by start
  std::size_t disagreements() const;
};

/// Ground truth comes from the windows' labels. Throws Error if the lists
/// differ in length or a window is not from `seq`.
Timeline timeline(const annotation::AnnotatedSequence& seq, std::span<const windowing::Window> windows,
                  std::span<const ActivityClass> baseline_preds, std::span<const ActivityClass> model_preds);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const Recalls& r);
nlohmann::json to_json(const Timeline& tl);

}  // namespace falldet::evaluation
