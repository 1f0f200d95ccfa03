#pragma once

// Fixed-width sliding windows over annotated recordings and the rule that
// turns per-sample labels into a single window label.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "falldet/annotation.hpp"
#include "falldet/common.hpp"

namespace falldet::windowing {

struct WindowParams {
  std::size_t width = 256;
  std::size_t stride = 128;

  /// Throws Error unless width >= 2 and 1 <= stride <= width.
  void validate() const;
  /// Stride given as a percentage of the width, e.g. 50 -> width / 2.
  static WindowParams from_percent(std::size_t width, int stride_percent);

  bool operator==(const WindowParams&) const = default;
};

/// How "at least N% FALL samples" rounds when N% of w is fractional.
enum class FallRounding {
  Ceil,   // count >= ceil(pct * w / 100); same as count >= pct * w / 100 on reals
  Floor,  // count >= floor(pct * w / 100)
};

struct LabelRule {
  int fall_percent = 10;
  FallRounding rounding = FallRounding::Ceil;

  std::size_t fall_threshold(std::size_t width) const;
};

struct Window {
  std::string source;  // SequenceId::str() of the recording
  std::size_t start = 0;
  std::vector<Vec3> samples;
  ActivityClass label = ActivityClass::Bkg;
};

struct ClassCounts {
  std::size_t bkg = 0;
  std::size_t alert = 0;
  std::size_t fall = 0;

  std::size_t total() const { return bkg + alert + fall; }
  std::size_t operator[](ActivityClass c) const;
  void add(ActivityClass c);
  bool operator==(const ClassCounts&) const = default;
};

/// floor((n - w) / s) + 1 for n >= w, else 0.
std::size_t window_count(std::size_t n, const WindowParams& p);
std::vector<std::size_t> window_starts(std::size_t n, const WindowParams& p);

/// Duration of `width` samples at the SisFall rate.
double window_seconds(std::size_t width);

/// FALL if enough FALL samples, else ALERT on strict majority, else BKG.
ActivityClass label_window(std::span<const ActivityClass> sample_labels, const LabelRule& rule = {});

/// Windows at starts 0, s, 2s, ...; a trailing partial window is dropped.
/// Throws Error if `labels` does not match the sequence length.
std::vector<Window> segment(const sensordata::Sequence& seq, std::span<const ActivityClass> labels,
                            const WindowParams& p, const LabelRule& rule = {});
std::vector<Window> segment(const annotation::AnnotatedSequence& seq, const WindowParams& p,
                            const LabelRule& rule = {});

ClassCounts class_counts(std::span<const Window> windows);

/// Index rows `seq_id,start,label` with a header line.
void write_window_index(std::ostream& out, std::span<const Window> windows);

struct WindowIndexRow {
  std::string seq_id;
  std::size_t start = 0;
  ActivityClass label = ActivityClass::Bkg;
};
std::vector<WindowIndexRow> read_window_index(std::istream& in);

}  // namespace falldet::windowing
