#pragma once

// Temporal class annotations. A recording carries half-open [start, end)
// sample-index intervals tagged ALERT or FALL; every other sample is BKG.
//
// Authoring convention: the bumping and rolling right after an impact are
// labeled BKG, so FALL intervals should end before the aftermath. The loader
// does not check this.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "falldet/common.hpp"
#include "falldet/sensordata.hpp"
#include "json.hpp"

namespace falldet::annotation {

struct IntervalAnnotation {
  ActivityClass cls = ActivityClass::Fall;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  bool operator==(const IntervalAnnotation&) const = default;
};

struct IntervalIssue {
  /// Position of the offending interval in the submitted list.
  std::size_t index = 0;
  std::string message;
};

/// Validation failure listing every offending interval.
class AnnotationError : public Error {
 public:
  explicit AnnotationError(std::vector<IntervalIssue> issues);
  const std::vector<IntervalIssue>& issues() const { return issues_; }
  nlohmann::json to_json() const;

 private:
  std::vector<IntervalIssue> issues_;
};

/// Checks range, ordering, class and same-class overlap. Throws AnnotationError.
void validate_intervals(std::span<const IntervalAnnotation> intervals, std::size_t sequence_length);

/// Parses `{ "intervals": [ {"class": "FALL"|"ALERT", "start": int, "end": int}, ... ] }`
/// and validates it against `sequence_length`.
std::vector<IntervalAnnotation> load_annotations(std::string_view text, std::size_t sequence_length);
std::vector<IntervalAnnotation> annotations_from_json(const nlohmann::json& doc,
                                                      std::size_t sequence_length);

nlohmann::json annotations_to_json(std::span<const IntervalAnnotation> intervals);

/// `<root>/<ACT>_<SUBJ>_R<NN>.ann.json`
std::filesystem::path annotation_path(const std::filesystem::path& root,
                                      const sensordata::SequenceId& id);

class AnnotatedSequence {
 public:
  /// Throws AnnotationError if the intervals are invalid for `sequence`.
  AnnotatedSequence(sensordata::Sequence sequence, std::vector<IntervalAnnotation> intervals);

  const sensordata::Sequence& sequence() const { return sequence_; }
  const std::vector<IntervalAnnotation>& intervals() const { return intervals_; }
  std::size_t size() const { return sequence_.size(); }

  /// FALL beats ALERT beats BKG. Throws std::out_of_range past the end.
  ActivityClass label_at(std::size_t index) const;
  std::vector<ActivityClass> per_sample_labels() const;

 private:
  sensordata::Sequence sequence_;
  std::vector<IntervalAnnotation> intervals_;
};

}  // namespace falldet::annotation
