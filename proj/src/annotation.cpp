#include "falldet/annotation.hpp"

#include <algorithm>
#include <stdexcept>

namespace falldet::annotation {

namespace {

std::string summarize(const std::vector<IntervalIssue>& issues) {
  std::string msg = "invalid annotation";
  for (const auto& issue : issues) {
    msg += "; interval " + std::to_string(issue.index) + ": " + issue.message;
  }
  return msg;
}

}  // namespace

AnnotationError::AnnotationError(std::vector<IntervalIssue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

nlohmann::json AnnotationError::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& issue : issues_) list.push_back({{"index", issue.index}, {"message", issue.message}});
  return {{"error", "invalid annotation"}, {"issues", std::move(list)}};
}

void validate_intervals(std::span<const IntervalAnnotation> intervals, std::size_t sequence_length) {
  std::vector<IntervalIssue> issues;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    if (iv.cls == ActivityClass::Bkg) {
      issues.push_back({i, "BKG is implicit and cannot be annotated"});
    }
    if (iv.start >= iv.end) {
      issues.push_back({i, "start " + std::to_string(iv.start) + " must be < end " +
                               std::to_string(iv.end)});
    }
    if (iv.end > sequence_length) {
      issues.push_back({i, "end " + std::to_string(iv.end) + " exceeds sequence length " +
                               std::to_string(sequence_length)});
    }
  }
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    for (std::size_t j = i + 1; j < intervals.size(); ++j) {
      const auto& a = intervals[i];
      const auto& b = intervals[j];
      if (a.cls == b.cls && a.start < b.end && b.start < a.end) {
        issues.push_back({j, "overlaps " + std::string(to_string(a.cls)) + " interval " +
                                 std::to_string(i)});
      }
    }
  }
  if (!issues.empty()) throw AnnotationError(std::move(issues));
}

std::vector<IntervalAnnotation> annotations_from_json(const nlohmann::json& doc,
                                                      std::size_t sequence_length) {
  if (!doc.is_object() || !doc.contains("intervals") || !doc["intervals"].is_array()) {
    throw AnnotationError({{0, "document must be an object with an 'intervals' array"}});
  }
  std::vector<IntervalAnnotation> out;
  std::vector<IntervalIssue> issues;
  const auto& list = doc["intervals"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& item = list[i];
    if (!item.is_object() || !item.contains("class") || !item["class"].is_string() ||
        !item.contains("start") || !item["start"].is_number_integer() || !item.contains("end") ||
        !item["end"].is_number_integer()) {
      issues.push_back({i, "expected {\"class\": str, \"start\": int, \"end\": int}"});
      continue;
    }
    const auto name = item["class"].get<std::string>();
    if (name != "FALL" && name != "ALERT") {
      issues.push_back({i, "unknown class '" + name + "'"});
      continue;
    }
    const auto start = item["start"].get<long long>();
    const auto end = item["end"].get<long long>();
    if (start < 0 || end < 0) {
      issues.push_back({i, "negative sample index"});
      continue;
    }
    out.push_back({class_from_string(name), static_cast<std::size_t>(start),
                   static_cast<std::size_t>(end)});
  }
  if (!issues.empty()) throw AnnotationError(std::move(issues));
  validate_intervals(out, sequence_length);
  return out;
}

std::vector<IntervalAnnotation> load_annotations(std::string_view text, std::size_t sequence_length) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw AnnotationError({{0, std::string("malformed JSON: ") + e.what()}});
  }
  return annotations_from_json(doc, sequence_length);
}

nlohmann::json annotations_to_json(std::span<const IntervalAnnotation> intervals) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& iv : intervals) {
    list.push_back({{"class", std::string(to_string(iv.cls))}, {"start", iv.start}, {"end", iv.end}});
  }
  return {{"intervals", std::move(list)}};
}

std::filesystem::path annotation_path(const std::filesystem::path& root,
                                      const sensordata::SequenceId& id) {
  return root / (id.str() + ".ann.json");
}

AnnotatedSequence::AnnotatedSequence(sensordata::Sequence sequence,
                                     std::vector<IntervalAnnotation> intervals)
    : sequence_(std::move(sequence)), intervals_(std::move(intervals)) {
  validate_intervals(intervals_, sequence_.size());
}

ActivityClass AnnotatedSequence::label_at(std::size_t index) const {
  if (index >= sequence_.size()) throw std::out_of_range("sample index out of range");
  auto label = ActivityClass::Bkg;
  for (const auto& iv : intervals_) {
    if (index >= iv.start && index < iv.end) {
      if (iv.cls == ActivityClass::Fall) return ActivityClass::Fall;
      label = ActivityClass::Alert;
    }
  }
  return label;
}

std::vector<ActivityClass> AnnotatedSequence::per_sample_labels() const {
  std::vector<ActivityClass> labels(sequence_.size(), ActivityClass::Bkg);
  for (const auto& iv : intervals_) {
    if (iv.cls != ActivityClass::Alert) continue;
    std::fill(labels.begin() + iv.start, labels.begin() + iv.end, ActivityClass::Alert);
  }
  for (const auto& iv : intervals_) {
    if (iv.cls != ActivityClass::Fall) continue;
    std::fill(labels.begin() + iv.start, labels.begin() + iv.end, ActivityClass::Fall);
  }
  return labels;
}

}  // namespace falldet::annotation
