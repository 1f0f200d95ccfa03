#include "falldet/windowing.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace falldet::windowing {

void WindowParams::validate() const {
  if (width < 2) throw Error("window width must be >= 2");
  if (stride < 1 || stride > width) throw Error("stride must be in [1, width]");
}

WindowParams WindowParams::from_percent(std::size_t width, int stride_percent) {
  if (stride_percent <= 0 || stride_percent > 100) throw Error("stride percent must be in (0, 100]");
  WindowParams p{width, width * static_cast<std::size_t>(stride_percent) / 100};
  p.validate();
  return p;
}

std::size_t LabelRule::fall_threshold(std::size_t width) const {
  const std::size_t scaled = width * static_cast<std::size_t>(fall_percent);
  return rounding == FallRounding::Ceil ? (scaled + 99) / 100 : scaled / 100;
}

std::size_t ClassCounts::operator[](ActivityClass c) const {
  switch (c) {
    case ActivityClass::Bkg:
      return bkg;
    case ActivityClass::Alert:
      return alert;
    case ActivityClass::Fall:
      return fall;
  }
  return 0;
}

void ClassCounts::add(ActivityClass c) {
  switch (c) {
    case ActivityClass::Bkg:
      ++bkg;
      break;
    case ActivityClass::Alert:
      ++alert;
      break;
    case ActivityClass::Fall:
      ++fall;
      break;
  }
}

std::size_t window_count(std::size_t n, const WindowParams& p) {
  p.validate();
  return n < p.width ? 0 : (n - p.width) / p.stride + 1;
}

std::vector<std::size_t> window_starts(std::size_t n, const WindowParams& p) {
  std::vector<std::size_t> starts(window_count(n, p));
  for (std::size_t k = 0; k < starts.size(); ++k) starts[k] = k * p.stride;
  return starts;
}

double window_seconds(std::size_t width) { return static_cast<double>(width) / kSampleRateHz; }

ActivityClass label_window(std::span<const ActivityClass> sample_labels, const LabelRule& rule) {
  std::size_t fall = 0;
  std::size_t alert = 0;
  for (auto c : sample_labels) {
    if (c == ActivityClass::Fall) ++fall;
    if (c == ActivityClass::Alert) ++alert;
  }
  if (fall > 0 && fall >= rule.fall_threshold(sample_labels.size())) return ActivityClass::Fall;
  if (2 * alert > sample_labels.size()) return ActivityClass::Alert;
  return ActivityClass::Bkg;
}

std::vector<Window> segment(const sensordata::Sequence& seq, std::span<const ActivityClass> labels,
                            const WindowParams& p, const LabelRule& rule) {
  if (labels.size() != seq.size()) throw Error("label count does not match sequence length");
  std::vector<Window> windows;
  const std::string source = seq.id.str();
  for (auto start : window_starts(seq.size(), p)) {
    Window win;
    win.source = source;
    win.start = start;
    win.samples.reserve(p.width);
    for (std::size_t i = start; i < start + p.width; ++i) win.samples.push_back(seq.accel(i));
    win.label = label_window(labels.subspan(start, p.width), rule);
    windows.push_back(std::move(win));
  }
  return windows;
}

std::vector<Window> segment(const annotation::AnnotatedSequence& seq, const WindowParams& p,
                            const LabelRule& rule) {
  const auto labels = seq.per_sample_labels();
  return segment(seq.sequence(), labels, p, rule);
}

ClassCounts class_counts(std::span<const Window> windows) {
  ClassCounts counts;
  for (const auto& w : windows) counts.add(w.label);
  return counts;
}

void write_window_index(std::ostream& out, std::span<const Window> windows) {
  out << "seq_id,start,label\n";
  for (const auto& w : windows) out << w.source << ',' << w.start << ',' << to_string(w.label) << '\n';
}

std::vector<WindowIndexRow> read_window_index(std::istream& in) {
  std::vector<WindowIndexRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line == "seq_id,start,label")) continue;
    std::istringstream fields(line);
    std::string id, start, label;
    if (!std::getline(fields, id, ',') || !std::getline(fields, start, ',') ||
        !std::getline(fields, label)) {
      throw Error("window index line " + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      rows.push_back({id, static_cast<std::size_t>(std::stoull(start)), class_from_string(label)});
    } catch (const std::logic_error&) {
      throw Error("window index line " + std::to_string(line_no) + ": bad start index");
    }
  }
  return rows;
}

}  // namespace falldet::windowing
