#include "falldet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

namespace falldet::report {

namespace {

// grey background, orange ALERT, pale blue FALL
const char* class_color(ActivityClass c) {
  switch (c) {
    case ActivityClass::Bkg:
      return "#d9d9d9";
    case ActivityClass::Alert:
      return "#ff9f1c";
    case ActivityClass::Fall:
      return "#7ec8e3";
  }
  return "#000000";
}

const char* curve_color(ActivityClass c) {
  switch (c) {
    case ActivityClass::Bkg:
      return "#555555";
    case ActivityClass::Alert:
      return "#e07b00";
    case ActivityClass::Fall:
      return "#1f77b4";
  }
  return "#000000";
}

std::string recall_cell(const std::optional<double>& r) { return r ? format_real(*r) : "NA"; }

std::string svg_open(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle") {
  return "<text x=\"" + format_real(x) + "\" y=\"" + format_real(y) + "\" text-anchor=\"" + anchor + "\">" + s +
         "</text>\n";
}

std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + format_real(x) + "\" y=\"" + format_real(y) + "\" width=\"" + format_real(w) +
         "\" height=\"" + format_real(h) + "\" fill=\"" + fill + "\"/>\n";
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_confusion_csv(std::ostream& out, const evaluation::ConfusionMatrix& cm) {
  out << "truth\\predicted,BKG,ALERT,FALL\n";
  for (auto t : kAllClasses) {
    out << to_string(t);
    for (auto p : kAllClasses) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const evaluation::SweepResult& result) {
  out << "w,stride_percent,stride,seconds,train_bkg,train_alert,train_fall,test_bkg,test_alert,test_fall,"
         "recall_bkg,recall_alert,recall_fall\n";
  for (const auto& r : result.rows) {
    out << r.width << ',' << r.stride_percent << ',' << r.stride << ',' << format_real(windowing::window_seconds(r.width))
        << ',' << r.train_counts.bkg << ',' << r.train_counts.alert << ',' << r.train_counts.fall << ','
        << r.test_counts.bkg << ',' << r.test_counts.alert << ',' << r.test_counts.fall << ','
        << recall_cell(r.recall[0]) << ',' << recall_cell(r.recall[1]) << ',' << recall_cell(r.recall[2]) << '\n';
  }
}

void write_timeline_csv(std::ostream& out, const evaluation::Timeline& tl) {
  out << "start,end,truth,baseline,model\n";
  for (const auto& r : tl.rows) {
    out << r.start << ',' << r.end << ',' << to_string(r.truth) << ',' << to_string(r.baseline) << ','
        << to_string(r.model) << '\n';
  }
}

std::string confusion_svg(const evaluation::ConfusionMatrix& cm, const std::string& title) {
  const double cell = 80.0;
  const double left = 90.0;
  const double top = 60.0;
  std::string s = svg_open(static_cast<int>(left + 3 * cell + 20), static_cast<int>(top + 3 * cell + 50));
  s += text(left + 1.5 * cell, 20, title);
  s += text(left + 1.5 * cell, 45, "predicted");
  for (auto t : kAllClasses) {
    const double row_sum = static_cast<double>(cm.row_sum(t));
    const double y = top + cell * static_cast<double>(index_of(t));
    s += text(left - 10, y + cell / 2 + 4, std::string(to_string(t)), "end");
    for (auto p : kAllClasses) {
      const double x = left + cell * static_cast<double>(index_of(p));
      const double frac = row_sum > 0 ? static_cast<double>(cm.at(t, p)) / row_sum : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      s += rect(x, y, cell, cell, fill);
      s += text(x + cell / 2, y + cell / 2 + 4, std::to_string(cm.at(t, p)));
    }
  }
  for (auto p : kAllClasses) {
    s += text(left + cell * (static_cast<double>(index_of(p)) + 0.5), top + 3 * cell + 18, std::string(to_string(p)));
  }
  s += text(20, top + 1.5 * cell, "true", "middle");
  s += "</svg>\n";
  return s;
}

std::string sweep_svg(const evaluation::SweepResult& result) {
  const double left = 60, top = 30, plot_w = 480, plot_h = 260;
  std::string s = svg_open(static_cast<int>(left + plot_w + 160), static_cast<int>(top + plot_h + 60));
  s += text(left + plot_w / 2, 18, "Per-class recall vs window width");
  s += "<rect x=\"" + format_real(left) + "\" y=\"" + format_real(top) + "\" width=\"" + format_real(plot_w) +
       "\" height=\"" + format_real(plot_h) + "\" fill=\"none\" stroke=\"#000\"/>\n";
  if (result.rows.empty()) return s + "</svg>\n";

  double lo = 1e300, hi = -1e300;
  for (const auto& r : result.rows) {
    lo = std::min(lo, std::log2(static_cast<double>(r.width)));
    hi = std::max(hi, std::log2(static_cast<double>(r.width)));
  }
  const double span = hi > lo ? hi - lo : 1.0;
  auto px = [&](std::size_t w) {
    return left + (hi > lo ? (std::log2(static_cast<double>(w)) - lo) / span : 0.5) * plot_w;
  };
  auto py = [&](double v) { return top + (1.0 - v) * plot_h; };

  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    s += text(left - 8, py(v) + 4, format_real(v).substr(0, 4), "end");
  }
  std::map<std::size_t, bool> ticks;
  for (const auto& r : result.rows) ticks[r.width] = true;
  for (const auto& [w, _] : ticks) s += text(px(w), top + plot_h + 18, std::to_string(w));
  s += text(left + plot_w / 2, top + plot_h + 40, "window width w (samples)");

  std::map<int, std::vector<const evaluation::SweepRow*>> by_stride;
  for (const auto& r : result.rows) by_stride[r.stride_percent].push_back(&r);
  double legend_y = top + 10;
  int dash = 0;
  for (const auto& [pct, rows] : by_stride) {
    for (auto c : kAllClasses) {
      std::string points;
      for (const auto* r : rows) {
        const auto& v = r->recall[index_of(c)];
        if (!v) continue;
        points += format_real(px(r->width)) + "," + format_real(py(*v)) + " ";
      }
      s += std::string("<polyline fill=\"none\" stroke=\"") + curve_color(c) + "\" stroke-width=\"2\"" +
           (dash ? " stroke-dasharray=\"" + std::to_string(4 * dash) + ",3\"" : std::string()) + " points=\"" +
           points + "\"/>\n";
      s += text(left + plot_w + 10, legend_y, std::string(to_string(c)) + " @ " + std::to_string(pct) + "%", "start");
      s += rect(left + plot_w + 120, legend_y - 9, 20, 3, curve_color(c));
      legend_y += 16;
    }
    ++dash;
  }
  s += "</svg>\n";
  return s;
}

std::string timeline_svg(const evaluation::Timeline& tl) {
  const double left = 90, top = 30, plot_w = 720, track_h = 28, gap = 12;
  std::string s = svg_open(static_cast<int>(left + plot_w + 20), static_cast<int>(top + 3 * (track_h + gap) + 40));
  s += text(left + plot_w / 2, 18, "Classification timeline: " + tl.source);
  std::size_t extent = 1;
  for (const auto& r : tl.rows) extent = std::max(extent, r.end);
  const double scale = plot_w / static_cast<double>(extent);
  const char* names[] = {"truth", "C9", "model"};
  for (int track = 0; track < 3; ++track) {
    const double y = top + track * (track_h + gap);
    s += text(left - 8, y + track_h / 2 + 4, names[track], "end");
    s += rect(left, y, plot_w, track_h, "#f5f5f5");
    for (std::size_t i = 0; i < tl.rows.size(); ++i) {
      const auto& r = tl.rows[i];
      // each window owns the span up to the next window's start
      const std::size_t until = i + 1 < tl.rows.size() ? std::max(tl.rows[i + 1].start, r.start) : r.end;
      const ActivityClass c = track == 0 ? r.truth : track == 1 ? r.baseline : r.model;
      s += rect(left + r.start * scale, y, std::max(1.0, (until - r.start) * scale), track_h, class_color(c));
    }
  }
  s += text(left + plot_w / 2, top + 3 * (track_h + gap) + 20,
            "sample index (" + std::to_string(extent) + " samples, " + format_real(extent / kSampleRateHz) + " s)");
  s += "</svg>\n";
  return s;
}

}  // namespace falldet::report
