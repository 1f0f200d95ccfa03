#pragma once

// CSV tables and static SVG plots for evaluation results. Output is a pure
// function of the input so reruns produce identical bytes.

#include <iosfwd>
#include <string>

#include "falldet/evaluation.hpp"

namespace falldet::report {

void write_confusion_csv(std::ostream& out, const evaluation::ConfusionMatrix& cm);
void write_sweep_csv(std::ostream& out, const evaluation::SweepResult& result);
void write_timeline_csv(std::ostream& out, const evaluation::Timeline& tl);

/// Row-normalized heatmap with raw counts in each cell.
std::string confusion_svg(const evaluation::ConfusionMatrix& cm, const std::string& title);
/// Per-class recall against window width (log2 axis), one curve per class and stride.
std::string sweep_svg(const evaluation::SweepResult& result);
/// Ground truth, baseline and model tracks over the sample axis.
std::string timeline_svg(const evaluation::Timeline& tl);

/// Fixed 6-decimal formatting used in every report.
std::string format_real(double v);

}  // namespace falldet::report
