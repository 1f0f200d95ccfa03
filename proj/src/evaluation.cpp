#include "falldet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "parallel.hpp"

namespace falldet::evaluation {

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& row : counts) {
    for (auto v : row) sum += v;
  }
  return sum;
}

std::size_t ConfusionMatrix::row_sum(ActivityClass truth) const {
  std::size_t sum = 0;
  for (auto v : counts[index_of(truth)]) sum += v;
  return sum;
}

ConfusionMatrix confusion_matrix(std::span<const ActivityClass> predicted, std::span<const ActivityClass> truth) {
  if (predicted.size() != truth.size()) throw Error("prediction and truth lists differ in length");
  if (truth.empty()) throw Error("confusion matrix needs at least one window");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
  return cm;
}

Recalls per_class_accuracy(const ConfusionMatrix& cm) {
  Recalls r;
  for (auto c : kAllClasses) {
    const auto row = cm.row_sum(c);
    if (row > 0) r[index_of(c)] = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
  }
  return r;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) return 0.0;
  std::size_t diag = 0;
  for (auto c : kAllClasses) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(total);
}

SubjectSplit split_subjects(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must be in (0, 1)");
  std::set<std::string> unique;
  for (const auto& s : data) unique.insert(s.sequence().id.subject);
  std::vector<std::string> subjects(unique.begin(), unique.end());
  model::Rng rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  const std::size_t n = subjects.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n > 1) n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  else n_train = n;
  SubjectSplit split;
  for (std::size_t i = 0; i < n; ++i) (i < n_train ? split.train : split.test).insert(subjects[i]);
  return split;
}

WindowedSplit window_split(const Dataset& data, const SubjectSplit& split, const windowing::WindowParams& p,
                           const windowing::LabelRule& rule) {
  WindowedSplit out;
  for (const auto& s : data) {
    const auto& subject = s.sequence().id.subject;
    const bool in_train = split.train.count(subject) > 0;
    const bool in_test = split.test.count(subject) > 0;
    if (!in_train && !in_test) continue;
    auto windows = windowing::segment(s, p, rule);
    auto& dest = in_train ? out.train : out.test;
    std::move(windows.begin(), windows.end(), std::back_inserter(dest));
  }
  return out;
}

std::vector<ActivityClass> labels_of(std::span<const windowing::Window> windows) {
  std::vector<ActivityClass> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.label);
  return out;
}

std::vector<ActivityClass> predict_model(const model::ModelParams& params,
                                         std::span<const windowing::Window> windows) {
  model::InferenceModel<double> net(params);
  std::vector<ActivityClass> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(net.classify(model::to_input(w)));
  return out;
}

std::vector<ActivityClass> predict_baseline(const baseline::Thresholds& th, baseline::Indicator ind,
                                            std::span<const windowing::Window> windows) {
  std::vector<ActivityClass> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(baseline::classify(baseline::indicator_value(ind, w.samples), th));
  return out;
}

std::vector<std::size_t> default_sweep_widths() { return {32, 64, 128, 256, 512, 1024}; }

SweepResult sweep(const Dataset& data, std::span<const std::size_t> widths, std::span<const int> stride_percents,
                  const SweepConfig& cfg) {
  if (widths.empty()) throw Error("sweep needs at least one window width");
  if (stride_percents.empty()) throw Error("sweep needs at least one stride");
  const auto split = split_subjects(data, cfg.train_fraction, cfg.split_seed);

  struct Cell {
    std::size_t width;
    int pct;
  };
  std::vector<Cell> cells;
  for (auto w : widths) {
    for (auto pct : stride_percents) cells.push_back({w, pct});
  }
  SweepResult result;
  result.rows.resize(cells.size());
  detail::parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    const auto [width, pct] = cells[i];
    try {
      const auto params = windowing::WindowParams::from_percent(width, pct);
      const auto windows = window_split(data, split, params, cfg.rule);
      if (windows.test.empty()) throw Error("no test windows");
      auto train_cfg = cfg.train;
      train_cfg.width = width;
      const auto trained = model::train(windows.train, train_cfg);
      const auto predicted = predict_model(trained.params, windows.test);
      auto& row = result.rows[i];
      row.width = width;
      row.stride_percent = pct;
      row.stride = params.stride;
      row.train_counts = windowing::class_counts(windows.train);
      row.test_counts = windowing::class_counts(windows.test);
      row.confusion = confusion_matrix(predicted, labels_of(windows.test));
      row.recall = per_class_accuracy(row.confusion);
    } catch (const std::exception& e) {
      throw Error("sweep cell w=" + std::to_string(width) + " stride=" + std::to_string(pct) + "%: " + e.what());
    }
  });
  return result;
}

std::size_t Timeline::disagreements() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const TimelineRow& r) {
    return r.truth != r.baseline || r.truth != r.model;
  }));
}

Timeline timeline(const annotation::AnnotatedSequence& seq, std::span<const windowing::Window> windows,
                  std::span<const ActivityClass> baseline_preds, std::span<const ActivityClass> model_preds) {
  if (windows.size() != baseline_preds.size() || windows.size() != model_preds.size()) {
    throw Error("timeline inputs are misaligned");
  }
  Timeline tl;
  tl.source = seq.sequence().id.str();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.source != tl.source) throw Error("window from " + w.source + " does not belong to " + tl.source);
    if (w.start + w.samples.size() > seq.size()) throw Error("window exceeds the sequence");
    tl.rows.push_back({w.start, w.start + w.samples.size(), w.label, baseline_preds[i], model_preds[i]});
  }
  std::stable_sort(tl.rows.begin(), tl.rows.end(),
                   [](const TimelineRow& a, const TimelineRow& b) { return a.start < b.start; });
  return tl;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : cm.counts) rows.push_back(row);
  return {{"classes", {"BKG", "ALERT", "FALL"}}, {"counts", std::move(rows)}};
}

nlohmann::json to_json(const Recalls& r) {
  nlohmann::json out = nlohmann::json::object();
  for (auto c : kAllClasses) {
    const auto& v = r[index_of(c)];
    out[std::string(to_string(c))] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  }
  return out;
}

nlohmann::json to_json(const Timeline& tl) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : tl.rows) {
    rows.push_back({{"start", r.start},
                    {"end", r.end},
                    {"truth", std::string(to_string(r.truth))},
                    {"baseline", std::string(to_string(r.baseline))},
                    {"model", std::string(to_string(r.model))}});
  }
  return {{"source", tl.source}, {"windows", std::move(rows)}};
}

}  // namespace falldet::evaluation
