// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "falldet/baseline.hpp"
#include "falldet/cli.hpp"
#include "falldet/evaluation.hpp"
#include "falldet/model.hpp"
#include "falldet/online.hpp"
#include "falldet/synth.hpp"
#include "falldet/windowing.hpp"
#include "test_util.hpp"

using namespace falldet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.1fs", secs);
  std::cout << (r.pass ? "PASS" : "FAIL") << "  " << name << "  [" << timing << "]  " << r.detail << std::endl;
  if (!r.pass) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// (1 / 2n^2) sum_ij (x_i - x_j)^2
double pairwise_variance(std::span<const Vec3> s, int axis) {
  double acc = 0;
  for (const auto& a : s) {
    for (const auto& b : s) acc += (a[axis] - b[axis]) * (a[axis] - b[axis]);
  }
  const double n = static_cast<double>(s.size());
  return acc / (2 * n * n);
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// Shared imbalanced fixture: 50:5:1 training set and a held-out test set at w = 32.
struct Fixture {
  static constexpr std::size_t kWidth = 32;
  std::vector<windowing::Window> train = synth::make_windows({500, 50, 10}, kWidth, 11);
  std::vector<windowing::Window> test = synth::make_windows({1000, 100, 20}, kWidth, 12);
  model::TrainConfig config() const {
    model::TrainConfig cfg;
    cfg.width = kWidth;
    return cfg;
  }
};

evaluation::Recalls recalls(const std::vector<ActivityClass>& pred, const std::vector<windowing::Window>& test) {
  return evaluation::per_class_accuracy(evaluation::confusion_matrix(pred, evaluation::labels_of(test)));
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "falldet");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

}  // namespace

int main() {
  std::cout << std::boolalpha;
  Fixture fx;
  std::optional<model::ModelParams> weighted_model;
  evaluation::Recalls weighted_recall{};

  criterion("gradient check (w=8, batch 4, float64, h=1e-5, rel err < 1e-4)", [] {
    const auto t0 = Clock::now();
    const auto windows = synth::make_windows({2, 1, 1}, 8, 3);
    std::vector<model::WindowInput> batch;
    for (const auto& w : windows) batch.push_back(model::to_input(w));
    const auto labels = evaluation::labels_of(windows);
    model::Rng rng(4);
    const auto masks = model::make_dropout_masks(batch.size(), 8, 0.5, rng);
    model::GradCheckOptions opts;
    opts.step = 1e-5;
    opts.tolerance = 1e-4;
    opts.coords_per_tensor = 200;
    const auto report = model::gradient_check(model::init_params(1), batch, labels, {1.0, 10.0, 50.0},
                                              model::Mode::Train, masks, opts);
    bool coverage = true;
    std::size_t coords = 0;
    auto p = model::init_params(1);
    const auto views = model::tensors(p.weights);
    for (std::size_t k = 0; k < report.tensors.size(); ++k) {
      const auto want = std::min<std::size_t>(200, static_cast<std::size_t>(views[k].size()));
      coverage = coverage && report.tensors[k].coordinates == want;
      coords += report.tensors[k].coordinates;
    }
    const double secs = seconds_since(t0);
    return Outcome{report.passed && report.max_rel_error < 1e-4 && coverage && secs < 60,
                   fmt("max rel err %.3e", report.max_rel_error) + ", " + std::to_string(coords) +
                       " coordinates (200 per tensor, smaller tensors exhaustive)"};
  });

  criterion("overfit 20 fixture windows to weighted loss < 0.01 within 200 epochs", [] {
    const auto t0 = Clock::now();
    const auto windows = synth::make_windows({10, 5, 5}, 32, 21);
    model::TrainConfig cfg;
    cfg.width = 32;
    cfg.epochs = 200;
    cfg.batch_size = windows.size();
    cfg.dropout_rate = 0.0;
    cfg.learning_rate = 1e-2;
    cfg.seed = 5;
    const auto res = model::train(windows, cfg);
    std::size_t reached = 0;
    for (std::size_t e = 0; e < res.loss_history.size() && !reached; ++e) {
      if (res.loss_history[e] < 0.01) reached = e + 1;
    }
    // the same loss re-evaluated at inference with the final parameters
    std::vector<model::WindowInput> in;
    for (const auto& w : windows) in.push_back(model::to_input(w));
    const auto labels = evaluation::labels_of(windows);
    const double infer = model::batch_loss(in, labels, res.params, res.loss_weights, model::Mode::Infer);
    const double secs = seconds_since(t0);
    return Outcome{reached > 0 && secs < 60,
                   "summed weighted loss < 0.01 first at epoch " + std::to_string(reached) +
                       fmt(", final %.2e", res.loss_history.back()) + fmt(", inference-mode %.2e", infer)};
  });

  criterion("weighted-loss identities", [] {
    bool ok = true;
    const auto m = model::LossWeights::from_counts({500, 50, 10});
    ok = ok && m.bkg == 1.0 && m.alert == 10.0 && m.fall == 50.0;
    model::Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
      const windowing::ClassCounts c{1 + rng() % 5000, 1 + rng() % 500, 1 + rng() % 100};
      const auto w = model::LossWeights::from_counts(c);
      ok = ok && w.bkg == 1.0 && w.alert == static_cast<double>(c.bkg) / static_cast<double>(c.alert) &&
           w.fall == static_cast<double>(c.bkg) / static_cast<double>(c.fall);
    }
    // balanced classes: weighted loss is plain cross-entropy, bit for bit
    const auto windows = synth::make_windows({4, 4, 4}, 16, 9);
    std::vector<model::WindowInput> in;
    for (const auto& w : windows) in.push_back(model::to_input(w));
    const auto labels = evaluation::labels_of(windows);
    const auto params = model::init_params(2);
    const auto probs = model::forward_batch(in, params, model::Mode::Infer);
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) ce += -std::log(std::max(probs[i][index_of(labels[i])], 1e-12));
    const auto balanced = model::LossWeights::from_counts(windowing::class_counts(windows));
    const double wl = model::weighted_loss(probs, labels, balanced);
    const auto g1 = model::loss_and_grad(in, labels, params, balanced, model::Mode::Train, {}, 1);
    const auto g2 = model::loss_and_grad(in, labels, params, model::LossWeights::uniform(), model::Mode::Train, {}, 1);
    bool grads_equal = g1.loss == g2.loss;
    auto a = g1.grad, b = g2.grad;
    const auto va = model::tensors(a), vb = model::tensors(b);
    for (std::size_t k = 0; k < va.size(); ++k) {
      grads_equal = grads_equal && std::memcmp(va[k].data, vb[k].data, sizeof(double) * va[k].size()) == 0;
    }
    return Outcome{ok && wl == ce && grads_equal, "m = (1, 10, 50) for 500/50/10; balanced loss == CE: " +
                                                     std::string(wl == ce ? "bit-exact" : "differs")};
  });

  criterion("imbalance benefit (50:5:1 fixture, weighted vs unweighted)", [&] {
    const auto t0 = Clock::now();
    auto cfg = fx.config();
    const auto weighted = model::train(fx.train, cfg);
    cfg.weighted_loss = false;
    const auto plain = model::train(fx.train, cfg);
    const auto rw = recalls(evaluation::predict_model(weighted.params, fx.test), fx.test);
    const auto ru = recalls(evaluation::predict_model(plain.params, fx.test), fx.test);
    weighted_model = weighted.params;
    weighted_recall = rw;
    const double secs = seconds_since(t0);
    const bool pass = *rw[1] >= 0.8 && *rw[2] >= 0.8 && *ru[1] < *rw[1] && secs < 300;
    return Outcome{pass, fmt("weighted ALERT %.3f", *rw[1]) + fmt(" FALL %.3f", *rw[2]) +
                             fmt("; unweighted ALERT %.3f", *ru[1]) + fmt(" FALL %.3f", *ru[2])};
  });

  criterion("baseline oracle (variance and exhaustive calibration)", [] {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z(0, 1);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto n = std::uniform_int_distribution<std::size_t>(2, 256)(rng);
      const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-1, 3)(rng));
      std::vector<Vec3> s(n);
      for (auto& v : s) v = {scale * z(rng) + 40, scale * z(rng) - 256, scale * z(rng)};
      const double vx = pairwise_variance(s, 0), vy = pairwise_variance(s, 1), vz = pairwise_variance(s, 2);
      worst = std::max(worst, rel(baseline::c8(s), std::sqrt(vx + vz)));
      worst = std::max(worst, rel(baseline::c9(s), std::sqrt(vx + vy + vz)));
    }
    // Calibration: any threshold acts like the smallest value it admits, so the
    // distinct values plus "above everything" cover every possible labeling.
    bool cal_ok = true;
    for (int trial = 0; trial < 300 && cal_ok; ++trial) {
      const auto n = std::uniform_int_distribution<std::size_t>(3, 100)(rng);
      std::vector<double> v(n);
      std::vector<ActivityClass> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = i < 3 ? kAllClasses[i] : kAllClasses[std::uniform_int_distribution<int>(0, 2)(rng)];
        v[i] = trial % 2 ? std::floor(std::uniform_real_distribution<double>(0, 5)(rng))
                         : std::max(0.0, 10.0 * index_of(y[i]) + 8 * z(rng));
      }
      std::set<double> distinct(v.begin(), v.end());
      std::vector<double> cuts(distinct.begin(), distinct.end());
      cuts.push_back(std::numeric_limits<double>::infinity());
      std::size_t best = 0;
      for (std::size_t f = 0; f < cuts.size(); ++f) {
        for (std::size_t a = 0; a <= f; ++a) {
          std::size_t correct = 0;
          for (std::size_t i = 0; i < n; ++i) {
            const auto c = v[i] >= cuts[f] ? ActivityClass::Fall : v[i] >= cuts[a] ? ActivityClass::Alert : ActivityClass::Bkg;
            correct += c == y[i];
          }
          best = std::max(best, correct);
        }
      }
      const auto cal = baseline::calibrate_thresholds(v, y);
      std::size_t achieved = 0;
      for (std::size_t i = 0; i < n; ++i) achieved += baseline::classify(v[i], cal.thresholds) == y[i];
      cal_ok = cal.correct == best && achieved == best;
    }
    return Outcome{worst <= 1e-9 && cal_ok,
                   fmt("max rel err %.2e over 1000 windows", worst) + "; 300 calibration instances " +
                       (cal_ok ? "match" : "differ")};
  });

  criterion("model FALL recall >= calibrated C9 FALL recall", [&] {
    if (!weighted_model) {
      auto cfg = fx.config();
      const auto res = model::train(fx.train, cfg);
      weighted_model = res.params;
      weighted_recall = recalls(evaluation::predict_model(res.params, fx.test), fx.test);
    }
    const auto cal = baseline::calibrate_thresholds(fx.train, baseline::Indicator::C9);
    const auto rb = recalls(evaluation::predict_baseline(cal.thresholds, baseline::Indicator::C9, fx.test), fx.test);
    return Outcome{*weighted_recall[2] >= *rb[2],
                   fmt("model FALL %.3f", *weighted_recall[2]) + fmt(" vs C9 FALL %.3f", *rb[2]) +
                       fmt(" (C9 thresholds %.2f", cal.thresholds.alert) + fmt(" / %.2f)", cal.thresholds.fall)};
  });

  criterion("windowing count formula and 1.28 s at w=256", [] {
    std::mt19937_64 rng(77);
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      const auto n = std::uniform_int_distribution<std::size_t>(0, 3000)(rng);
      const auto w = std::uniform_int_distribution<std::size_t>(2, 600)(rng);
      const auto s = std::uniform_int_distribution<std::size_t>(1, w)(rng);
      std::vector<std::size_t> starts;
      for (std::size_t b = 0; b + w <= n; b += s) starts.push_back(b);
      ok = ok && windowing::window_count(n, {w, s}) == starts.size() && windowing::window_starts(n, {w, s}) == starts;
    }
    const double secs = windowing::window_seconds(256);
    return Outcome{ok && secs == 1.28, "1000 enumerations " + std::string(ok ? "agree" : "disagree") +
                                           fmt("; w=256 -> %.2f s", secs)};
  });

  criterion("online replay equals offline labels", [&] {
    if (!weighted_model) weighted_model = model::train(fx.train, fx.config()).params;
    const auto cal = baseline::calibrate_thresholds(fx.train, baseline::Indicator::C9);
    synth::DatasetSpec spec;
    spec.subjects = 3;
    spec.activities = {"D01", "D03", "D07", "F01", "F02"};
    std::size_t windows = 0, mismatches = 0, recordings = 0;
    for (const auto& rec : synth::make_dataset(spec)) {
      ++recordings;
      for (int pct : {25, 50, 75, 100}) {
        const auto p = windowing::WindowParams::from_percent(Fixture::kWidth, pct);
        for (const online::Backend& backend :
             {online::Backend{*weighted_model}, online::Backend{online::BaselineBackend{cal.thresholds}}}) {
          online::OnlineDetector det(p, backend);
          const auto on = online::replay(det, rec.sequence());
          const auto off = online::offline_detections(rec.sequence(), p, backend);
          mismatches += on.size() == off.size() ? 0 : 1;
          for (std::size_t i = 0; i < std::min(on.size(), off.size()); ++i) mismatches += !(on[i] == off[i]);
          windows += off.size();
        }
      }
    }
    return Outcome{mismatches == 0 && windows > 0, std::to_string(mismatches) + " mismatches over " +
                                                       std::to_string(windows) + " windows, " +
                                                       std::to_string(recordings) + " recordings"};
  });

  criterion("rotation: C9 invariant, C8 changes under a 90 degree turn", [] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0, 60);
    const double a = 0.7, b = -1.1, c = 2.3;
    const Eigen::Matrix3d R = (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(c, Eigen::Vector3d::UnitX()))
                                  .toRotationMatrix();
    double worst = 0;
    for (int i = 0; i < 500; ++i) {
      std::vector<Vec3> s(256), r(256);
      for (std::size_t t = 0; t < s.size(); ++t) {
        s[t] = {z(rng), -256 + z(rng), z(rng)};
        const Eigen::Vector3d v = R * Eigen::Vector3d(s[t][0], s[t][1], s[t][2]);
        r[t] = {v[0], v[1], v[2]};
      }
      worst = std::max(worst, rel(baseline::c9(s), baseline::c9(r)));
    }
    // all variance on x; a quarter turn about z moves it onto y
    std::vector<Vec3> s(256), q(256);
    for (std::size_t t = 0; t < s.size(); ++t) {
      s[t] = {z(rng), -256, 0};
      q[t] = {256, s[t][0], 0};
    }
    const double before = baseline::c8(s), after = baseline::c8(q);
    return Outcome{worst <= 1e-9 && rel(before, after) > 0.5,
                   fmt("C9 max rel change %.2e", worst) + fmt("; C8 %.2f", before) + fmt(" -> %.2f", after)};
  });

  criterion("train and sweep artifacts are byte-identical on rerun", [] {
    test_util::TempDir dir("accept");
    synth::DatasetSpec spec;
    spec.subjects = 4;
    spec.activities = {"D01", "D07", "F01", "F02"};
    synth::write_dataset(spec, dir / "data", dir / "ann");
    auto common = [&](const std::string& out) {
      return std::vector<std::string>{"--data", (dir / "data").string(), "--annotations", (dir / "ann").string(),
                                      "--out", (dir / out).string(), "-w", "32", "--epochs", "2",
                                      "--train-fraction", "0.5", "--threads", "2"};
    };
    bool ok = true;
    for (const char* out : {"a", "b"}) {
      auto t = common(out);
      t.push_back("train");
      auto s = common(out);
      s.insert(s.end(), {"sweep", "--widths", "32,64", "--strides", "50"});
      ok = ok && run_cli(t) == 0 && run_cli(s) == 0;
    }
    std::vector<std::string> same;
    for (const char* f : {"metrics.json", "model.json", "confusion_model.csv", "sweep.csv", "sweep.svg"}) {
      if (cli::read_file(dir / "a" / f) == cli::read_file(dir / "b" / f)) {
        same.push_back(f);
      } else {
        ok = false;
      }
    }
    std::string list;
    for (const auto& f : same) list += (list.empty() ? "" : ", ") + f;
    return Outcome{ok && same.size() == 5, "identical: " + list};
  });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
