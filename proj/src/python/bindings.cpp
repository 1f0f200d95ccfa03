#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "falldet/baseline.hpp"
#include "falldet/cli.hpp"
#include "falldet/model.hpp"
#include "falldet/online.hpp"
#include "falldet/synth.hpp"
#include "falldet/windowing.hpp"

namespace py = pybind11;
using namespace falldet;

namespace {

using Samples = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_samples(const Samples& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw py::value_error("expected an (n, 3) array");
  auto r = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1), r(i, 2)};
  return out;
}

py::array_t<double> to_array(std::span<const Vec3> s) {
  py::array_t<double> out({static_cast<py::ssize_t>(s.size()), py::ssize_t{3}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = s[i][k];
  }
  return out;
}

std::vector<ActivityClass> to_classes(const std::vector<std::string>& names) {
  std::vector<ActivityClass> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(class_from_string(n));
  return out;
}

model::WindowInput to_input(const Samples& a) {
  const auto s = to_samples(a);
  model::WindowInput x(3, static_cast<Eigen::Index>(s.size()));
  for (std::size_t t = 0; t < s.size(); ++t) {
    for (int k = 0; k < 3; ++k) x(k, static_cast<Eigen::Index>(t)) = s[t][k];
  }
  return x;
}

class PyModel {
 public:
  explicit PyModel(const std::filesystem::path& path)
      : ck_(model::checkpoint_from_json(nlohmann::json::parse(cli::read_file(path)))), net_(ck_.params) {}

  std::array<double, 3> predict(const Samples& window) {
    const auto x = to_input(window);
    if (static_cast<std::size_t>(x.cols()) != ck_.window.width) {
      throw py::value_error("window must have " + std::to_string(ck_.window.width) + " samples");
    }
    return net_.predict(x);
  }
  std::string classify(const Samples& window) { return std::string(to_string(model::argmax(predict(window)))); }
  std::size_t width() const { return ck_.window.width; }
  std::size_t stride() const { return ck_.window.stride; }
  const model::Checkpoint& checkpoint() const { return ck_; }

 private:
  model::Checkpoint ck_;
  model::InferenceModel<double> net_;
};

py::object detection(const std::optional<online::Detection>& d) {
  if (!d) return py::none();
  return py::make_tuple(d->start, std::string(to_string(d->cls)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fall detection toolkit: SisFall parsing, windowing, C8/C9 baselines, LSTM inference and replay";

  py::register_exception<Error>(m, "FalldetError", PyExc_ValueError);

  m.def(
      "load_recording",
      [](const std::filesystem::path& path) {
        const auto seq = sensordata::load_sisfall_file(path);
        std::vector<Vec3> s(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) s[i] = seq.accel(i);
        return py::make_tuple(seq.id.str(), to_array(s));
      },
      py::arg("path"), "Returns (sequence id, raw accelerometer counts as an (n, 3) float array).");
  m.def(
      "counts_to_g", [](std::int64_t raw) { return sensordata::convert_raw_to_g(raw, sensordata::adxl345_spec()); },
      py::arg("raw"), "ADXL345 counts (13 bits, +-16 g) to g.");

  m.def("window_count", [](std::size_t n, std::size_t w, std::size_t s) { return windowing::window_count(n, {w, s}); },
        py::arg("n"), py::arg("width"), py::arg("stride"));
  m.def("window_starts", [](std::size_t n, std::size_t w, std::size_t s) { return windowing::window_starts(n, {w, s}); },
        py::arg("n"), py::arg("width"), py::arg("stride"));
  m.def("window_seconds", &windowing::window_seconds, py::arg("width"));
  m.def(
      "label_window",
      [](const std::vector<std::string>& labels, int fall_percent) {
        windowing::LabelRule rule;
        rule.fall_percent = fall_percent;
        return std::string(to_string(windowing::label_window(to_classes(labels), rule)));
      },
      py::arg("labels"), py::arg("fall_percent") = 10);

  m.def("c8", [](const Samples& a) { return baseline::c8(to_samples(a)); }, py::arg("samples"));
  m.def("c9", [](const Samples& a) { return baseline::c9(to_samples(a)); }, py::arg("samples"));
  m.def(
      "calibrate_thresholds",
      [](const std::vector<double>& values, const std::vector<std::string>& labels) {
        const auto cal = baseline::calibrate_thresholds(values, to_classes(labels));
        return py::dict(py::arg("alert") = cal.thresholds.alert, py::arg("fall") = cal.thresholds.fall,
                        py::arg("correct") = cal.correct, py::arg("total") = cal.total);
      },
      py::arg("values"), py::arg("labels"));

  m.def(
      "loss_weights",
      [](std::size_t bkg, std::size_t alert, std::size_t fall) {
        const auto w = model::LossWeights::from_counts({bkg, alert, fall});
        return py::make_tuple(w.bkg, w.alert, w.fall);
      },
      py::arg("bkg"), py::arg("alert"), py::arg("fall"));

  m.def(
      "synthetic_windows",
      [](std::size_t bkg, std::size_t alert, std::size_t fall, std::size_t width, std::uint64_t seed) {
        const auto ws = synth::make_windows({bkg, alert, fall}, width, seed);
        py::list arrays;
        std::vector<std::string> labels;
        for (const auto& w : ws) {
          arrays.append(to_array(w.samples));
          labels.emplace_back(to_string(w.label));
        }
        return py::make_tuple(arrays, labels);
      },
      py::arg("bkg"), py::arg("alert"), py::arg("fall"), py::arg("width"), py::arg("seed") = 1);

  py::class_<PyModel>(m, "Model", "Trained checkpoint with a dropout-free inference path.")
      .def(py::init<std::filesystem::path>(), py::arg("path"))
      .def("predict", &PyModel::predict, py::arg("window"), "Class probabilities (BKG, ALERT, FALL).")
      .def("classify", &PyModel::classify, py::arg("window"))
      .def_property_readonly("width", &PyModel::width)
      .def_property_readonly("stride", &PyModel::stride);

  py::class_<online::OnlineDetector>(m, "OnlineDetector")
      .def(py::init([](const PyModel& model, std::optional<std::size_t> stride) {
             return online::OnlineDetector({model.width(), stride.value_or(model.stride())}, model.checkpoint().params);
           }),
           py::arg("model"), py::arg("stride") = py::none())
      .def(py::init([](std::size_t width, std::size_t stride, double alert, double fall, const std::string& indicator) {
             return online::OnlineDetector(
                 {width, stride}, online::BaselineBackend{{alert, fall}, baseline::indicator_from_string(indicator)});
           }),
           py::arg("width"), py::arg("stride"), py::arg("alert"), py::arg("fall"), py::arg("indicator") = "c9")
      .def(
          "push",
          [](online::OnlineDetector& d, double x, double y, double z) { return detection(d.push_sample({x, y, z})); },
          py::arg("x"), py::arg("y"), py::arg("z"), "Returns (start, class) when a window completes, else None.")
      .def(
          "replay",
          [](online::OnlineDetector& d, const Samples& a) {
            d.reset();
            py::list out;
            for (const auto& s : to_samples(a)) {
              if (auto det = d.push_sample(s)) out.append(detection(det));
            }
            return out;
          },
          py::arg("samples"))
      .def("reset", &online::OnlineDetector::reset)
      .def_property_readonly("samples_seen", &online::OnlineDetector::samples_seen);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "falldet");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
