#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "falldet/cli.hpp"
#include "falldet/online.hpp"
#include "falldet/report.hpp"
#include "falldet/server.hpp"
#include "falldet/synth.hpp"
#include "httplib.h"

namespace falldet::cli {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> data, annotations, out;
  std::optional<std::size_t> width, epochs, batch_size;
  std::optional<int> stride;
  std::optional<double> lr, dropout, train_fraction;
  std::optional<std::uint64_t> seed, split_seed;
  std::optional<std::string> optimizer;
  std::optional<unsigned> threads;
};

ProjectConfig resolve_config(const Overrides& o) {
  ProjectConfig cfg = o.config.empty() ? ProjectConfig{} : load_config(o.config);
  if (o.data) cfg.dataset_root = *o.data;
  if (o.annotations) cfg.annotations_root = *o.annotations;
  if (o.out) cfg.output_dir = *o.out;
  if (o.width) cfg.width = *o.width;
  if (o.stride) cfg.stride_percent = *o.stride;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.dropout) cfg.train.dropout_rate = *o.dropout;
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.split_seed) cfg.split_seed = *o.split_seed;
  if (o.train_fraction) cfg.train_fraction = *o.train_fraction;
  if (o.optimizer) cfg.train.optimizer = model::optimizer_from_string(*o.optimizer);
  if (o.threads) cfg.train.threads = *o.threads;
  cfg.train.width = cfg.width;
  cfg.validate();
  return cfg;
}

std::string recall_text(const std::optional<double>& r) {
  if (!r) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << *r;
  return s.str();
}

void print_recalls(std::ostream& out, const evaluation::Recalls& r) {
  out << "recall BKG " << recall_text(r[0]) << "  ALERT " << recall_text(r[1]) << "  FALL " << recall_text(r[2])
      << '\n';
}

nlohmann::json counts_json(const windowing::ClassCounts& c) {
  return {{"BKG", c.bkg}, {"ALERT", c.alert}, {"FALL", c.fall}};
}

nlohmann::json subjects_json(const std::set<std::string>& s) { return nlohmann::json(std::vector(s.begin(), s.end())); }

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

void write_confusion(const ProjectConfig& cfg, const std::string& stem, const evaluation::ConfusionMatrix& cm,
                     const std::string& title) {
  write_file_atomic(cfg.output_dir / (stem + ".csv"),
                    render([&](std::ostream& s) { report::write_confusion_csv(s, cm); }));
  write_file_atomic(cfg.output_dir / (stem + ".svg"), report::confusion_svg(cm, title));
}

struct Prepared {
  evaluation::Dataset data;
  evaluation::SubjectSplit split;
  evaluation::WindowedSplit windows;
};

Prepared prepare(const ProjectConfig& cfg) {
  Prepared p;
  p.data = load_dataset(cfg);
  p.split = evaluation::split_subjects(p.data, cfg.train_fraction, cfg.split_seed);
  p.windows = evaluation::window_split(p.data, p.split, cfg.window(), cfg.rule);
  if (p.windows.train.empty()) throw Error("training split has no complete windows");
  if (p.windows.test.empty()) throw Error("test split has no complete windows");
  return p;
}

int cmd_ingest(const ProjectConfig& cfg, const std::optional<std::string>& root, std::ostream& out,
               std::ostream& err) {
  const std::filesystem::path dir = root ? std::filesystem::path(*root) : cfg.dataset_root;
  const auto m = ingest(dir, cfg.column_map);
  const auto path = cfg.output_dir / "manifest.json";
  write_file_atomic(path, to_json(m).dump(2) + "\n");
  for (const auto& d : m.diagnostics) {
    err << "error: " << d.file.generic_string() << (d.line ? ":" + std::to_string(d.line) : std::string()) << ": "
        << d.message << '\n';
  }
  if (m.entries.empty() && m.diagnostics.empty()) err << "warning: no recordings found under " << dir.string() << '\n';
  out << m.entries.size() << " recording(s), " << m.diagnostics.size() << " diagnostic(s) -> " << path.string()
      << '\n';
  return m.diagnostics.empty() ? 0 : 1;
}

int cmd_train(ProjectConfig cfg, const std::string& loss, std::ostream& out, std::ostream& err) {
  if (!loss.empty()) cfg.train.weighted_loss = loss == "weighted";
  const auto p = prepare(cfg);
  const auto train_counts = windowing::class_counts(p.windows.train);
  out << "train windows " << train_counts.total() << " (BKG " << train_counts.bkg << ", ALERT " << train_counts.alert
      << ", FALL " << train_counts.fall << ")\n";

  const auto result = model::train(p.windows.train, cfg.train, [&](std::size_t epoch, double loss_sum) {
    err << "epoch " << epoch + 1 << "/" << cfg.train.epochs << " loss " << loss_sum << '\n';
  });
  const auto predicted = evaluation::predict_model(result.params, p.windows.test);
  const auto cm = evaluation::confusion_matrix(predicted, evaluation::labels_of(p.windows.test));
  const auto recall = evaluation::per_class_accuracy(cm);

  write_file_atomic(cfg.output_dir / "model.json",
                    model::checkpoint_to_json(result.params, cfg.train, cfg.window()).dump() + "\n");
  const nlohmann::json metrics = {
      {"config", to_json(cfg)},
      {"split", {{"train", subjects_json(p.split.train)}, {"test", subjects_json(p.split.test)}}},
      {"train_counts", counts_json(train_counts)},
      {"test_counts", counts_json(windowing::class_counts(p.windows.test))},
      {"loss_weights",
       {{"BKG", result.loss_weights.bkg}, {"ALERT", result.loss_weights.alert}, {"FALL", result.loss_weights.fall}}},
      {"loss_history", result.loss_history},
      {"confusion", evaluation::to_json(cm)},
      {"recall", evaluation::to_json(recall)},
      {"accuracy", evaluation::overall_accuracy(cm)},
  };
  write_file_atomic(cfg.output_dir / "metrics.json", metrics.dump(2) + "\n");
  write_confusion(cfg, "confusion_model", cm,
                  std::string("LSTM, ") + (cfg.train.weighted_loss ? "weighted" : "unweighted") + " loss");
  print_recalls(out, recall);
  out << "wrote " << (cfg.output_dir / "model.json").string() << ", metrics.json, confusion_model.{csv,svg}\n";
  return 0;
}

int cmd_baseline(const ProjectConfig& cfg, const std::string& indicator_name, std::ostream& out) {
  const auto indicator = baseline::indicator_from_string(indicator_name);
  const auto p = prepare(cfg);
  const auto cal = baseline::calibrate_thresholds(p.windows.train, indicator);
  const auto predicted = evaluation::predict_baseline(cal.thresholds, indicator, p.windows.test);
  const auto cm = evaluation::confusion_matrix(predicted, evaluation::labels_of(p.windows.test));
  const auto recall = evaluation::per_class_accuracy(cm);
  const std::string name(baseline::to_string(indicator));

  write_file_atomic(cfg.output_dir / "thresholds.json",
                    baseline::to_json(baseline::ThresholdFile{cal.thresholds, cfg.window(), indicator}).dump(2) + "\n");
  const nlohmann::json metrics = {
      {"config", to_json(cfg)},
      {"indicator", name},
      {"split", {{"train", subjects_json(p.split.train)}, {"test", subjects_json(p.split.test)}}},
      {"train_accuracy", cal.accuracy()},
      {"confusion", evaluation::to_json(cm)},
      {"recall", evaluation::to_json(recall)},
      {"accuracy", evaluation::overall_accuracy(cm)},
  };
  write_file_atomic(cfg.output_dir / ("baseline_metrics_" + name + ".json"), metrics.dump(2) + "\n");
  write_confusion(cfg, "confusion_" + name, cm, "Baseline " + std::string(name == "c9" ? "C9" : "C8"));
  out << name << " thresholds: alert " << cal.thresholds.alert << ", fall " << cal.thresholds.fall
      << " (train accuracy " << recall_text(cal.accuracy()) << ")\n";
  print_recalls(out, recall);
  return 0;
}

int cmd_sweep(const ProjectConfig& cfg, std::vector<std::size_t> widths, std::vector<int> strides, std::ostream& out) {
  if (widths.empty()) widths = evaluation::default_sweep_widths();
  if (strides.empty()) strides = {cfg.stride_percent};
  const auto data = load_dataset(cfg);
  evaluation::SweepConfig sc;
  sc.train = cfg.train;
  sc.train_fraction = cfg.train_fraction;
  sc.split_seed = cfg.split_seed;
  sc.rule = cfg.rule;
  sc.threads = cfg.train.threads;
  const auto result = evaluation::sweep(data, widths, strides, sc);
  write_file_atomic(cfg.output_dir / "sweep.csv", render([&](std::ostream& s) { report::write_sweep_csv(s, result); }));
  write_file_atomic(cfg.output_dir / "sweep.svg", report::sweep_svg(result));
  for (const auto& r : result.rows) {
    out << "w=" << r.width << " stride=" << r.stride_percent << "%  ";
    print_recalls(out, r.recall);
  }
  return 0;
}

online::Backend load_backend(const std::string& backend, const std::filesystem::path& model_path,
                             const std::filesystem::path& thresholds_path, windowing::WindowParams& params) {
  if (backend == "model") {
    auto ck = model::checkpoint_from_json(nlohmann::json::parse(read_file(model_path)));
    params = ck.window;
    return std::move(ck.params);
  }
  const auto indicator = baseline::indicator_from_string(backend);
  const auto tf = baseline::threshold_file_from_json(nlohmann::json::parse(read_file(thresholds_path)));
  if (tf.indicator != indicator) {
    throw Error(thresholds_path.string() + " holds " + std::string(baseline::to_string(tf.indicator)) +
                " thresholds, not " + backend);
  }
  params = tf.window;
  return online::BaselineBackend{tf.thresholds, indicator};
}

int cmd_replay(const ProjectConfig& cfg, const std::string& file, const std::string& backend,
               const std::filesystem::path& model_path, const std::filesystem::path& thresholds_path,
               std::ostream& out) {
  windowing::WindowParams params;
  auto be = load_backend(backend, model_path, thresholds_path, params);
  const auto seq = sensordata::load_sisfall_file(file, cfg.column_map);
  online::OnlineDetector detector(params, std::move(be));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (auto d = detector.push_sample(seq.accel(i))) out << online::to_json(*d).dump() << '\n';
  }
  return 0;
}

int cmd_timeline(const ProjectConfig& cfg, const std::string& id, const std::filesystem::path& model_path,
                 const std::filesystem::path& thresholds_path, std::ostream& out) {
  const auto data = load_dataset(cfg);
  const auto it = std::find_if(data.begin(), data.end(), [&](const auto& r) { return r.sequence().id.str() == id; });
  if (it == data.end()) throw Error("unknown sequence " + id);
  const auto ck = model::checkpoint_from_json(nlohmann::json::parse(read_file(model_path)));
  const auto tf = baseline::threshold_file_from_json(nlohmann::json::parse(read_file(thresholds_path)));
  if (!(ck.window == tf.window)) throw Error("model and thresholds were fitted with different window parameters");
  const auto windows = windowing::segment(*it, ck.window, cfg.rule);
  const auto tl = evaluation::timeline(*it, windows, evaluation::predict_baseline(tf.thresholds, tf.indicator, windows),
                                       evaluation::predict_model(ck.params, windows));
  write_file_atomic(cfg.output_dir / ("timeline_" + id + ".csv"),
                    render([&](std::ostream& s) { report::write_timeline_csv(s, tl); }));
  write_file_atomic(cfg.output_dir / ("timeline_" + id + ".svg"), report::timeline_svg(tl));
  out << tl.rows.size() << " windows, " << tl.disagreements() << " with a prediction differing from the truth\n";
  return 0;
}

int cmd_serve(const ProjectConfig& cfg, const std::string& host, int port, std::filesystem::path model_path,
              std::filesystem::path thresholds_path, std::ostream& out) {
  std::optional<model::Checkpoint> ck;
  std::optional<baseline::ThresholdFile> tf;
  if (model_path.empty() && std::filesystem::exists(cfg.output_dir / "model.json")) {
    model_path = cfg.output_dir / "model.json";
  }
  if (thresholds_path.empty() && std::filesystem::exists(cfg.output_dir / "thresholds.json")) {
    thresholds_path = cfg.output_dir / "thresholds.json";
  }
  if (!model_path.empty()) ck = model::checkpoint_from_json(nlohmann::json::parse(read_file(model_path)));
  if (!thresholds_path.empty()) {
    tf = baseline::threshold_file_from_json(nlohmann::json::parse(read_file(thresholds_path)));
  }
  server::Api api(cfg, std::move(ck), std::move(tf));
  httplib::Server srv;
  server::mount(srv, api);
  if (!srv.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  out << "listening on http://" << host << ":" << port << std::endl;
  srv.listen_after_bind();
  return 0;
}

int cmd_synth(const ProjectConfig& cfg, const synth::DatasetSpec& spec, std::ostream& out) {
  synth::write_dataset(spec, cfg.dataset_root, cfg.annotations_root);
  out << spec.subjects * spec.activities.size() * spec.trials << " recording(s) -> " << cfg.dataset_root.string()
      << ", annotations -> " << cfg.annotations_root.string() << '\n';
  return 0;
}

int cmd_export_windows(const ProjectConfig& cfg, std::ostream& out) {
  const auto data = load_dataset(cfg);
  std::vector<windowing::Window> all;
  for (const auto& rec : data) {
    auto w = windowing::segment(rec, cfg.window(), cfg.rule);
    all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  const auto path = cfg.output_dir / "windows.csv";
  write_file_atomic(path, render([&](std::ostream& s) { windowing::write_window_index(s, all); }));
  const auto c = windowing::class_counts(all);
  out << all.size() << " windows (BKG " << c.bkg << ", ALERT " << c.alert << ", FALL " << c.fall << ") -> "
      << path.string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fall detection from wearable accelerometer recordings"};
  app.name("falldet");
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "TOML project file")->check(CLI::ExistingFile);
  app.add_option("--data", o.data, "Dataset root directory");
  app.add_option("--annotations", o.annotations, "Annotation directory");
  app.add_option("--out", o.out, "Output directory for artifacts");
  app.add_option("-w,--width", o.width, "Window width in samples");
  app.add_option("--stride", o.stride, "Window stride in percent of the width");
  app.add_option("--epochs", o.epochs);
  app.add_option("--batch-size", o.batch_size);
  app.add_option("--lr", o.lr, "Learning rate");
  app.add_option("--dropout", o.dropout, "Dropout rate");
  app.add_option("--optimizer", o.optimizer, "adam or sgd");
  app.add_option("--seed", o.seed, "Training seed");
  app.add_option("--split-seed", o.split_seed, "Subject split seed");
  app.add_option("--train-fraction", o.train_fraction, "Fraction of subjects used for training");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* ingest_cmd = app.add_subcommand("ingest", "Scan a dataset and write manifest.json");
  std::optional<std::string> ingest_root;
  ingest_cmd->add_option("root", ingest_root, "Dataset root (defaults to the configured one)");

  auto* train_cmd = app.add_subcommand("train", "Train the LSTM and evaluate it on held-out subjects");
  std::string loss;  // empty keeps the configured loss
  train_cmd->add_option("--loss", loss, "weighted or unweighted")->check(CLI::IsMember({"weighted", "unweighted"}));

  auto* baseline_cmd = app.add_subcommand("baseline", "Calibrate and evaluate threshold baselines");
  std::string indicator = "c9";
  baseline_cmd->add_option("--indicator", indicator, "c8 or c9")->check(CLI::IsMember({"c8", "c9"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate over a grid of window widths and strides");
  std::vector<std::size_t> widths;
  std::vector<int> strides;
  sweep_cmd->add_option("--widths", widths, "Comma-separated widths")->delimiter(',');
  sweep_cmd->add_option("--strides", strides, "Comma-separated stride percentages")->delimiter(',');

  std::string model_path, thresholds_path;
  auto* replay_cmd = app.add_subcommand("replay", "Stream a recording through the online detector (NDJSON)");
  std::string replay_file, backend = "c9";
  replay_cmd->add_option("file", replay_file, "SisFall-format recording")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--backend", backend, "model, c9 or c8")->check(CLI::IsMember({"model", "c9", "c8"}));
  replay_cmd->add_option("--model", model_path, "Checkpoint (default <out>/model.json)");
  replay_cmd->add_option("--thresholds", thresholds_path, "Thresholds (default <out>/thresholds.json)");

  auto* timeline_cmd = app.add_subcommand("timeline", "Per-window truth, baseline and model labels for one recording");
  std::string timeline_id;
  timeline_cmd->add_option("id", timeline_id, "Sequence id, e.g. F01_SA01_R01")->required();
  timeline_cmd->add_option("--model", model_path, "Checkpoint (default <out>/model.json)");
  timeline_cmd->add_option("--thresholds", thresholds_path, "Thresholds (default <out>/thresholds.json)");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP API for the annotation tool");
  std::string host = "127.0.0.1";
  int port = 8173;
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--model", model_path, "Checkpoint for /api/predictions");
  serve_cmd->add_option("--thresholds", thresholds_path, "Thresholds for /api/predictions");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic annotated dataset");
  synth::DatasetSpec spec;
  synth_cmd->add_option("--subjects", spec.subjects);
  synth_cmd->add_option("--trials", spec.trials);
  synth_cmd->add_option("--activities", spec.activities, "Comma-separated activity codes")->delimiter(',');
  synth_cmd->add_option("--synth-seed", spec.seed);

  auto* export_seq_cmd = app.add_subcommand("export-sequence", "Print a recording as canonical JSON");
  std::string export_file;
  export_seq_cmd->add_option("file", export_file)->required()->check(CLI::ExistingFile);

  auto* export_win_cmd = app.add_subcommand("export-windows", "Write the labeled window index to windows.csv");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const ProjectConfig cfg = resolve_config(o);
    auto default_path = [&](const std::string& given, const char* name) {
      return given.empty() ? cfg.output_dir / name : std::filesystem::path(given);
    };
    if (ingest_cmd->parsed()) return cmd_ingest(cfg, ingest_root, out, err);
    if (train_cmd->parsed()) return cmd_train(cfg, loss, out, err);
    if (baseline_cmd->parsed()) return cmd_baseline(cfg, indicator, out);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, widths, strides, out);
    if (replay_cmd->parsed()) {
      return cmd_replay(cfg, replay_file, backend, default_path(model_path, "model.json"),
                        default_path(thresholds_path, "thresholds.json"), out);
    }
    if (timeline_cmd->parsed()) {
      return cmd_timeline(cfg, timeline_id, default_path(model_path, "model.json"),
                          default_path(thresholds_path, "thresholds.json"), out);
    }
    if (serve_cmd->parsed()) return cmd_serve(cfg, host, port, model_path, thresholds_path, out);
    if (synth_cmd->parsed()) return cmd_synth(cfg, spec, out);
    if (export_seq_cmd->parsed()) {
      out << sensordata::to_json(sensordata::load_sisfall_file(export_file, cfg.column_map)).dump() << '\n';
      return 0;
    }
    if (export_win_cmd->parsed()) return cmd_export_windows(cfg, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace falldet::cli
