#include "falldet/server.hpp"

#include "falldet/annotation.hpp"
#include "falldet/evaluation.hpp"
#include "falldet/windowing.hpp"
#include "httplib.h"

namespace falldet::server {

namespace {

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

}  // namespace

Api::Api(cli::ProjectConfig cfg, std::optional<model::Checkpoint> model,
         std::optional<baseline::ThresholdFile> thresholds)
    : cfg_(std::move(cfg)), model_(std::move(model)), thresholds_(std::move(thresholds)) {
  refresh();
}

void Api::refresh() {
  auto m = cli::ingest(cfg_.dataset_root, cfg_.column_map);
  std::unique_lock lock(manifest_mutex_);
  manifest_ = std::move(m);
}

std::optional<cli::ManifestEntry> Api::lookup(const std::string& id) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    {
      std::shared_lock lock(manifest_mutex_);
      for (const auto& e : manifest_.entries) {
        if (e.id.str() == id) return e;
      }
    }
    if (attempt == 0) refresh();  // the recording may have been added since the last scan
  }
  return std::nullopt;
}

std::mutex& Api::file_lock(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

ApiResponse Api::list_sequences() {
  refresh();
  std::shared_lock lock(manifest_mutex_);
  return {200, cli::to_json(manifest_)};
}

ApiResponse Api::get_sequence(const std::string& id) {
  auto e = lookup(id);
  if (!e) return error(404, "unknown sequence " + id);
  return {200, sensordata::to_json(sensordata::load_sisfall_file(cfg_.dataset_root / e->path, cfg_.column_map))};
}

ApiResponse Api::get_annotations(const std::string& id) {
  auto e = lookup(id);
  if (!e) return error(404, "unknown sequence " + id);
  const auto path = annotation::annotation_path(cfg_.annotations_root, e->id);
  std::lock_guard lock(file_lock(id));
  if (!std::filesystem::exists(path)) return {200, annotation::annotations_to_json({})};
  try {
    return {200, annotation::annotations_to_json(annotation::load_annotations(cli::read_file(path), e->samples))};
  } catch (const annotation::AnnotationError& err) {
    return {422, err.to_json()};
  }
}

ApiResponse Api::put_annotations(const std::string& id, std::string_view body) {
  auto e = lookup(id);
  if (!e) return error(404, "unknown sequence " + id);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& err) {
    return error(400, std::string("malformed JSON: ") + err.what());
  }
  std::vector<annotation::IntervalAnnotation> intervals;
  try {
    intervals = annotation::annotations_from_json(doc, e->samples);
  } catch (const annotation::AnnotationError& err) {
    return {422, err.to_json()};
  }
  const auto saved = annotation::annotations_to_json(intervals);
  std::lock_guard lock(file_lock(id));
  cli::write_file_atomic(annotation::annotation_path(cfg_.annotations_root, e->id), saved.dump(2) + "\n");
  return {200, saved};
}

ApiResponse Api::predictions(const std::string& id, std::string_view backend) {
  auto e = lookup(id);
  if (!e) return error(404, "unknown sequence " + id);

  windowing::WindowParams params;
  std::optional<baseline::Indicator> indicator;
  if (backend == "model") {
    if (!model_) return error(409, "no model checkpoint loaded");
    params = model_->window;
  } else if (backend == "c9" || backend == "c8") {
    indicator = baseline::indicator_from_string(backend);
    if (!thresholds_) return error(409, "no thresholds loaded");
    if (thresholds_->indicator != *indicator) {
      return error(409, "loaded thresholds are for " + std::string(baseline::to_string(thresholds_->indicator)));
    }
    params = thresholds_->window;
  } else {
    return error(400, "backend must be model, c9 or c8");
  }

  auto seq = sensordata::load_sisfall_file(cfg_.dataset_root / e->path, cfg_.column_map);
  std::vector<annotation::IntervalAnnotation> intervals;
  bool annotated = false;
  {
    const auto path = annotation::annotation_path(cfg_.annotations_root, e->id);
    std::lock_guard lock(file_lock(id));
    if (std::filesystem::exists(path)) {
      try {
        intervals = annotation::load_annotations(cli::read_file(path), seq.size());
        annotated = true;
      } catch (const annotation::AnnotationError&) {
        // served without truth labels
      }
    }
  }
  const annotation::AnnotatedSequence rec(std::move(seq), std::move(intervals));
  const auto windows = windowing::segment(rec, params, cfg_.rule);
  const auto predicted = indicator ? evaluation::predict_baseline(thresholds_->thresholds, *indicator, windows)
                                   : evaluation::predict_model(model_->params, windows);

  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    nlohmann::json row = {{"start", windows[i].start},
                          {"end", windows[i].start + params.width},
                          {"predicted", std::string(to_string(predicted[i]))}};
    if (annotated) row["truth"] = std::string(to_string(windows[i].label));
    rows.push_back(std::move(row));
  }
  return {200,
          {{"id", id},
           {"backend", std::string(backend)},
           {"w", params.width},
           {"stride", params.stride},
           {"annotated", annotated},
           {"windows", rows}}};
}

void mount(httplib::Server& srv, Api& api) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, PUT, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      reply(res, error(500, e.what()));
    } catch (...) {
      reply(res, error(500, "unknown error"));
    }
  });

  const std::string id = R"(([A-Za-z0-9_]+))";
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Get("/api/sequences", [&api, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, api.list_sequences());
  });
  srv.Get("/api/sequences/" + id, [&api, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.get_sequence(req.matches[1]));
  });
  srv.Get("/api/annotations/" + id, [&api, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.get_annotations(req.matches[1]));
  });
  srv.Put("/api/annotations/" + id, [&api, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.put_annotations(req.matches[1], req.body));
  });
  srv.Get("/api/predictions/" + id, [&api, reply](const httplib::Request& req, httplib::Response& res) {
    const std::string backend = req.has_param("backend") ? req.get_param_value("backend") : "model";
    reply(res, api.predictions(req.matches[1], backend));
  });
}

}  // namespace falldet::server
