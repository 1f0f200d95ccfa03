#pragma once

// JSON API backing the annotation tool:
//   GET  /api/sequences                  manifest list
//   GET  /api/sequences/{id}             canonical sequence JSON
//   GET  /api/annotations/{id}           interval document (empty when none saved)
//   PUT  /api/annotations/{id}           validate and persist; 422 with per-interval issues
//   GET  /api/predictions/{id}?backend=  per-window predictions (model, c9 or c8)

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "falldet/baseline.hpp"
#include "falldet/cli.hpp"
#include "falldet/model.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace falldet::server {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Api {
 public:
  Api(cli::ProjectConfig cfg, std::optional<model::Checkpoint> model,
      std::optional<baseline::ThresholdFile> thresholds);

  ApiResponse list_sequences();
  ApiResponse get_sequence(const std::string& id);
  ApiResponse get_annotations(const std::string& id);
  ApiResponse put_annotations(const std::string& id, std::string_view body);
  ApiResponse predictions(const std::string& id, std::string_view backend);

 private:
  std::optional<cli::ManifestEntry> lookup(const std::string& id);
  void refresh();
  std::mutex& file_lock(const std::string& id);

  cli::ProjectConfig cfg_;
  std::optional<model::Checkpoint> model_;
  std::optional<baseline::ThresholdFile> thresholds_;

  std::shared_mutex manifest_mutex_;
  cli::Manifest manifest_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

/// Registers the routes on `srv`. Uncaught exceptions become 500 responses.
void mount(httplib::Server& srv, Api& api);

}  // namespace falldet::server
