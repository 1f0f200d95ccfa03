#include <algorithm>
#include <map>

#include "falldet/cli.hpp"

namespace falldet::cli {

namespace {

struct Scan {
  Manifest manifest;
  std::vector<sensordata::Sequence> sequences;  // parallel to manifest.entries
};

std::string strip_prefix(const sensordata::ParseError& e) {
  std::string prefix = e.file() + (e.line() > 0 ? ":" + std::to_string(e.line()) : std::string()) + ": ";
  std::string what = e.what();
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

Scan scan(const std::filesystem::path& root, const sensordata::ColumnMap& columns) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) throw Error("cannot read dataset root " + root.string());
  std::vector<std::filesystem::path> files;
  std::filesystem::recursive_directory_iterator it(root, ec);
  if (ec) throw Error("cannot read dataset root " + root.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (entry.is_regular_file() && sensordata::is_recording_filename(entry.path().filename().string())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  Scan out;
  std::map<std::string, std::size_t> seen;
  std::vector<std::pair<ManifestEntry, sensordata::Sequence>> found;
  for (const auto& path : files) {
    const auto rel = path.lexically_relative(root);
    try {
      auto seq = sensordata::load_sisfall_file(path, columns);
      const std::string id = seq.id.str();
      if (auto dup = seen.find(id); dup != seen.end()) {
        out.manifest.diagnostics.push_back(
            {rel, 0, "duplicate recording " + id + " (first seen at " + found[dup->second].first.path.generic_string() + ")"});
        continue;
      }
      seen.emplace(id, found.size());
      ManifestEntry e{seq.id, rel, seq.size()};
      found.emplace_back(std::move(e), std::move(seq));
    } catch (const sensordata::ParseError& e) {
      out.manifest.diagnostics.push_back({rel, e.line(), strip_prefix(e)});
    } catch (const Error& e) {
      out.manifest.diagnostics.push_back({rel, 0, e.what()});
    }
  }
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first.id.str() < b.first.id.str(); });
  for (auto& [e, s] : found) {
    out.manifest.entries.push_back(std::move(e));
    out.sequences.push_back(std::move(s));
  }
  return out;
}

}  // namespace

Manifest ingest(const std::filesystem::path& root, const sensordata::ColumnMap& columns) {
  return scan(root, columns).manifest;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& e : m.entries) {
    recs.push_back({{"id", e.id.str()},
                    {"activity", e.id.activity},
                    {"subject", e.id.subject},
                    {"trial", e.id.trial},
                    {"path", e.path.generic_string()},
                    {"samples", e.samples},
                    {"seconds", static_cast<double>(e.samples) / kSampleRateHz}});
  }
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : m.diagnostics) {
    diags.push_back({{"file", d.file.generic_string()}, {"line", d.line}, {"message", d.message}});
  }
  return {{"recordings", recs}, {"diagnostics", diags}};
}

evaluation::Dataset load_dataset(const ProjectConfig& cfg) {
  auto s = scan(cfg.dataset_root, cfg.column_map);
  if (!s.manifest.diagnostics.empty()) {
    const auto& d = s.manifest.diagnostics.front();
    throw Error(std::to_string(s.manifest.diagnostics.size()) + " unreadable recording(s); first: " +
                d.file.generic_string() + (d.line ? ":" + std::to_string(d.line) : std::string()) + ": " + d.message);
  }
  if (s.sequences.empty()) throw Error("no recordings under " + cfg.dataset_root.string());
  evaluation::Dataset data;
  data.reserve(s.sequences.size());
  for (auto& seq : s.sequences) {
    const auto ann = annotation::annotation_path(cfg.annotations_root, seq.id);
    if (!std::filesystem::exists(ann)) throw Error("missing annotations for " + seq.id.str() + " (" + ann.string() + ")");
    std::vector<annotation::IntervalAnnotation> intervals;
    try {
      intervals = annotation::load_annotations(read_file(ann), seq.size());
    } catch (const Error& e) {
      throw Error(ann.string() + ": " + e.what());
    }
    data.emplace_back(std::move(seq), std::move(intervals));
  }
  return data;
}

}  // namespace falldet::cli
