#pragma once

// Command-line front end: project configuration, dataset ingestion and the
// `falldet` subcommands. `run` is the whole program minus process setup, so
// tests drive it in-process.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "falldet/evaluation.hpp"
#include "falldet/model.hpp"
#include "falldet/sensordata.hpp"
#include "falldet/windowing.hpp"
#include "json.hpp"

namespace falldet::cli {

struct ProjectConfig {
  std::filesystem::path dataset_root = "data";
  std::filesystem::path annotations_root = "annotations";
  std::filesystem::path output_dir = "out";
  sensordata::ColumnMap column_map;
  std::size_t width = 256;
  int stride_percent = 50;
  windowing::LabelRule rule;
  model::TrainConfig train;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 1;

  windowing::WindowParams window() const { return windowing::WindowParams::from_percent(width, stride_percent); }
  /// Throws Error on out-of-range values (paths are checked when used).
  void validate() const;
};

/// Parses a TOML project file. Relative paths resolve against `base_dir`.
/// Unknown keys are rejected.
ProjectConfig config_from_toml(std::string_view text, const std::filesystem::path& base_dir = {});
ProjectConfig load_config(const std::filesystem::path& path);
/// Seeds and hyperparameters as recorded in artifacts (no paths, no thread count).
nlohmann::json to_json(const ProjectConfig& cfg);

struct ManifestEntry {
  sensordata::SequenceId id;
  std::filesystem::path path;  // relative to the dataset root
  std::size_t samples = 0;
};

struct Diagnostic {
  std::filesystem::path file;
  std::size_t line = 0;  // 0 when not tied to a line
  std::string message;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  // sorted by sequence id
  std::vector<Diagnostic> diagnostics;
};

/// Scans `root` recursively for `<ACT>_<SUBJ>_R<NN>.txt` files and parses
/// each one, collecting per-file errors. Throws Error if `root` is not a
/// readable directory.
Manifest ingest(const std::filesystem::path& root, const sensordata::ColumnMap& columns = {});
nlohmann::json to_json(const Manifest& m);

/// Loads every recording with its annotation file. Throws Error on any parse
/// diagnostic or a missing annotation file.
evaluation::Dataset load_dataset(const ProjectConfig& cfg);

/// Writes `content` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Runs the program with `argv[0]` ignored; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace falldet::cli
