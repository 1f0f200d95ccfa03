#include <fstream>
#include <set>
#include <sstream>

#include "falldet/cli.hpp"
#include "toml.hpp"

namespace falldet::cli {

namespace {

std::string qualified(std::string_view section, std::string_view key) {
  return section.empty() ? std::string(key) : std::string(section) + "." + std::string(key);
}

void reject_unknown(const toml::table& t, std::string_view section, const std::set<std::string>& known) {
  for (const auto& [k, _] : t) {
    if (!known.count(std::string(k.str()))) throw Error("config: unknown key '" + qualified(section, k.str()) + "'");
  }
}

std::optional<std::int64_t> get_int(const toml::table& t, std::string_view section, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_integer()) throw Error("config: '" + qualified(section, key) + "' must be an integer");
  return n->value<std::int64_t>();
}

std::optional<std::size_t> get_count(const toml::table& t, std::string_view section, std::string_view key) {
  auto v = get_int(t, section, key);
  if (!v) return std::nullopt;
  if (*v < 0) throw Error("config: '" + qualified(section, key) + "' must be non-negative");
  return static_cast<std::size_t>(*v);
}

std::optional<double> get_real(const toml::table& t, std::string_view section, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_number()) throw Error("config: '" + qualified(section, key) + "' must be a number");
  return n->value<double>();
}

std::optional<std::string> get_string(const toml::table& t, std::string_view section, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_string()) throw Error("config: '" + qualified(section, key) + "' must be a string");
  return n->value<std::string>();
}

const toml::table* get_table(const toml::table& t, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw Error("config: '" + std::string(key) + "' must be a table");
  return n->as_table();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

// A negative offset marks an absent triple.
std::optional<std::size_t> optional_offset(std::int64_t v) {
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

}  // namespace

void ProjectConfig::validate() const {
  column_map.validate();
  window().validate();
  if (rule.fall_percent < 1 || rule.fall_percent > 100) throw Error("fall_percent must be in [1, 100]");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train_fraction must be in (0, 1)");
  train.validate();
}

ProjectConfig config_from_toml(std::string_view text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw Error(msg.str());
  }
  reject_unknown(root, "",
                 {"dataset_root", "annotations_root", "output_dir", "split_seed", "train_fraction", "columns", "window",
                  "train"});

  ProjectConfig cfg;
  cfg.dataset_root = resolve(base_dir, get_string(root, "", "dataset_root").value_or(cfg.dataset_root.string()));
  cfg.annotations_root =
      resolve(base_dir, get_string(root, "", "annotations_root").value_or(cfg.annotations_root.string()));
  cfg.output_dir = resolve(base_dir, get_string(root, "", "output_dir").value_or(cfg.output_dir.string()));
  if (auto v = get_int(root, "", "split_seed")) cfg.split_seed = static_cast<std::uint64_t>(*v);
  if (auto v = get_real(root, "", "train_fraction")) cfg.train_fraction = *v;

  if (const auto* t = get_table(root, "columns")) {
    reject_unknown(*t, "columns", {"field_count", "accel", "gyro", "accel2", "accel_bits"});
    if (auto v = get_count(*t, "columns", "field_count")) cfg.column_map.field_count = *v;
    if (auto v = get_count(*t, "columns", "accel")) cfg.column_map.accel = *v;
    if (auto v = get_int(*t, "columns", "gyro")) cfg.column_map.gyro = optional_offset(*v);
    if (auto v = get_int(*t, "columns", "accel2")) cfg.column_map.accel2 = optional_offset(*v);
    if (auto v = get_int(*t, "columns", "accel_bits")) cfg.column_map.accel_bits = static_cast<int>(*v);
  }
  if (const auto* t = get_table(root, "window")) {
    reject_unknown(*t, "window", {"w", "stride_percent", "fall_percent", "fall_rounding"});
    if (auto v = get_count(*t, "window", "w")) cfg.width = *v;
    if (auto v = get_int(*t, "window", "stride_percent")) cfg.stride_percent = static_cast<int>(*v);
    if (auto v = get_int(*t, "window", "fall_percent")) cfg.rule.fall_percent = static_cast<int>(*v);
    if (auto v = get_string(*t, "window", "fall_rounding")) {
      if (*v == "ceil") {
        cfg.rule.rounding = windowing::FallRounding::Ceil;
      } else if (*v == "floor") {
        cfg.rule.rounding = windowing::FallRounding::Floor;
      } else {
        throw Error("config: window.fall_rounding must be \"ceil\" or \"floor\"");
      }
    }
  }
  if (const auto* t = get_table(root, "train")) {
    reject_unknown(*t, "train",
                   {"epochs", "batch_size", "learning_rate", "dropout_rate", "seed", "optimizer", "loss", "threads"});
    if (auto v = get_count(*t, "train", "epochs")) cfg.train.epochs = *v;
    if (auto v = get_count(*t, "train", "batch_size")) cfg.train.batch_size = *v;
    if (auto v = get_real(*t, "train", "learning_rate")) cfg.train.learning_rate = *v;
    if (auto v = get_real(*t, "train", "dropout_rate")) cfg.train.dropout_rate = *v;
    if (auto v = get_int(*t, "train", "seed")) cfg.train.seed = static_cast<std::uint64_t>(*v);
    if (auto v = get_string(*t, "train", "optimizer")) cfg.train.optimizer = model::optimizer_from_string(*v);
    if (auto v = get_string(*t, "train", "loss")) {
      if (*v != "weighted" && *v != "unweighted") throw Error("config: train.loss must be weighted or unweighted");
      cfg.train.weighted_loss = *v == "weighted";
    }
    if (auto v = get_count(*t, "train", "threads")) cfg.train.threads = static_cast<unsigned>(*v);
  }
  cfg.train.width = cfg.width;
  cfg.validate();
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path) {
  return config_from_toml(read_file(path), path.parent_path());
}

nlohmann::json to_json(const ProjectConfig& cfg) {
  nlohmann::json train = model::to_json(cfg.train);
  return {{"w", cfg.width},
          {"stride_percent", cfg.stride_percent},
          {"stride", cfg.window().stride},
          {"fall_percent", cfg.rule.fall_percent},
          {"fall_rounding", cfg.rule.rounding == windowing::FallRounding::Ceil ? "ceil" : "floor"},
          {"train_fraction", cfg.train_fraction},
          {"split_seed", cfg.split_seed},
          {"train", train}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace falldet::cli
