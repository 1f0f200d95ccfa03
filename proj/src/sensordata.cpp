#include "falldet/sensordata.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace falldet::sensordata {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string basename_of(std::string_view filename) {
  return std::filesystem::path(std::string(filename)).filename().string();
}

const std::regex& filename_pattern() {
  static const std::regex re(R"(^([A-Z][0-9]{2})_([A-Z]{2}[0-9]{2})_R([0-9]{2,})\.txt$)");
  return re;
}

Vec3i take_triple(const std::vector<std::int32_t>& fields, std::size_t offset) {
  return {fields[offset], fields[offset + 1], fields[offset + 2]};
}

}  // namespace

SensorSpec::SensorSpec(int bits, double range_g) : bits_(bits), range_g_(range_g) {
  if (bits < 1 || bits > 31) throw Error("sensor resolution must be in [1, 31] bits");
  if (!(range_g > 0.0) || !std::isfinite(range_g)) throw Error("sensor range must be positive");
  scale_ = (2.0 * range_g) / std::ldexp(1.0, bits);
}

SensorSpec adxl345_spec() { return SensorSpec(13, 16.0); }

double convert_raw_to_g(std::int64_t raw, const SensorSpec& spec) {
  return static_cast<double>(raw) * spec.scale_g_per_lsb();
}

void ColumnMap::validate() const {
  std::vector<bool> used(field_count, false);
  auto claim = [&](std::size_t offset, const char* what) {
    if (offset + 3 > field_count) {
      throw Error(std::string("column map: ") + what + " triple exceeds field count");
    }
    for (std::size_t i = offset; i < offset + 3; ++i) {
      if (used[i]) throw Error(std::string("column map: ") + what + " overlaps another triple");
      used[i] = true;
    }
  };
  claim(accel, "accel");
  if (gyro) claim(*gyro, "gyro");
  if (accel2) claim(*accel2, "accel2");
  if (accel_bits < 2 || accel_bits > 31) throw Error("column map: accel_bits out of range");
}

std::string SequenceId::str() const {
  char trial_buf[16];
  std::snprintf(trial_buf, sizeof trial_buf, "R%02d", trial);
  return activity + "_" + subject + "_" + trial_buf;
}

Vec3 Sequence::accel(std::size_t i) const {
  const auto& a = samples.at(i).accel;
  return {static_cast<double>(a[0]), static_cast<double>(a[1]), static_cast<double>(a[2])};
}

ParseError::ParseError(std::string file, std::size_t line, const std::string& message)
    : Error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      file_(std::move(file)),
      line_(line) {}

SequenceId parse_sequence_id(std::string_view filename) {
  const std::string base = basename_of(filename);
  std::smatch m;
  if (!std::regex_match(base, m, filename_pattern())) {
    throw ParseError(base, 0, "filename does not match <ACT>_<SUBJ>_R<NN>.txt");
  }
  return SequenceId{m[1].str(), m[2].str(), std::stoi(m[3].str())};
}

bool is_recording_filename(std::string_view filename) {
  return std::regex_match(basename_of(filename), filename_pattern());
}

Sequence parse_sisfall_file(std::string_view text, std::string_view filename,
                            const ColumnMap& columns) {
  columns.validate();
  Sequence seq;
  seq.id = parse_sequence_id(filename);
  const std::string file = basename_of(filename);
  const std::int64_t lo = -(std::int64_t{1} << (columns.accel_bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (columns.accel_bits - 1)) - 1;

  std::vector<std::int32_t> fields;
  fields.reserve(columns.field_count);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    auto line = trim(raw);
    if (line.empty()) continue;
    if (line.back() != ';') throw ParseError(file, line_no, "data line must end with ';'");
    line.remove_suffix(1);

    fields.clear();
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto token = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - start));
      std::int32_t value = 0;
      const auto* end = token.data() + token.size();
      auto [ptr, ec] = std::from_chars(token.data(), end, value);
      if (token.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(file, line_no, "non-integer token '" + std::string(token) + "'");
      }
      fields.push_back(value);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != columns.field_count) {
      throw ParseError(file, line_no,
                       "expected " + std::to_string(columns.field_count) + " fields, got " +
                           std::to_string(fields.size()));
    }

    SensorSample sample;
    sample.accel = take_triple(fields, columns.accel);
    for (auto v : sample.accel) {
      if (v < lo || v > hi) {
        throw ParseError(file, line_no,
                         "accelerometer value " + std::to_string(v) + " outside " +
                             std::to_string(columns.accel_bits) + "-bit range");
      }
    }
    if (columns.gyro) sample.gyro = take_triple(fields, *columns.gyro);
    if (columns.accel2) sample.accel2 = take_triple(fields, *columns.accel2);
    seq.samples.push_back(sample);
  }
  if (seq.samples.empty()) throw ParseError(file, 0, "empty sequence");
  return seq;
}

Sequence load_sisfall_file(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sisfall_file(buf.str(), path.filename().string(), columns);
}

std::string serialize_sisfall(const Sequence& seq, const ColumnMap& columns) {
  columns.validate();
  std::string out;
  std::vector<std::int32_t> fields(columns.field_count, 0);
  for (const auto& s : seq.samples) {
    auto put = [&](std::size_t offset, const Vec3i& v) {
      for (std::size_t k = 0; k < 3; ++k) fields[offset + k] = v[k];
    };
    put(columns.accel, s.accel);
    if (columns.gyro && s.gyro) put(*columns.gyro, *s.gyro);
    if (columns.accel2 && s.accel2) put(*columns.accel2, *s.accel2);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += std::to_string(fields[i]);
    }
    out += ";\n";
  }
  return out;
}

nlohmann::json to_json(const Sequence& seq) {
  nlohmann::json accel = nlohmann::json::array();
  for (const auto& s : seq.samples) accel.push_back({s.accel[0], s.accel[1], s.accel[2]});
  return {{"subject", seq.id.subject},
          {"activity", seq.id.activity},
          {"trial", seq.id.trial},
          {"rate_hz", static_cast<int>(seq.sample_rate)},
          {"accel", std::move(accel)}};
}

}  // namespace falldet::sensordata
