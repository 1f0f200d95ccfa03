#pragma once

// SisFall recording files: parsing, identity, canonical JSON export and
// raw-count to g conversion.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "falldet/common.hpp"
#include "json.hpp"

namespace falldet::sensordata {

using Vec3i = std::array<std::int32_t, 3>;

struct SensorSample {
  Vec3i accel{};
  std::optional<Vec3i> gyro;
  std::optional<Vec3i> accel2;

  bool operator==(const SensorSample&) const = default;
};

/// Full-scale description of an ADC channel.
class SensorSpec {
 public:
  /// Throws Error unless 1 <= bits <= 31 and range_g > 0.
  SensorSpec(int bits, double range_g);

  int bits() const { return bits_; }
  double range_g() const { return range_g_; }
  /// (2 * range_g) / 2^bits
  double scale_g_per_lsb() const { return scale_; }

 private:
  int bits_;
  double range_g_;
  double scale_;
};

/// ADXL345 as mounted in the SisFall device: 13 bits, +-16 g.
SensorSpec adxl345_spec();

double convert_raw_to_g(std::int64_t raw, const SensorSpec& spec);

/// Column layout of one data line. Each triple is given by the offset of its
/// first column; an unset offset means the triple is absent from the file.
struct ColumnMap {
  std::size_t field_count = 9;
  std::size_t accel = 0;
  std::optional<std::size_t> gyro = 3;
  std::optional<std::size_t> accel2 = 6;
  /// Resolution of the primary accelerometer; values outside
  /// [-2^(bits-1), 2^(bits-1)-1] are rejected.
  int accel_bits = 13;

  /// Throws Error if a triple does not fit in field_count or triples overlap.
  void validate() const;
};

struct SequenceId {
  std::string activity;  // e.g. "F05"
  std::string subject;   // e.g. "SA03"
  int trial = 0;         // "R02" -> 2

  /// Recording basename without extension, e.g. "F05_SA03_R02".
  std::string str() const;
  bool operator==(const SequenceId&) const = default;
};

struct Sequence {
  SequenceId id;
  double sample_rate = kSampleRateHz;
  std::vector<SensorSample> samples;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
  /// Primary accelerometer of sample i as doubles (raw counts).
  Vec3 accel(std::size_t i) const;

  bool operator==(const Sequence&) const = default;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& message);
  const std::string& file() const { return file_; }
  /// 1-based; 0 when the error is not tied to a line.
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Parses `<ACT>_<SUBJ>_R<NN>.txt`; directories in `filename` are ignored.
SequenceId parse_sequence_id(std::string_view filename);

/// True if the basename follows the recording naming convention.
bool is_recording_filename(std::string_view filename);

Sequence parse_sisfall_file(std::string_view text, std::string_view filename,
                            const ColumnMap& columns = {});

Sequence load_sisfall_file(const std::filesystem::path& path, const ColumnMap& columns = {});

/// Inverse of parse_sisfall_file for the given column layout.
std::string serialize_sisfall(const Sequence& seq, const ColumnMap& columns = {});

/// `{ "subject", "activity", "trial", "rate_hz", "accel": [[x,y,z], ...] }`
nlohmann::json to_json(const Sequence& seq);

}  // namespace falldet::sensordata
