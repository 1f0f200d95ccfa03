#pragma once

// Synthetic SisFall-style recordings with known annotations, used for test
// fixtures and demos. Values are raw ADXL345 counts (256 counts per g) with
// gravity on the y axis while upright and on z while lying.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "falldet/annotation.hpp"
#include "falldet/model.hpp"
#include "falldet/windowing.hpp"

namespace falldet::synth {

enum class Motion {
  Still,  // standing or sitting
  Walk,
  Jog,
  Slip,   // stumble with tilt and jerks (ALERT)
  Bend,   // bending or sitting down: milder tilt and jerks (BKG)
  Fall,   // free fall, impact, settling (FALL)
  Lying,  // post-impact aftermath (BKG)
};

class SignalGenerator {
 public:
  /// `time_scale` > 1 compresses the dynamics so that `n` samples cover
  /// n * time_scale samples' worth of motion.
  explicit SignalGenerator(std::uint64_t seed, double time_scale = 1.0);

  void append(Motion motion, std::size_t n, std::vector<Vec3>& out);

 private:
  model::Rng rng_;
  double time_scale_;
};

/// One recording. Activity codes starting with 'F' contain a slip and a fall;
/// D01/D02 walk, D03/D04 jog, anything else stands still and bends once.
annotation::AnnotatedSequence make_recording(const sensordata::SequenceId& id, std::uint64_t seed);

struct DatasetSpec {
  std::size_t subjects = 6;
  std::size_t trials = 1;
  std::vector<std::string> activities{"D01", "D03", "D07", "F01", "F02"};
  std::uint64_t seed = 42;
};

std::vector<annotation::AnnotatedSequence> make_dataset(const DatasetSpec& spec);

/// Writes `<ACT>_<SUBJ>_R<NN>.txt` recordings to `data_dir` and matching
/// `.ann.json` files to `annotation_dir`.
void write_dataset(const DatasetSpec& spec, const std::filesystem::path& data_dir,
                   const std::filesystem::path& annotation_dir);

/// Labeled windows drawn directly with per-class dynamics, `width` samples
/// each, representing 256 samples of motion (time compressed by 256 / width).
/// BKG mixes still, walking, jogging and bending.
std::vector<windowing::Window> make_windows(const windowing::ClassCounts& counts, std::size_t width,
                                            std::uint64_t seed);

}  // namespace falldet::synth
