#include "falldet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace falldet::synth {

namespace {

constexpr double kG = 256.0;  // counts per g
constexpr double kPi = std::numbers::pi;

double uniform(model::Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::int32_t to_count(double v, int bits) {
  const double lo = -std::ldexp(1.0, bits - 1);
  const double hi = std::ldexp(1.0, bits - 1) - 1.0;
  return static_cast<std::int32_t>(std::clamp(std::round(v), lo, hi));
}

std::size_t seconds(double s) { return static_cast<std::size_t>(std::lround(s * kSampleRateHz)); }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SignalGenerator::SignalGenerator(std::uint64_t seed, double time_scale) : rng_(seed), time_scale_(time_scale) {
  if (!(time_scale > 0.0)) throw Error("time scale must be positive");
}

void SignalGenerator::append(Motion motion, std::size_t n, std::vector<Vec3>& out) {
  std::normal_distribution<double> unit(0.0, 1.0);
  auto noise = [&](double sigma) { return sigma * unit(rng_); };
  const double dt = time_scale_ / kSampleRateHz;
  const double phase0 = uniform(rng_, 0.0, 2.0 * kPi);

  switch (motion) {
    case Motion::Still: {
      const double tx = uniform(rng_, -12.0, 12.0);
      const double tz = uniform(rng_, -12.0, 12.0);
      for (std::size_t i = 0; i < n; ++i) out.push_back({tx + noise(3.0), -kG + noise(3.0), tz + noise(3.0)});
      break;
    }
    case Motion::Walk:
    case Motion::Jog: {
      const bool jog = motion == Motion::Jog;
      const double f = jog ? uniform(rng_, 2.5, 3.2) : uniform(rng_, 1.7, 2.1);
      const double ay = jog ? uniform(rng_, 150.0, 320.0) : uniform(rng_, 40.0, 80.0);
      const double az = jog ? uniform(rng_, 60.0, 120.0) : uniform(rng_, 20.0, 40.0);
      const double ax = jog ? uniform(rng_, 30.0, 70.0) : uniform(rng_, 10.0, 30.0);
      const double sigma = jog ? 20.0 : 8.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double w = 2.0 * kPi * f * t + phase0;
        out.push_back({ax * std::sin(w / 2.0) + noise(sigma), -kG + ay * std::sin(w) + noise(sigma),
                       az * std::sin(w + 1.0) + noise(sigma)});
      }
      break;
    }
    case Motion::Slip:
    case Motion::Bend: {
      const bool slip = motion == Motion::Slip;
      const double tilt = (slip ? uniform(rng_, 10.0, 20.0) : uniform(rng_, 0.0, 14.0)) * kPi / 180.0;
      const double drop = slip ? uniform(rng_, 0.05, 0.15) : uniform(rng_, 0.0, 0.08);
      const double jerk = slip ? uniform(rng_, 30.0, 70.0) : uniform(rng_, 10.0, 45.0);
      const double fj = uniform(rng_, 4.0, 7.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double p = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
        const double t = static_cast<double>(i) * dt;
        const double theta = tilt * p;
        const double g = kG * (1.0 - drop * p);
        const double j = jerk * std::sin(2.0 * kPi * fj * t + phase0);
        out.push_back({j + noise(15.0), -g * std::cos(theta) + noise(15.0),
                       g * std::sin(theta) + 0.5 * jerk * std::sin(2.0 * kPi * fj * t + phase0 + 1.0) + noise(15.0)});
      }
      break;
    }
    case Motion::Fall: {
      const auto free = static_cast<std::size_t>(std::round(static_cast<double>(n) * uniform(rng_, 0.45, 0.6)));
      const auto impact = std::max<std::size_t>(3, n * 15 / 100);
      const double amp = uniform(rng_, 700.0, 1300.0);
      Vec3 dir{uniform(rng_, -0.5, 0.5), uniform(rng_, -1.0, -0.3), uniform(rng_, 0.3, 1.0)};
      const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      for (auto& d : dir) d /= norm;
      const double tau = std::max(1.0, static_cast<double>(impact) / 3.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (i < free) {
          const double p = std::min(1.0, static_cast<double>(i) / std::max(1.0, 0.4 * static_cast<double>(free)));
          const double g = kG * (1.0 - 0.85 * p);
          const double theta = (45.0 + 25.0 * static_cast<double>(i) / std::max<std::size_t>(1, free)) * kPi / 180.0;
          out.push_back({noise(10.0), -g * std::cos(theta) + noise(10.0), g * std::sin(theta) + noise(10.0)});
        } else {
          const double j = static_cast<double>(i - free);
          const double spike = i < free + impact ? amp * std::exp(-j / tau) * std::cos(kPi * j / 2.0) : 0.0;
          const double sigma = 25.0 * std::exp(-j / (4.0 * tau));
          out.push_back({spike * dir[0] + noise(sigma + 4.0), spike * dir[1] + noise(sigma + 4.0),
                         kG + spike * dir[2] + noise(sigma + 4.0)});
        }
      }
      break;
    }
    case Motion::Lying: {
      const double tx = uniform(rng_, -20.0, 20.0);
      const double ty = uniform(rng_, -20.0, 20.0);
      const std::size_t rolling = n / 5;
      for (std::size_t i = 0; i < n; ++i) {
        const double sigma = i < rolling ? 20.0 : 4.0;
        out.push_back({tx + noise(sigma), ty + noise(sigma), kG + noise(sigma)});
      }
      break;
    }
  }
}

annotation::AnnotatedSequence make_recording(const sensordata::SequenceId& id, std::uint64_t seed) {
  model::Rng rng(seed);
  SignalGenerator gen(mix(seed, 1));
  std::vector<Vec3> accel;
  std::vector<annotation::IntervalAnnotation> intervals;
  const char kind = id.activity.empty() ? 'D' : id.activity[0];
  const int code = id.activity.size() > 1 ? std::atoi(id.activity.c_str() + 1) : 0;

  if (kind == 'F') {
    gen.append(Motion::Still, seconds(uniform(rng, 1.0, 2.0)), accel);
    gen.append(code % 2 == 0 ? Motion::Jog : Motion::Walk, seconds(uniform(rng, 2.0, 3.0)), accel);
    const std::size_t alert_start = accel.size();
    gen.append(Motion::Slip, seconds(uniform(rng, 1.0, 1.6)), accel);
    const std::size_t fall_start = accel.size();
    gen.append(Motion::Fall, seconds(uniform(rng, 0.5, 0.8)), accel);
    const std::size_t fall_end = accel.size();
    gen.append(Motion::Lying, seconds(uniform(rng, 2.5, 4.0)), accel);
    intervals.push_back({ActivityClass::Alert, alert_start, fall_start});
    intervals.push_back({ActivityClass::Fall, fall_start, fall_end});
  } else {
    gen.append(Motion::Still, seconds(uniform(rng, 0.8, 1.2)), accel);
    if (code == 1 || code == 2) {
      gen.append(Motion::Walk, seconds(uniform(rng, 6.0, 8.0)), accel);
    } else if (code == 3 || code == 4) {
      gen.append(Motion::Jog, seconds(uniform(rng, 5.0, 7.0)), accel);
    } else {
      gen.append(Motion::Still, seconds(uniform(rng, 2.0, 3.0)), accel);
      gen.append(Motion::Bend, seconds(uniform(rng, 1.0, 2.0)), accel);
      gen.append(Motion::Still, seconds(uniform(rng, 2.0, 3.0)), accel);
    }
    gen.append(Motion::Still, seconds(uniform(rng, 0.8, 1.2)), accel);
  }

  std::normal_distribution<double> gyro_noise(0.0, 30.0);
  sensordata::Sequence seq;
  seq.id = id;
  seq.samples.reserve(accel.size());
  for (const auto& a : accel) {
    sensordata::SensorSample s;
    s.accel = {to_count(a[0], 13), to_count(a[1], 13), to_count(a[2], 13)};
    s.gyro = sensordata::Vec3i{to_count(gyro_noise(rng), 16), to_count(gyro_noise(rng), 16),
                               to_count(gyro_noise(rng), 16)};
    s.accel2 = sensordata::Vec3i{to_count(4.0 * a[0], 14), to_count(4.0 * a[1], 14), to_count(4.0 * a[2], 14)};
    seq.samples.push_back(s);
  }
  return annotation::AnnotatedSequence(std::move(seq), std::move(intervals));
}

std::vector<annotation::AnnotatedSequence> make_dataset(const DatasetSpec& spec) {
  std::vector<annotation::AnnotatedSequence> out;
  for (std::size_t s = 1; s <= spec.subjects; ++s) {
    char subject[8];
    std::snprintf(subject, sizeof subject, "SA%02zu", s);
    for (std::size_t a = 0; a < spec.activities.size(); ++a) {
      for (std::size_t t = 1; t <= spec.trials; ++t) {
        const sensordata::SequenceId id{spec.activities[a], subject, static_cast<int>(t)};
        out.push_back(make_recording(id, mix(mix(spec.seed, s), mix(a, t))));
      }
    }
  }
  return out;
}

void write_dataset(const DatasetSpec& spec, const std::filesystem::path& data_dir,
                   const std::filesystem::path& annotation_dir) {
  std::filesystem::create_directories(data_dir);
  std::filesystem::create_directories(annotation_dir);
  for (const auto& rec : make_dataset(spec)) {
    const auto& seq = rec.sequence();
    std::ofstream(data_dir / (seq.id.str() + ".txt"), std::ios::binary) << sensordata::serialize_sisfall(seq);
    std::ofstream(annotation::annotation_path(annotation_dir, seq.id), std::ios::binary)
        << annotation::annotations_to_json(rec.intervals()).dump(2) << '\n';
  }
}

std::vector<windowing::Window> make_windows(const windowing::ClassCounts& counts, std::size_t width,
                                            std::uint64_t seed) {
  if (width < 2) throw Error("window width must be >= 2");
  model::Rng rng(seed);
  SignalGenerator gen(mix(seed, 7), 256.0 / static_cast<double>(width));
  std::vector<windowing::Window> out;
  auto emit = [&](ActivityClass label, std::vector<Vec3> samples) {
    windowing::Window w;
    w.source = "synthetic";
    w.label = label;
    for (auto& s : samples) {
      for (auto& v : s) v = std::round(v);
    }
    w.samples = std::move(samples);
    out.push_back(std::move(w));
  };
  for (std::size_t i = 0; i < counts.bkg; ++i) {
    std::vector<Vec3> s;
    const double r = uniform(rng, 0.0, 1.0);
    gen.append(r < 0.3 ? Motion::Still : r < 0.55 ? Motion::Walk : r < 0.75 ? Motion::Jog : Motion::Bend, width, s);
    emit(ActivityClass::Bkg, std::move(s));
  }
  for (std::size_t i = 0; i < counts.alert; ++i) {
    std::vector<Vec3> s;
    const auto lead = static_cast<std::size_t>(uniform(rng, 0.0, 0.3) * static_cast<double>(width));
    gen.append(Motion::Walk, lead, s);
    gen.append(Motion::Slip, width - lead, s);
    emit(ActivityClass::Alert, std::move(s));
  }
  for (std::size_t i = 0; i < counts.fall; ++i) {
    std::vector<Vec3> s;
    const auto lead = static_cast<std::size_t>(uniform(rng, 0.1, 0.5) * static_cast<double>(width));
    gen.append(Motion::Slip, lead, s);
    gen.append(Motion::Fall, width - lead, s);
    emit(ActivityClass::Fall, std::move(s));
  }
  std::shuffle(out.begin(), out.end(), rng);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].start = i * width;
  return out;
}

}  // namespace falldet::synth
