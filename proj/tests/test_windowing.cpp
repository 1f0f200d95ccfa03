#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "falldet/windowing.hpp"

using namespace falldet;
using namespace falldet::windowing;

namespace {

sensordata::Sequence ramp(std::size_t n) {
  sensordata::Sequence s;
  s.id = {"D01", "SA01", 1};
  for (std::size_t i = 0; i < n; ++i) {
    sensordata::SensorSample x;
    x.accel = {static_cast<int>(i % 4000), -static_cast<int>(i % 4000), 7};
    s.samples.push_back(x);
  }
  return s;
}

// Slide a window along by hand.
std::vector<std::size_t> enumerate_starts(std::size_t n, std::size_t w, std::size_t s) {
  std::vector<std::size_t> out;
  for (std::size_t start = 0; start + w <= n; start += s) out.push_back(start);
  return out;
}

std::vector<ActivityClass> labels_with(std::size_t w, std::size_t fall, std::size_t alert) {
  std::vector<ActivityClass> v(w, ActivityClass::Bkg);
  std::fill_n(v.begin(), fall, ActivityClass::Fall);
  std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(fall), alert, ActivityClass::Alert);
  return v;
}

}  // namespace

TEST_CASE("window counts and starts") {
  CHECK(window_starts(1000, {256, 128}) == std::vector<std::size_t>{0, 128, 256, 384, 512, 640});
  CHECK(window_count(256, {256, 128}) == 1);
  CHECK(window_count(255, {256, 128}) == 0);
  CHECK(window_count(0, {2, 1}) == 0);
  CHECK_THROWS_AS(window_count(10, {1, 1}), Error);
  CHECK_THROWS_AS(window_count(10, {4, 0}), Error);
  CHECK_THROWS_AS(window_count(10, {4, 5}), Error);
}

TEST_CASE("count formula matches enumeration over random triples") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t w = std::uniform_int_distribution<std::size_t>(2, 600)(rng);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, w)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 5000)(rng);
    const auto expected = enumerate_starts(n, w, s);
    CHECK(window_count(n, {w, s}) == expected.size());
    CHECK(window_starts(n, {w, s}) == expected);
  }
}

TEST_CASE("covered samples appear in 1 to ceil(w/s) windows") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = std::uniform_int_distribution<std::size_t>(2, 80)(rng);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, w)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(w, 400)(rng);
    std::vector<std::size_t> hits(n, 0);
    for (auto start : window_starts(n, {w, s})) {
      for (std::size_t i = start; i < start + w; ++i) ++hits[i];
    }
    const std::size_t bound = (w + s - 1) / s;
    for (std::size_t i = 0; i < n; ++i) {
      if (hits[i] == 0) continue;
      CHECK(hits[i] <= bound);
    }
    CHECK(hits.front() >= 1);
  }
}

TEST_CASE("window labeling thresholds") {
  CHECK(label_window(labels_with(256, 26, 0)) == ActivityClass::Fall);
  CHECK(label_window(labels_with(256, 25, 200)) == ActivityClass::Alert);
  CHECK(label_window(labels_with(256, 0, 130)) == ActivityClass::Alert);
  CHECK(label_window(labels_with(256, 0, 129)) == ActivityClass::Alert);
  CHECK(label_window(labels_with(256, 0, 128)) == ActivityClass::Bkg);
  CHECK(label_window(labels_with(256, 0, 0)) == ActivityClass::Bkg);

  const LabelRule floor_rule{10, FallRounding::Floor};
  CHECK(label_window(labels_with(256, 25, 0), floor_rule) == ActivityClass::Fall);
  CHECK(label_window(labels_with(256, 24, 0), floor_rule) == ActivityClass::Bkg);
  // floor(10% of 8) = 0, but a window without FALL samples stays non-FALL
  CHECK(label_window(labels_with(8, 0, 0), floor_rule) == ActivityClass::Bkg);
  CHECK(LabelRule{}.fall_threshold(256) == 26);
  CHECK(LabelRule{}.fall_threshold(250) == 25);
  CHECK(floor_rule.fall_threshold(256) == 25);
}

TEST_CASE("label properties over generated windows") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t w = std::uniform_int_distribution<std::size_t>(2, 300)(rng);
    std::vector<ActivityClass> v(w);
    const double pf = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    const double pa = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (auto& c : v) {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      c = u < pf ? ActivityClass::Fall : u < pf + pa * (1 - pf) ? ActivityClass::Alert : ActivityClass::Bkg;
    }
    const auto fall = static_cast<std::size_t>(std::count(v.begin(), v.end(), ActivityClass::Fall));
    const auto label = label_window(v);
    if (label == ActivityClass::Fall) CHECK(10 * fall >= w);
    if (label == ActivityClass::Alert) CHECK(10 * fall < w);

    // only the per-class counts matter
    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(label_window(shuffled) == label);
  }
}

TEST_CASE("segment slices samples and labels") {
  const auto seq = ramp(1000);
  std::vector<ActivityClass> labels(1000, ActivityClass::Bkg);
  std::fill(labels.begin() + 300, labels.begin() + 330, ActivityClass::Fall);
  const auto windows = segment(seq, labels, {256, 128});
  REQUIRE(windows.size() == 6);
  for (const auto& w : windows) {
    CHECK(w.samples.size() == 256);
    CHECK(w.source == "D01_SA01_R01");
    CHECK(w.samples.front()[0] == static_cast<double>(w.start));
    CHECK(w.samples.back()[0] == static_cast<double>(w.start + 255));
  }
  CHECK(windows[0].label == ActivityClass::Bkg);  // [0,256)
  CHECK(windows[1].label == ActivityClass::Fall);  // [128,384) holds all 30
  CHECK(windows[2].label == ActivityClass::Fall);  // [256,512)
  CHECK(windows[3].label == ActivityClass::Bkg);
  CHECK(class_counts(windows) == ClassCounts{4, 0, 2});
  CHECK(segment(ramp(255), std::vector<ActivityClass>(255), {256, 128}).empty());
  CHECK_THROWS_AS(segment(seq, std::vector<ActivityClass>(999), {256, 128}), Error);
}

TEST_CASE("class counts") {
  CHECK(class_counts(std::vector<Window>{}) == ClassCounts{});
  std::vector<Window> ws(4);
  ws[2].label = ActivityClass::Fall;
  CHECK(class_counts(ws) == ClassCounts{3, 0, 1});

  ClassCounts big{5000, 0, 100};
  CHECK(static_cast<double>(big.bkg) / static_cast<double>(big.fall) == 50.0);
}

TEST_CASE("window duration") {
  CHECK(window_seconds(256) == 1.28);
  CHECK(window_seconds(200) == 1.0);
}

TEST_CASE("stride from a percentage") {
  CHECK(WindowParams::from_percent(256, 50) == WindowParams{256, 128});
  CHECK(WindowParams::from_percent(256, 100) == WindowParams{256, 256});
  CHECK(WindowParams::from_percent(32, 25) == WindowParams{32, 8});
  CHECK_THROWS_AS(WindowParams::from_percent(256, 0), Error);
  CHECK_THROWS_AS(WindowParams::from_percent(3, 10), Error);  // stride rounds to 0
}

TEST_CASE("window index CSV round trip") {
  std::vector<Window> ws(3);
  ws[0] = {"F01_SA01_R01", 0, {}, ActivityClass::Bkg};
  ws[1] = {"F01_SA01_R01", 128, {}, ActivityClass::Alert};
  ws[2] = {"F01_SA02_R01", 256, {}, ActivityClass::Fall};
  std::stringstream s;
  write_window_index(s, ws);
  CHECK(s.str() == "seq_id,start,label\nF01_SA01_R01,0,BKG\nF01_SA01_R01,128,ALERT\nF01_SA02_R01,256,FALL\n");
  const auto rows = read_window_index(s);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].start == 256);
  CHECK(rows[1].label == ActivityClass::Alert);
  std::istringstream bad("seq_id,start,label\nx,notanumber,BKG\n");
  CHECK_THROWS_AS(read_window_index(bad), Error);
}
