#include <algorithm>
#include <array>
#include <random>
#include <set>

#include "doctest.h"
#include "falldet/annotation.hpp"

using namespace falldet;
using namespace falldet::annotation;

namespace {

sensordata::Sequence blank(std::size_t n) {
  sensordata::Sequence s;
  s.id = {"F01", "SA01", 1};
  s.samples.resize(n);
  return s;
}

std::string pattern(const AnnotatedSequence& a) {
  std::string out;
  for (auto c : a.per_sample_labels()) out += to_string(c)[0];
  return out;
}

}  // namespace

TEST_CASE("loading the JSON format") {
  auto iv = load_annotations(R"({"intervals":[{"class":"FALL","start":400,"end":700}]})", 2000);
  REQUIRE(iv.size() == 1);
  CHECK(iv[0] == IntervalAnnotation{ActivityClass::Fall, 400, 700});
  CHECK(load_annotations(R"({"intervals":[]})", 2000).empty());
  CHECK_THROWS_AS(load_annotations(R"({"intervals":[{"class":"FALL","start":400,"end":2001}]})", 2000),
                  AnnotationError);
}

TEST_CASE("invalid documents are rejected with per-interval issues") {
  const char* bad[] = {
      R"({"intervals":[{"class":"WALK","start":1,"end":2}]})",
      R"({"intervals":[{"class":"BKG","start":1,"end":2}]})",
      R"({"intervals":[{"class":"ALERT","start":5,"end":5}]})",
      R"({"intervals":[{"class":"ALERT","start":6,"end":5}]})",
      R"({"intervals":[{"class":"ALERT","start":-1,"end":5}]})",
      R"({"intervals":[{"class":"ALERT","start":1}]})",
      R"({"intervals":{}})",
      R"([1,2])",
      R"(not json)",
  };
  for (const char* doc : bad) {
    CAPTURE(doc);
    CHECK_THROWS_AS(load_annotations(doc, 100), AnnotationError);
  }

  try {
    load_annotations(R"({"intervals":[{"class":"FALL","start":0,"end":10},
                                      {"class":"ALERT","start":0,"end":10},
                                      {"class":"FALL","start":9,"end":20},
                                      {"class":"ALERT","start":50,"end":200}]})",
                     100);
    FAIL("expected an error");
  } catch (const AnnotationError& e) {
    const auto j = e.to_json();
    REQUIRE(j["issues"].size() == 2);
    std::set<std::size_t> flagged;
    for (const auto& issue : j["issues"]) flagged.insert(issue["index"].get<std::size_t>());
    CHECK(flagged == std::set<std::size_t>{2, 3});
  }
}

TEST_CASE("different classes may overlap, same class may touch") {
  CHECK_NOTHROW(validate_intervals(std::vector<IntervalAnnotation>{{ActivityClass::Alert, 0, 10},
                                                                   {ActivityClass::Fall, 5, 15},
                                                                   {ActivityClass::Fall, 15, 20}},
                                   20));
}

TEST_CASE("label_at precedence") {
  const AnnotatedSequence a(blank(20), {{ActivityClass::Alert, 2, 10}, {ActivityClass::Fall, 6, 12}});
  CHECK(a.label_at(7) == ActivityClass::Fall);
  CHECK(a.label_at(0) == ActivityClass::Bkg);
  CHECK(a.label_at(3) == ActivityClass::Alert);
  CHECK(a.label_at(11) == ActivityClass::Fall);
  CHECK(a.label_at(12) == ActivityClass::Bkg);
  CHECK_THROWS_AS(a.label_at(20), std::out_of_range);
}

TEST_CASE("per-sample expansion") {
  CHECK(pattern(AnnotatedSequence(blank(10), {{ActivityClass::Fall, 4, 7}})) == "BBBBFFFBBB");
  CHECK(pattern(AnnotatedSequence(blank(5), {})) == "BBBBB");
  CHECK(pattern(AnnotatedSequence(blank(8), {{ActivityClass::Alert, 2, 4}, {ActivityClass::Fall, 4, 6}})) ==
        "BBAAFFBB");
  CHECK_THROWS_AS(AnnotatedSequence(blank(8), {{ActivityClass::Fall, 4, 9}}), AnnotationError);
}

TEST_CASE("random interval sets: labels agree with a direct scan and counts sum to the length") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    std::vector<IntervalAnnotation> iv;
    for (auto cls : {ActivityClass::Alert, ActivityClass::Fall}) {
      // disjoint intervals per class from sorted cut points
      std::vector<std::size_t> cuts;
      const int k = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int i = 0; i < k; ++i) cuts.push_back(std::uniform_int_distribution<std::size_t>(0, n)(rng));
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      for (std::size_t i = 0; i + 1 < cuts.size(); i += 2) iv.push_back({cls, cuts[i], cuts[i + 1]});
    }
    std::shuffle(iv.begin(), iv.end(), rng);
    const AnnotatedSequence a(blank(n), iv);
    const auto labels = a.per_sample_labels();
    REQUIRE(labels.size() == n);
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      bool in_fall = false, in_alert = false;
      for (const auto& x : iv) {
        if (x.start <= i && i < x.end) (x.cls == ActivityClass::Fall ? in_fall : in_alert) = true;
      }
      const auto expected = in_fall ? ActivityClass::Fall : in_alert ? ActivityClass::Alert : ActivityClass::Bkg;
      CHECK(labels[i] == expected);
      CHECK(a.label_at(i) == expected);
      ++counts[index_of(labels[i])];
    }
    CHECK(counts[0] + counts[1] + counts[2] == n);
  }
}

TEST_CASE("JSON round trip and file naming") {
  const std::vector<IntervalAnnotation> iv{{ActivityClass::Alert, 10, 30}, {ActivityClass::Fall, 30, 45}};
  CHECK(annotations_from_json(annotations_to_json(iv), 50) == iv);
  CHECK(annotation_path("ann", {"F01", "SA02", 3}) == std::filesystem::path("ann") / "F01_SA02_R03.ann.json");
}
