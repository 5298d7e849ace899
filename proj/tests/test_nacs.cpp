// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "acnet/errors.hpp"
#include "acnet/nacs.hpp"
#include "acnet/rng.hpp"
#include "test_util.hpp"

using namespace acnet;

namespace {

CaptionCandidate cand(double start, double end, double cs = 0.9, double cp = 0.9) {
  CaptionCandidate c;
  c.interval = {start, end};
  c.sentence_conf = cs;
  c.proposal_conf = cp;
  return c;
}

}  // namespace

TEST_CASE("confidence formula") {
  CHECK(confidence(cand(10, 60, 0.8, 0.6), 100.0) == doctest::Approx(0.7));
  // degenerate zero-length interval scores zero
  CaptionCandidate z = cand(5, 5, 1.0, 1.0);
  CHECK(confidence(z, 100.0) == 0.0);
  // whole video at full confidence hits the upper bound of 2
  CHECK(confidence(cand(0, 100, 1.0, 1.0), 100.0) == doctest::Approx(2.0));
}

TEST_CASE("region_iou") {
  AnnotatedRegion empty;
  CHECK(region_iou(empty, {0, 10}) == 0.0);

  AnnotatedRegion self({{3, 9}});
  CHECK(region_iou(self, {3, 9}) == doctest::Approx(1.0));

  AnnotatedRegion two({{0, 2}, {6, 8}});
  CHECK(region_iou(two, {1, 7}) == doctest::Approx(0.25));
}

TEST_CASE("annotated region canonical merge") {
  AnnotatedRegion r;
  r.add({5, 7});
  r.add({0, 2});
  r.add({6, 9});
  REQUIRE(r.intervals().size() == 2);
  CHECK(r.intervals()[0] == MomentInterval{0, 2});
  CHECK(r.intervals()[1] == MomentInterval{5, 9});
}

TEST_CASE("nacs worked example") {
  // three candidates with direct scores; the second pick must skip the
  // decayed near-duplicate
  std::vector<CaptionCandidate> pool{cand(0, 40), cand(0, 40), cand(60, 100)};
  AuxiliarySet out =
      nacs_select_scored(pool, {1.0, 0.9, 0.5}, 2, 0.5, AnnotatedRegion{});

  REQUIRE(out.selected.size() == 2);
  CHECK(out.source_indices[0] == 0);
  CHECK(out.source_indices[1] == 2);
  CHECK(out.scores_at_selection[0] == doctest::Approx(1.0));
  CHECK(out.scores_at_selection[1] == doctest::Approx(0.5));
  // the suppressed near-duplicate decayed to 0.9 * exp(-1/0.5)
  CHECK(std::abs(0.9 * std::exp(-2.0) - 0.121802) < 1e-5);
}

TEST_CASE("nacs trivial cases") {
  CHECK(nacs_select({}, 5, 0.5, AnnotatedRegion{}, 100.0).selected.empty());

  std::vector<CaptionCandidate> one{cand(10, 50, 0.7, 0.8)};
  AuxiliarySet out = nacs_select(one, 3, 0.5, AnnotatedRegion{}, 100.0);
  REQUIRE(out.selected.size() == 1);
  CHECK(out.scores_at_selection[0] == doctest::Approx(confidence(one[0], 100.0)));

  CHECK(nacs_select(one, 0, 0.5, AnnotatedRegion{}, 100.0).selected.empty());
  CHECK_THROWS_AS(nacs_select(one, 3, 0.0, AnnotatedRegion{}, 100.0), ConfigError);
}

TEST_CASE("nacs properties on random pools") {
  Rng rng(61);
  for (int rep = 0; rep < 200; ++rep) {
    const double duration = rng.uniform(40.0, 120.0);
    const int m = rng.uniform_int(12) + 1;
    std::vector<CaptionCandidate> pool;
    for (int k = 0; k < m; ++k) {
      const double s = rng.uniform(0.0, duration - 1.0);
      const double e = s + rng.uniform(0.5, duration - s);
      pool.push_back(cand(s, e, rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)));
    }
    const int l_c = rng.uniform_int(8);
    const double theta = rng.uniform(0.1, 2.0);
    AnnotatedRegion region;
    if (rng.uniform() < 0.5) region.add({0.0, rng.uniform(1.0, duration / 3.0)});

    AuxiliarySet out = nacs_select(pool, l_c, theta, region, duration);

    CHECK(out.selected.size() <= static_cast<std::size_t>(l_c));
    CHECK(out.selected.size() <= pool.size());
    if (!out.selected.empty()) {
      // first pick is a global argmax of the initial confidences
      double best = -1.0;
      for (const auto& c : pool) best = std::max(best, confidence(c, duration));
      CHECK(out.scores_at_selection[0] == doctest::Approx(best));
    }
    // replay determinism
    AuxiliarySet again = nacs_select(pool, l_c, theta, region, duration);
    CHECK(again.source_indices == out.source_indices);
    CHECK(again.scores_at_selection == out.scores_at_selection);
  }
}

TEST_CASE("zero-overlap candidates keep their confidence bit-exactly") {
  // candidates on [0,10], [20,30], ... never overlap each other or the
  // seeded region, so every decay factor is exp(0) == 1
  std::vector<CaptionCandidate> pool;
  for (int k = 0; k < 5; ++k) {
    pool.push_back(cand(20.0 * k, 20.0 * k + 10.0, 0.3 + 0.1 * k, 0.9));
  }
  AuxiliarySet out = nacs_select(pool, 5, 0.5, AnnotatedRegion{}, 100.0);
  REQUIRE(out.selected.size() == 5);
  for (std::size_t k = 0; k < out.selected.size(); ++k) {
    const int src = out.source_indices[k];
    CHECK(out.scores_at_selection[k] == confidence(pool[src], 100.0));
  }
}

TEST_CASE("decay is monotone in overlap") {
  // two candidates equally confident; the one overlapping the first pick
  // more decays harder
  std::vector<CaptionCandidate> pool{cand(0, 50, 1.0, 1.0), cand(0, 40, 0.5, 0.5),
                                     cand(30, 70, 0.5, 0.5)};
  const double duration = 100.0;
  std::vector<double> scores{confidence(pool[0], duration), 0.4, 0.4};
  AuxiliarySet out = nacs_select_scored(pool, scores, 3, 0.5, AnnotatedRegion{});
  REQUIRE(out.selected.size() == 3);
  // candidate 1 overlaps [0,50] with IoU 0.8, candidate 2 with IoU 2/7
  CHECK(out.source_indices[1] == 2);
  CHECK(out.scores_at_selection[1] > out.scores_at_selection[2]);
}
