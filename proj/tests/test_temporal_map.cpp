// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "acnet/errors.hpp"
#include "acnet/rng.hpp"
#include "acnet/temporal_map.hpp"
#include "test_util.hpp"

using namespace acnet;
using acnet_test::random_matrix;

namespace {

// scalar reference for interval IoU, written independently of the library
double oracle_iou(double a0, double a1, double b0, double b1) {
  const double lo = std::max(a0, b0);
  const double hi = std::min(a1, b1);
  const double inter = hi > lo ? hi - lo : 0.0;
  const double uni = (a1 - a0) + (b1 - b0) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

TEST_CASE("sample_clips windows") {
  SUBCASE("identity when frame count equals clip count") {
    Matrix frames = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
    ClipSequence clips = sample_clips(frames, 3, 9.0);
    CHECK(clips.features == frames);
    CHECK(clips.duration == 9.0);
  }
  SUBCASE("window means") {
    Matrix frames = Matrix::from_rows({{1}, {1}, {3}, {3}});
    ClipSequence clips = sample_clips(frames, 2, 4.0);
    CHECK(clips.features(0, 0) == doctest::Approx(1.0));
    CHECK(clips.features(1, 0) == doctest::Approx(3.0));
  }
  SUBCASE("windows match brute-force enumeration") {
    // oracle: frame f belongs to clip i iff floor(i*t/n) <= f < floor((i+1)*t/n)
    Rng rng(5);
    const int t = 7, n = 3;
    Matrix frames = random_matrix(rng, t, 2);
    ClipSequence clips = sample_clips(frames, n, 7.0);
    for (int i = 0; i < n; ++i) {
      const int lo = i * t / n;
      const int hi = (i + 1) * t / n;
      for (int c = 0; c < 2; ++c) {
        double sum = 0.0;
        for (int f = lo; f < hi; ++f) sum += frames(f, c);
        CHECK(clips.features(i, c) == doctest::Approx(sum / (hi - lo)));
      }
    }
  }
  SUBCASE("empty windows inherit the nearest frame") {
    Matrix frames = Matrix::from_rows({{2}, {8}});
    ClipSequence clips = sample_clips(frames, 4, 4.0);
    CHECK(clips.features(0, 0) == 2.0);
    CHECK(clips.features(1, 0) == 2.0);  // window [0,1) empty at i=1: floor(2/4)=0
    CHECK(clips.features(2, 0) == 8.0);
    CHECK(clips.features(3, 0) == 8.0);
  }
}

TEST_CASE("candidate_interval") {
  CHECK(candidate_interval(0, 3, 4, 8.0) == MomentInterval{0.0, 8.0});
  CHECK(candidate_interval(1, 2, 4, 8.0) == MomentInterval{2.0, 6.0});
  CHECK_THROWS_AS(candidate_interval(2, 1, 4, 8.0), ContractError);

  SUBCASE("cell maximizing IoU with its own interval is itself") {
    for (int n : {2, 5, 16}) {
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const MomentInterval own = candidate_interval(i, j, n, 32.0);
          CHECK(argmax_iou_cell(own, n, 32.0) == TemporalMap2D::cell_index(i, j, n));
        }
      }
    }
  }
}

TEST_CASE("temporal_iou") {
  CHECK(temporal_iou({3, 7}, {3, 7}) == 1.0);
  CHECK(temporal_iou({0, 10}, {20, 30}) == 0.0);
  CHECK(temporal_iou({0, 10}, {5, 15}) == doctest::Approx(1.0 / 3.0));

  SUBCASE("symmetric, bounded, 1 iff equal") {
    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
      const double a0 = rng.uniform(0.0, 50.0), a1 = a0 + rng.uniform(0.1, 30.0);
      const double b0 = rng.uniform(0.0, 50.0), b1 = b0 + rng.uniform(0.1, 30.0);
      const double ab = temporal_iou({a0, a1}, {b0, b1});
      CHECK(ab == temporal_iou({b0, b1}, {a0, a1}));
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0);
      if (ab == 1.0) {
        CHECK(a0 == b0);
        CHECK(a1 == b1);
      }
    }
  }
}

TEST_CASE("encode_interval_map") {
  SUBCASE("three-cell example") {
    TemporalMap2D map = encode_interval_map({0.0, 1.0}, 2, 2.0);
    CHECK(map.at(0, 0) == doctest::Approx(1.0));
    CHECK(map.at(0, 1) == doctest::Approx(0.5));
    CHECK(map.at(1, 1) == doctest::Approx(0.0));
    CHECK(map.grid(TemporalMap2D::cell_index(1, 0, 2), 0) == 0.0);  // invalid cell
  }
  SUBCASE("whole video peaks at the full-span cell") {
    TemporalMap2D map = encode_interval_map({0.0, 24.0}, 6, 24.0);
    CHECK(map.at(0, 5) == doctest::Approx(1.0));
  }
  SUBCASE("matches per-cell oracle on random intervals") {
    Rng rng(43);
    const int n = 8;
    const double duration = 40.0;
    for (int rep = 0; rep < 25; ++rep) {
      const double s = rng.uniform(0.0, duration - 1.0);
      const double e = s + rng.uniform(0.5, duration - s);
      TemporalMap2D map = encode_interval_map({s, e}, n, duration);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double cs = i * duration / n;
          const double ce = (j + 1) * duration / n;
          CHECK(map.at(i, j) == doctest::Approx(oracle_iou(cs, ce, s, e)).epsilon(1e-12));
        }
      }
    }
  }
  SUBCASE("argmax cell has maximal IoU among all valid cells") {
    Rng rng(47);
    for (int n : {4, 9, 16}) {
      for (int rep = 0; rep < 20; ++rep) {
        const double duration = 32.0;
        const double s = rng.uniform(0.0, duration - 2.0);
        const double e = s + rng.uniform(1.0, duration - s);
        TemporalMap2D map = encode_interval_map({s, e}, n, duration);
        const int best = argmax_iou_cell({s, e}, n, duration);
        for (int i = 0; i < n; ++i) {
          for (int j = i; j < n; ++j) {
            CHECK(map.grid(best, 0) >= map.at(i, j));
          }
        }
      }
    }
  }
}

TEST_CASE("iou_label_map") {
  const int n = 8;
  const double duration = 8.0;
  const MomentInterval gt{2.0, 5.0};
  TemporalMap2D labels = iou_label_map(gt, n, duration, 0.5, 1.0);

  SUBCASE("boundary values") {
    // cell (2,4) covers [2,5] exactly: IoU 1 -> label 1
    CHECK(labels.at(2, 4) == doctest::Approx(1.0));
    // a far cell has IoU below 0.5 -> label 0
    CHECK(labels.at(7, 7) == 0.0);
  }
  SUBCASE("full map matches the scalar oracle") {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double iou = oracle_iou(i * 1.0, j + 1.0, gt.start, gt.end);
        const double expected = std::clamp((iou - 0.5) / 0.5, 0.0, 1.0);
        CHECK(labels.at(i, j) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(iou_label_map(gt, n, duration, 1.0, 0.5), ConfigError);
}

TEST_CASE("build_feature_map") {
  Rng rng(53);

  SUBCASE("pooling-only map equals brute-force span max") {
    const int n = 6, d = 3;
    Matrix clips = random_matrix(rng, n, d);
    ad::Var clip_var = ad::Var::leaf(clips);
    ad::Var map = build_feature_map(clip_var, n, 2, {});
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < d; ++c) {
          double expected = 0.0;
          if (i <= j) {
            expected = clips(i, c);
            for (int k = i + 1; k <= j; ++k) expected = std::max(expected, clips(k, c));
          }
          CHECK(map.value()(TemporalMap2D::cell_index(i, j, n), c) == expected);
        }
      }
    }
  }

  SUBCASE("single clip gives a 1x1 map with the clip feature") {
    Matrix clip = Matrix::from_rows({{0.3, -0.7}});
    ad::Var map = build_feature_map(ad::Var::leaf(clip), 1, 2, {});
    CHECK(map.value() == clip);
  }

  SUBCASE("convolved map keeps shape and zero invalid cells") {
    const int n = 8, d = 4, k = 2;
    Rng init(7);
    std::vector<ConvLayer> layers;
    for (int l = 0; l < 2; ++l) {
      layers.push_back({ad::Var::leaf(random_matrix(init, k * k * d, d, 0.3)),
                        ad::Var::leaf(random_matrix(init, 1, d, 0.3))});
    }
    ad::Var map = build_feature_map(ad::Var::leaf(random_matrix(rng, n, d)), n, k, layers);
    CHECK(map.rows() == n * n);
    CHECK(map.cols() == d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        for (int c = 0; c < d; ++c) {
          CHECK(map.value()(TemporalMap2D::cell_index(i, j, n), c) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("valid mask depends only on the triangle") {
  for (int n : {1, 3, 8}) {
    Matrix mask = valid_mask(n);
    int count = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double expected = i <= j ? 1.0 : 0.0;
        CHECK(mask(TemporalMap2D::cell_index(i, j, n), 0) == expected);
        count += i <= j ? 1 : 0;
      }
    }
    CHECK(valid_cell_count(n) == count);
  }
}
