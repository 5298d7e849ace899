// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "acnet/errors.hpp"
#include "acnet/losses.hpp"
#include "acnet/rng.hpp"
#include "test_util.hpp"

using namespace acnet;
using acnet_test::random_unit_rows;

namespace {

ad::Var unit_row(Rng& rng, int dim) {
  return ad::Var::leaf(random_unit_rows(rng, 1, dim));
}

double dot_rows(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (int c = 0; c < a.cols(); ++c) s += a(0, c) * b(0, c);
  return s;
}

// plain scalar InfoNCE: anchors[i] matched with candidates[i], pool is
// all candidates; no max-subtraction so it is a genuinely different path
double oracle_nce(const std::vector<Matrix>& anchors, const std::vector<Matrix>& candidates,
                  double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double denom = 0.0;
    for (const auto& c : candidates) denom += std::exp(dot_rows(anchors[i], c) / tau);
    total += -std::log(std::exp(dot_rows(anchors[i], candidates[i]) / tau) / denom);
  }
  return total / static_cast<double>(anchors.size());
}

ContrastiveBatch random_batch(Rng& rng, int pairs, int aux, int dim,
                              bool with_aux_moments = false) {
  ContrastiveBatch batch;
  for (int i = 0; i < pairs; ++i) {
    batch.gt_moments.push_back(unit_row(rng, dim));
    batch.gt_sentences.push_back(unit_row(rng, dim));
  }
  for (int k = 0; k < aux; ++k) {
    batch.aux_sentences.push_back(unit_row(rng, dim));
    batch.aux_owner.push_back(pairs > 0 ? k % pairs : 0);
    if (with_aux_moments) batch.aux_moments.push_back(unit_row(rng, dim));
  }
  return batch;
}

}  // namespace

TEST_CASE("v2s direction") {
  Rng rng(71);

  SUBCASE("single pair with no aux is exactly zero") {
    ContrastiveBatch batch = random_batch(rng, 1, 0, 6);
    CHECK(accl_v2s(batch, 0.1).value()(0, 0) == 0.0);
  }

  SUBCASE("one aux sentence with identical similarity gives log 2") {
    ContrastiveBatch batch;
    batch.gt_moments.push_back(ad::Var::leaf(Matrix::from_rows({{1, 0}})));
    ad::Var s = ad::Var::leaf(Matrix::from_rows({{0.6, 0.8}}));
    batch.gt_sentences.push_back(s);
    batch.aux_sentences.push_back(ad::Var::leaf(Matrix::from_rows({{0.6, 0.8}})));
    batch.aux_owner.push_back(0);
    for (double tau : {0.05, 0.1, 1.0}) {
      CHECK(accl_v2s(batch, tau).value()(0, 0) == doctest::Approx(std::log(2.0)));
    }
  }

  SUBCASE("matches the scalar oracle with aux negatives") {
    const int pairs = 3, aux = 2, dim = 8;
    ContrastiveBatch batch = random_batch(rng, pairs, aux, dim);
    std::vector<Matrix> anchors, candidates;
    for (const auto& v : batch.gt_moments) anchors.push_back(v.value());
    for (const auto& s : batch.gt_sentences) candidates.push_back(s.value());
    for (const auto& s : batch.aux_sentences) candidates.push_back(s.value());
    const double expected = oracle_nce(anchors, candidates, 0.1);
    CHECK(accl_v2s(batch, 0.1).value()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("empty positive set is a contract error") {
    ContrastiveBatch batch;
    CHECK_THROWS_AS(accl_v2s(batch, 0.1), ContractError);
  }
}

TEST_CASE("s2v direction") {
  Rng rng(73);

  SUBCASE("single pair is exactly zero") {
    ContrastiveBatch batch = random_batch(rng, 1, 0, 6);
    CHECK(accl_s2v(batch, 0.1).value()(0, 0) == 0.0);
  }

  SUBCASE("bit-identical with and without aux sentences") {
    ContrastiveBatch batch = random_batch(rng, 4, 3, 8);
    ContrastiveBatch stripped = batch;
    stripped.aux_sentences.clear();
    stripped.aux_owner.clear();
    const double with_aux = accl_s2v(batch, 0.1).value()(0, 0);
    const double without_aux = accl_s2v(stripped, 0.1).value()(0, 0);
    CHECK(with_aux == without_aux);  // exact, not approximate
  }

  SUBCASE("matches the scalar oracle") {
    ContrastiveBatch batch = random_batch(rng, 4, 0, 8);
    std::vector<Matrix> anchors, candidates;
    for (const auto& s : batch.gt_sentences) anchors.push_back(s.value());
    for (const auto& v : batch.gt_moments) candidates.push_back(v.value());
    const double expected = oracle_nce(anchors, candidates, 0.07);
    CHECK(accl_s2v(batch, 0.07).value()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("combined contrastive loss") {
  Rng rng(79);
  ContrastiveBatch batch = random_batch(rng, 3, 2, 8);
  LossWeights w;

  SUBCASE("zero weights give zero") {
    w.lambda_v = 0.0;
    w.lambda_s = 0.0;
    CHECK(accl(batch, w).value()(0, 0) == 0.0);
  }
  SUBCASE("v-only weight reduces to v2s") {
    w.lambda_v = 1.0;
    w.lambda_s = 0.0;
    CHECK(accl(batch, w).value()(0, 0) ==
          doctest::Approx(accl_v2s(batch, w.tau_v).value()(0, 0)));
  }
  SUBCASE("defaults are the weighted sum") {
    const double expected = w.lambda_v * accl_v2s(batch, w.tau_v).value()(0, 0) +
                            w.lambda_s * accl_s2v(batch, w.tau_s).value()(0, 0);
    CHECK(accl(batch, w).value()(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("asymmetry invariants") {
  Rng rng(83);

  SUBCASE("aux moment embeddings receive exactly zero gradient") {
    // moments gathered from a shared map: only the gt row may move
    const int dim = 6;
    ad::Var map = ad::Var::leaf(acnet_test::random_matrix(rng, 5, dim));
    ContrastiveBatch batch;
    batch.gt_moments.push_back(ad::l2_normalize_rows(ad::row(map, 1)));
    batch.gt_sentences.push_back(unit_row(rng, dim));
    batch.aux_sentences.push_back(unit_row(rng, dim));
    batch.aux_owner.push_back(0);
    // gather aux moment rows the way the vanilla objective would
    ad::Var aux_moment = ad::l2_normalize_rows(ad::row(map, 3));

    LossWeights w;
    ad::Var loss = accl(batch, w);
    ad::backward(loss);

    for (int c = 0; c < dim; ++c) {
      CHECK(aux_moment.grad()(0, c) == 0.0);
      CHECK(map.grad()(3, c) == 0.0);  // aux cell untouched in the map
      CHECK(map.grad()(0, c) == 0.0);
      CHECK(map.grad()(2, c) == 0.0);
      CHECK(map.grad()(4, c) == 0.0);
    }
    double gt_row_norm = 0.0;
    for (int c = 0; c < dim; ++c) gt_row_norm += std::abs(map.grad()(1, c));
    CHECK(gt_row_norm > 0.0);
  }

  SUBCASE("adding an aux sentence strictly increases v2s") {
    for (int rep = 0; rep < 20; ++rep) {
      ContrastiveBatch batch = random_batch(rng, 3, 2, 8);
      const double before = accl_v2s(batch, 0.1).value()(0, 0);
      batch.aux_sentences.push_back(unit_row(rng, 8));
      batch.aux_owner.push_back(0);
      const double after = accl_v2s(batch, 0.1).value()(0, 0);
      CHECK(after > before);
    }
  }

  SUBCASE("with no aux captions accl equals symmetric InfoNCE") {
    for (int rep = 0; rep < 10; ++rep) {
      ContrastiveBatch batch = random_batch(rng, 4, 0, 8);
      LossWeights w;
      std::vector<Matrix> moments, sentences;
      for (const auto& v : batch.gt_moments) moments.push_back(v.value());
      for (const auto& s : batch.gt_sentences) sentences.push_back(s.value());
      const double expected = w.lambda_v * oracle_nce(moments, sentences, w.tau_v) +
                              w.lambda_s * oracle_nce(sentences, moments, w.tau_s);
      CHECK(std::abs(accl(batch, w).value()(0, 0) - expected) < 1e-12);
    }
  }
}

TEST_CASE("vanilla objective treats aux pairs as positives") {
  Rng rng(89);
  ContrastiveBatch batch = random_batch(rng, 2, 2, 6, /*with_aux_moments=*/true);
  LossWeights w;

  std::vector<Matrix> moments, sentences;
  for (const auto& v : batch.gt_moments) moments.push_back(v.value());
  for (const auto& v : batch.aux_moments) moments.push_back(v.value());
  for (const auto& s : batch.gt_sentences) sentences.push_back(s.value());
  for (const auto& s : batch.aux_sentences) sentences.push_back(s.value());
  const double expected = w.lambda_v * oracle_nce(moments, sentences, w.tau_v) +
                          w.lambda_s * oracle_nce(sentences, moments, w.tau_s);
  CHECK(vanilla_nce(batch, w).value()(0, 0) == doctest::Approx(expected).epsilon(1e-12));

  // unlike accl, the aux moments now receive gradient
  ad::Var loss = vanilla_nce(batch, w);
  ad::backward(loss);
  double aux_grad = 0.0;
  for (const auto& v : batch.aux_moments) {
    for (int c = 0; c < 6; ++c) aux_grad += std::abs(v.grad()(0, c));
  }
  CHECK(aux_grad > 0.0);
}

TEST_CASE("regression loss") {
  SUBCASE("perfect hard predictions cost nearly nothing") {
    Matrix labels = Matrix::from_rows({{1}, {0}, {1}, {0}});
    Matrix valid = Matrix::from_rows({{1}, {1}, {1}, {1}});
    ad::Var pred = ad::Var::leaf(labels);
    CHECK(regression_loss(pred, labels, valid).value()(0, 0) <= 1e-6);
  }

  SUBCASE("single uncertain cell costs log 2") {
    Matrix labels = Matrix::from_rows({{1}});
    Matrix valid = Matrix::from_rows({{1}});
    ad::Var pred = ad::Var::leaf(Matrix::from_rows({{0.5}}));
    CHECK(regression_loss(pred, labels, valid).value()(0, 0) ==
          doctest::Approx(0.6931).epsilon(1e-4));
  }

  SUBCASE("matches a per-cell oracle with a mask") {
    Rng rng(97);
    const int n = 8, cells = n * n;
    Matrix labels(cells, 1);
    Matrix valid(cells, 1);
    Matrix p(cells, 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int cell = i * n + j;
        valid(cell, 0) = i <= j ? 1.0 : 0.0;
        labels(cell, 0) = valid(cell, 0) != 0.0 ? rng.uniform() : 0.0;
        p(cell, 0) = valid(cell, 0) != 0.0 ? rng.uniform(0.01, 0.99) : 0.0;
      }
    }
    double expected = 0.0;
    int count = 0;
    for (int cell = 0; cell < cells; ++cell) {
      if (valid(cell, 0) == 0.0) continue;
      expected -= labels(cell, 0) * std::log(p(cell, 0)) +
                  (1.0 - labels(cell, 0)) * std::log(1.0 - p(cell, 0));
      ++count;
    }
    expected /= count;
    ad::Var pred = ad::Var::leaf(p);
    CHECK(regression_loss(pred, labels, valid).value()(0, 0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("permutation invariant over cells") {
    Rng rng(101);
    const int cells = 12;
    Matrix labels(cells, 1), valid(cells, 1), p(cells, 1);
    for (int i = 0; i < cells; ++i) {
      valid(i, 0) = i % 3 == 0 ? 0.0 : 1.0;
      labels(i, 0) = rng.uniform();
      p(i, 0) = rng.uniform(0.05, 0.95);
    }
    const double base =
        regression_loss(ad::Var::leaf(p), labels, valid).value()(0, 0);

    std::vector<int> perm(cells);
    for (int i = 0; i < cells; ++i) perm[i] = i;
    rng.shuffle(perm);
    Matrix labels2(cells, 1), valid2(cells, 1), p2(cells, 1);
    for (int i = 0; i < cells; ++i) {
      labels2(i, 0) = labels(perm[i], 0);
      valid2(i, 0) = valid(perm[i], 0);
      p2(i, 0) = p(perm[i], 0);
    }
    const double permuted =
        regression_loss(ad::Var::leaf(p2), labels2, valid2).value()(0, 0);
    CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("total loss composition") {
  ad::Var l_c = ad::Var::leaf(Matrix::from_rows({{0.8}}));
  ad::Var l_r = ad::Var::leaf(Matrix::from_rows({{0.3}}));
  LossWeights w;

  w.lambda_c = 0.0;
  w.lambda_r = 1.0;
  CHECK(total_loss(l_c, l_r, w).value()(0, 0) == doctest::Approx(0.3));
  w.lambda_c = 1.0;
  w.lambda_r = 0.0;
  CHECK(total_loss(l_c, l_r, w).value()(0, 0) == doctest::Approx(0.8));
  w.lambda_c = 0.05;
  w.lambda_r = 1.0;
  CHECK(total_loss(l_c, l_r, w).value()(0, 0) == doctest::Approx(0.05 * 0.8 + 0.3));
}
