// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "support/convert.hpp"
#include "support/finite_diff.hpp"
#include "tarn/attention.hpp"
#include "tarn/errors.hpp"

using namespace tarn;

namespace {

struct AttentionFixture : ::testing::Test {
  ParameterSet params;
  Rng rng{21};
  std::mt19937_64 data_rng{22};
  AttentionParams p = AttentionParams::create(params, "att", 5, Init::kGlorot, rng);

  void SetUp() override { p.b.mutable_value() = oracle::random_matrix(1, 5, data_rng); }
};

}  // namespace

TEST_F(AttentionFixture, MatchesOracle) {
  const Matrix S = oracle::random_matrix(4, 5, data_rng, 2.0), Q = oracle::random_matrix(3, 5, data_rng, 2.0);
  const auto ref = oracle::attention(oracle::from(S), oracle::from(Q), oracle::from(p.W.value()),
                                     oracle::row0(p.b.value()));
  const Alignment a = align(ad::constant(S), ad::constant(Q), p);
  EXPECT_LE(oracle::max_abs_diff(attention_logits(ad::constant(S), ad::constant(Q), p).value(), ref.logits), 1e-13);
  EXPECT_LE(oracle::max_abs_diff(a.weights.value(), ref.weights), 1e-14);
  EXPECT_LE(oracle::max_abs_diff(a.aligned.value(), ref.aligned), 1e-13);
}

TEST_F(AttentionFixture, SingleSampleSegmentIsCopiedToEveryQueryRow) {
  const Matrix S = oracle::random_matrix(1, 5, data_rng), Q = oracle::random_matrix(4, 5, data_rng);
  const Alignment a = align(ad::constant(S), ad::constant(Q), p);
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_EQ(a.weights.value()(0, m), 1.0);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(a.aligned.value()(m, k), S(0, k));
  }
}

TEST_F(AttentionFixture, ColumnsAreDistributionsAndRowsAreConvex) {
  const Matrix S = oracle::random_matrix(6, 5, data_rng, 3.0), Q = oracle::random_matrix(2, 5, data_rng, 3.0);
  const Alignment a = align(ad::constant(S), ad::constant(Q), p);
  for (std::size_t m = 0; m < 2; ++m) {
    double total = 0.0;
    for (std::size_t n = 0; n < 6; ++n) {
      EXPECT_GE(a.weights.value()(n, m), 0.0);
      total += a.weights.value()(n, m);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t k = 0; k < 5; ++k) {
      double lo = S(0, k), hi = S(0, k);
      for (std::size_t n = 1; n < 6; ++n) lo = std::min(lo, S(n, k)), hi = std::max(hi, S(n, k));
      EXPECT_GE(a.aligned.value()(m, k), lo - 1e-12);
      EXPECT_LE(a.aligned.value()(m, k), hi + 1e-12);
    }
  }
}

TEST_F(AttentionFixture, PermutingSampleRowsLeavesAlignmentUnchanged) {
  const Matrix S = oracle::random_matrix(4, 5, data_rng), Q = oracle::random_matrix(3, 5, data_rng);
  Matrix shuffled = S;
  const std::size_t order[] = {2, 0, 3, 1};
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t k = 0; k < 5; ++k) shuffled(n, k) = S(order[n], k);
  const Matrix a = align(ad::constant(S), ad::constant(Q), p).aligned.value();
  const Matrix b = align(ad::constant(shuffled), ad::constant(Q), p).aligned.value();
  EXPECT_LE(oracle::max_abs_diff(a, oracle::from(b)), 1e-13);
}

TEST_F(AttentionFixture, ShapeErrors) {
  EXPECT_THROW(align(ad::constant(Matrix(3, 4)), ad::constant(Matrix(2, 5)), p), ShapeError);
  EXPECT_THROW(align(ad::constant(Matrix(3, 5)), ad::constant(Matrix(2, 4)), p), ShapeError);
}

TEST_F(AttentionFixture, GradientsMatchFiniteDifferences) {
  const Matrix S = oracle::random_matrix(3, 5, data_rng), Q = oracle::random_matrix(2, 5, data_rng);
  const Matrix W = p.W.value(), b = p.b.value();
  EXPECT_LT(fd::max_gradient_error({S, Q, W, b}, [](const std::vector<ad::Var>& v) {
              AttentionParams q{v[2], v[3]};
              return fd::weighted_sum(align(v[0], v[1], q).aligned);
            }),
            1e-7);
}
