// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/finite_diff.hpp"
#include "support/oracles.hpp"
#include "tarn/autodiff.hpp"
#include "tarn/errors.hpp"

using namespace tarn;
using ad::Var;
using Leaves = std::vector<Var>;

namespace {

constexpr double kGradTol = 1e-7;

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

}  // namespace

TEST(Matrix, RejectsZeroDimsAndBadLength) {
  EXPECT_THROW(Matrix(0, 3), ShapeError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.transposed()(2, 1), 6.0);
  EXPECT_EQ(m.shape_string(), "[2x3]");
}

TEST(Autodiff, MatmulMatchesTripleLoop) {
  auto rng = rng_for(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + trial % 4, k = 1 + trial % 5, n = 1 + trial % 3;
    const Matrix a = oracle::random_matrix(m, k, rng), b = oracle::random_matrix(k, n, rng);
    const Var y = ad::matmul(ad::constant(a), ad::constant(b));
    EXPECT_LE(oracle::max_abs_diff(y.value(), oracle::matmul(oracle::from(a), oracle::from(b))), 1e-14);
  }
}

TEST(Autodiff, MatmulShapeMismatchThrows) {
  EXPECT_THROW(ad::matmul(ad::constant(Matrix(2, 3)), ad::constant(Matrix(2, 3))), ShapeError);
  EXPECT_THROW(ad::add(ad::constant(Matrix(2, 3)), ad::constant(Matrix(3, 2))), ShapeError);
}

TEST(Autodiff, ElementwiseGradients) {
  auto rng = rng_for(2);
  const Matrix a = oracle::random_matrix(3, 4, rng), b = oracle::random_matrix(3, 4, rng);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::add(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::sub(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::mul(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::scale(v[0], -2.5)); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::sigmoid(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::tanh(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::square(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::relu(v[0])); }), kGradTol);
}

TEST(Autodiff, LinearAlgebraAndReductionGradients) {
  auto rng = rng_for(3);
  const Matrix a = oracle::random_matrix(3, 4, rng), b = oracle::random_matrix(4, 2, rng);
  const Matrix bias = oracle::random_matrix(1, 4, rng);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::matmul(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::transpose(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, bias}, [](const Leaves& v) { return fd::weighted_sum(ad::add_row_bias(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::row_mean(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::col_mean(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::softmax_cols(v[0])); }), kGradTol);
}

TEST(Autodiff, StructuralGradients) {
  auto rng = rng_for(4);
  const Matrix a = oracle::random_matrix(3, 2, rng), b = oracle::random_matrix(2, 2, rng);
  const Matrix c = oracle::random_matrix(3, 5, rng);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::row(v[0], 1)); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a}, [](const Leaves& v) { return fd::weighted_sum(ad::reverse_rows(v[0])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::concat_rows(v)); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, c}, [](const Leaves& v) { return fd::weighted_sum(ad::concat_cols(v)); }), kGradTol);
}

TEST(Autodiff, DistanceAndCosineGradients) {
  auto rng = rng_for(5);
  const Matrix a = oracle::random_matrix(3, 4, rng), b = oracle::random_matrix(3, 4, rng);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::l2_distance_rows(v[0], v[1])); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({a, b}, [](const Leaves& v) { return fd::weighted_sum(ad::cosine_rows(v[0], v[1])); }), kGradTol);
  const Matrix p = a.row_copy(0), q = b.row_copy(2);
  EXPECT_LT(fd::max_gradient_error({p, q}, [](const Leaves& v) { return ad::l2_norm_rowpair(v[0], v[1]); }), kGradTol);
  EXPECT_LT(fd::max_gradient_error({p, q}, [](const Leaves& v) { return ad::cosine_rowpair(v[0], v[1]); }), kGradTol);
}

TEST(Autodiff, BinaryCrossEntropyGradient) {
  const Matrix logits = Matrix::from_rows({{0.3, -1.2}, {2.0, 0.1}});
  const Matrix targets = Matrix::from_rows({{1, 0}, {0, 0}});
  EXPECT_LT(fd::max_gradient_error({logits}, [&](const Leaves& v) {
              return ad::binary_cross_entropy(ad::sigmoid(v[0]), targets);
            }),
            kGradTol);
}

TEST(Autodiff, SoftmaxHandValues) {
  const Var y = ad::softmax_cols(ad::constant(Matrix::from_rows({{0.0, 1000.0}, {std::log(3.0), 1000.0}})));
  EXPECT_NEAR(y.value()(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(y.value()(1, 0), 0.75, 1e-15);
  EXPECT_NEAR(y.value()(0, 1), 0.5, 1e-15);
  EXPECT_TRUE(y.value().all_finite());
}

TEST(Autodiff, SigmoidIsStableForLargeInputs) {
  const Var y = ad::sigmoid(ad::constant(Matrix::from_rows({{-800.0, 800.0}})));
  EXPECT_EQ(y.value()(0, 0), 0.0);
  EXPECT_EQ(y.value()(0, 1), 1.0);
}

TEST(Autodiff, ReluSubgradientAtZeroIsZero) {
  Var x = ad::parameter(Matrix::from_rows({{0.0, 2.0, -1.0}}));
  ad::backward(ad::sum(ad::relu(x)));
  EXPECT_EQ(x.grad()(0, 0), 0.0);
  EXPECT_EQ(x.grad()(0, 1), 1.0);
  EXPECT_EQ(x.grad()(0, 2), 0.0);
}

TEST(Autodiff, DistanceGradientVanishesAtEquality) {
  Var a = ad::parameter(Matrix::from_rows({{1.0, -2.0}}));
  Var b = ad::parameter(Matrix::from_rows({{1.0, -2.0}}));
  const Var d = ad::l2_distance_rows(a, b);
  EXPECT_EQ(d.item(), 0.0);
  ad::backward(ad::sum(d));
  for (double g : a.grad().data()) EXPECT_EQ(g, 0.0);
  for (double g : b.grad().data()) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, CosineWithZeroVectorIsZero) {
  Var a = ad::parameter(Matrix(1, 3));
  Var b = ad::parameter(Matrix::from_rows({{1.0, 2.0, 3.0}}));
  const Var c = ad::cosine_rows(a, b);
  EXPECT_EQ(c.item(), 0.0);
  ad::backward(ad::sum(c));
  for (double g : a.grad().data()) EXPECT_TRUE(std::isfinite(g));
}

TEST(Autodiff, BceClampsLogArgument) {
  const Var loss = ad::binary_cross_entropy(ad::constant(Matrix::from_rows({{0.0}})), Matrix::from_rows({{1.0}}));
  EXPECT_NEAR(loss.item(), -std::log(1e-12), 1e-9);
}

TEST(Autodiff, SharedSubexpressionAccumulates) {
  Var x = ad::parameter(Matrix::from_rows({{3.0}}));
  const Var y = ad::mul(x, x);  // d/dx = 2x
  ad::backward(ad::add(y, x));  // + 1
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 7.0);
}

TEST(Autodiff, GradientsAccumulateAcrossBackwardCalls) {
  Var x = ad::parameter(Matrix::from_rows({{1.0, 2.0}}));
  ad::backward(ad::sum(x));
  ad::backward(ad::sum(x));
  EXPECT_EQ(x.grad()(0, 1), 2.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()(0, 1), 0.0);
}

TEST(Autodiff, BackwardRequiresScalar) {
  Var x = ad::parameter(Matrix(2, 2, 1.0));
  EXPECT_THROW(ad::backward(x), ContractError);
}

TEST(Autodiff, NoGradGuardSkipsGraph) {
  Var x = ad::parameter(Matrix(1, 1, 2.0));
  {
    ad::NoGradGuard guard;
    EXPECT_FALSE(ad::grad_enabled());
    const Var y = ad::mul(x, x);
    EXPECT_TRUE(y.node()->parents.empty());
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(ad::grad_enabled());
}

TEST(Autodiff, DeepChainDoesNotOverflowStack) {
  Var x = ad::parameter(Matrix(1, 1, 0.5));
  Var y = x;
  for (int i = 0; i < 50000; ++i) y = ad::scale(y, 1.0);
  ad::backward(y);
  EXPECT_EQ(x.grad()(0, 0), 1.0);
}
