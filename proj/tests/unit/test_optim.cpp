// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "tarn/episodic.hpp"
#include "tarn/errors.hpp"
#include "tarn/gradcheck.hpp"
#include "tarn/optim.hpp"

using namespace tarn;

TEST(Optim, SgdMomentumRecurrence) {
  OptimizerConfig cfg;
  Matrix p(1, 1, 1.0), g(1, 1, 0.5);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  OptimizerState state;
  // v1 = 0.5, p = 1 - 0.1*0.5; v2 = 0.9*0.5 + 0.5 = 0.95, p -= 0.1*0.95
  optimizer_step(cfg, ps, gs, state, 0.1);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.95);
  optimizer_step(cfg, ps, gs, state, 0.1);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.95 - 0.095);
  EXPECT_DOUBLE_EQ(state.first[0](0, 0), 0.95);
}

TEST(Optim, AdamFirstStepMovesByLearningRate) {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kAdam;
  Matrix p = Matrix::from_rows({{1.0, -2.0}}), g = Matrix::from_rows({{3.0, -0.01}});
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  OptimizerState state;
  optimizer_step(cfg, ps, gs, state, 1e-3);
  // m^ = g, v^ = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(p(0, 0), 1.0 - 1e-3 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p(0, 1), -2.0 + 1e-3 * 0.01 / (0.01 + 1e-8), 1e-15);

  // Second step against a hand-computed recurrence.
  const Matrix g2 = Matrix::from_rows({{-1.0, 0.5}});
  gs[0] = &g2;
  const double before = p(0, 0);
  optimizer_step(cfg, ps, gs, state, 1e-3);
  const double m = 0.9 * (0.1 * 3.0) + 0.1 * -1.0, v = 0.999 * (0.001 * 9.0) + 0.001 * 1.0;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p(0, 0), before - 1e-3 * mh / (std::sqrt(vh) + 1e-8), 1e-15);
}

TEST(Optim, StepRejectsShapeMismatch) {
  Matrix p(2, 2), g(2, 3);
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  OptimizerState state;
  EXPECT_THROW(optimizer_step({}, ps, gs, state, 0.1), ShapeError);
}

TEST(Optim, GlobalNormClipping) {
  ParameterSet params;
  auto a = params.add("a", Matrix(1, 2));
  auto b = params.add("b", Matrix(1, 2));
  a.mutable_grad() = Matrix::from_rows({{1.0, 1.0}});
  b.mutable_grad() = Matrix::from_rows({{1.0, -1.0}});
  EXPECT_DOUBLE_EQ(params.grad_norm(), 2.0);
  EXPECT_DOUBLE_EQ(clip_grad_global_norm(params, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(a.grad()(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(b.grad()(0, 1), -0.25);

  b.mutable_grad() = Matrix::from_rows({{0.1, 0.0}});
  a.zero_grad();
  clip_grad_global_norm(params, 0.5);
  EXPECT_EQ(b.grad()(0, 0), 0.1);
}

TEST(Optim, ScheduleSwitchesAtBreakpoint) {
  const LrSchedule s = TrainConfig::fsl_defaults().schedule;
  EXPECT_EQ(s.at(1), 1e-3);
  EXPECT_EQ(s.at(10000), 1e-3);
  EXPECT_EQ(s.at(10001), 1e-4);
  EXPECT_EQ(s.at(20000), 1e-4);
  EXPECT_THROW(LrSchedule({{2, 1e-3}}), SpecError);
  EXPECT_THROW(LrSchedule({{1, 1e-3}, {1, 1e-4}}), SpecError);
  EXPECT_THROW(LrSchedule({{1, -1.0}}), SpecError);
  EXPECT_EQ(parse_optimizer("sgd"), OptimizerKind::kSgdMomentum);
  EXPECT_THROW(parse_optimizer("rmsprop"), SpecError);
}

TEST(Optim, ProtocolDefaults) {
  const auto fsl = TrainConfig::fsl_defaults();
  EXPECT_EQ(fsl.optimizer.kind, OptimizerKind::kSgdMomentum);
  EXPECT_EQ(fsl.optimizer.momentum, 0.9);
  EXPECT_EQ(fsl.train_episodes, 20000u);
  EXPECT_EQ(fsl.val_episodes, 500u);
  EXPECT_FALSE(fsl.grad_clip.has_value());
  const auto zsl = TrainConfig::zsl_defaults();
  EXPECT_EQ(zsl.optimizer.kind, OptimizerKind::kAdam);
  EXPECT_EQ(zsl.schedule.at(1), 1e-4);
  EXPECT_EQ(zsl.grad_clip, 0.5);
  EXPECT_EQ(zsl.train_episodes, 3000u);
  EXPECT_EQ(zsl.test_episodes, 100u);
}

TEST(Gradcheck, RelativeErrorIsTensorLevel) {
  const Matrix a = Matrix::from_rows({{1.0, 1e-9}});
  const Matrix n = Matrix::from_rows({{1.0, 2e-9}});
  EXPECT_NEAR(relative_error(a, n), 1e-9, 1e-20);
  // Below the floor both sides count as round-off.
  EXPECT_NEAR(relative_error(Matrix(1, 1, 1e-12), Matrix(1, 1, -1e-11)), 1.1e-5, 1e-12);
  EXPECT_EQ(relative_error(Matrix(1, 2), Matrix(1, 2)), 0.0);
  EXPECT_THROW(relative_error(Matrix(1, 2), Matrix(2, 1)), ShapeError);
}

TEST(Gradcheck, DetectsCorruptedGradient) {
  ParameterSet params;
  auto w = params.add("w", Matrix::from_rows({{0.3, -0.7}}));
  auto loss = [&] { return ad::sum(ad::square(w)); };
  EXPECT_TRUE(gradcheck(params, loss).passed());
  const auto bad = gradcheck(params, loss, 1e-5, 1e-4, [](ParameterSet& p) {
    for (double& g : p.entries()[0].var.mutable_grad().data()) g = 1.5 * g + 1e-3;
  });
  EXPECT_FALSE(bad.passed());
  EXPECT_GT(bad.worst(), 0.1);
}
