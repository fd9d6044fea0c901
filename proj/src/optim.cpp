// SPDX-License-Identifier: Apache-2.0
#include "tarn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "tarn/errors.hpp"

namespace tarn {

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::kSgdMomentum ? "sgd_momentum" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd_momentum" || name == "sgd") return OptimizerKind::kSgdMomentum;
  if (name == "adam") return OptimizerKind::kAdam;
  throw SpecError("unknown optimizer: " + std::string(name));
}

void optimizer_step(const OptimizerConfig& config, std::span<Matrix* const> params,
                    std::span<const Matrix* const> grads, OptimizerState& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (state.first.empty()) {
    for (const Matrix* p : params) {
      state.first.emplace_back(p->rows(), p->cols());
      if (config.kind == OptimizerKind::kAdam) state.second.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first.size() != params.size()) {
    throw ShapeError("optimizer_step: state holds " + std::to_string(state.first.size()) +
                     " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !params[i]->same_shape(state.first[i])) {
      throw ShapeError("optimizer_step: tensor " + std::to_string(i) + " parameter " +
                       params[i]->shape_string() + " gradient " + grads[i]->shape_string() +
                       " state " + state.first[i].shape_string());
    }
  }
  ++state.step;

  if (config.kind == OptimizerKind::kSgdMomentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      auto g = grads[i]->data();
      auto v = state.first[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        v[j] = config.momentum * v[j] + g[j];
        p[j] -= lr * v[j];
      }
    }
    return;
  }

  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void Optimizer::step(ParameterSet& params, double lr) {
  std::vector<Matrix*> values;
  std::vector<const Matrix*> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (auto& e : params.entries()) {
    values.push_back(&e.var.mutable_value());
    grads.push_back(&e.var.mutable_grad());
  }
  optimizer_step(config_, values, grads, state_, lr);
}

double clip_grad_global_norm(ParameterSet& params, double max_norm) {
  const double norm = params.grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& e : params.entries()) {
      if (!e.var.has_grad()) continue;
      for (double& g : e.var.mutable_grad().data()) g *= factor;
    }
  }
  return norm;
}

LrSchedule::LrSchedule(std::vector<std::pair<std::size_t, double>> breakpoints)
    : points_(std::move(breakpoints)) {
  if (points_.empty() || points_.front().first != 1) {
    throw SpecError("learning-rate schedule must start at episode 1");
  }
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].first <= points_[i - 1].first) {
      throw SpecError("learning-rate schedule breakpoints must be strictly increasing");
    }
  }
  for (const auto& [ep, lr] : points_) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw SpecError("learning rates must be finite and >= 0");
  }
}

double LrSchedule::at(std::size_t episode) const {
  double lr = points_.front().second;
  for (const auto& [start, value] : points_) {
    if (episode >= start) lr = value;
  }
  return lr;
}

}  // namespace tarn
