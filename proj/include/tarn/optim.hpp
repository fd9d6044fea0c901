// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tarn/params.hpp"

namespace tarn {

enum class OptimizerKind { kSgdMomentum, kAdam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-tensor optimizer state. SGD uses `first` as the velocity.
struct OptimizerState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::size_t step = 0;
};

/// One in-place update.
///   SGD-momentum: v <- m v + g;  p <- p - lr v
///   Adam: bias-corrected first/second moments, p <- p - lr m^ / (sqrt(v^) + eps)
/// State is lazily sized on the first call. Throws ShapeError on mismatch.
void optimizer_step(const OptimizerConfig& config, std::span<Matrix* const> params,
                    std::span<const Matrix* const> grads, OptimizerState& state, double lr);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  /// Applies one step using the gradients currently stored on `params`.
  void step(ParameterSet& params, double lr);

  const OptimizerState& state() const noexcept { return state_; }
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  OptimizerState state_;
};

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Gradients already within the bound are left untouched. Returns the norm
/// before clipping.
double clip_grad_global_norm(ParameterSet& params, double max_norm);

/// Piecewise-constant learning rate keyed by 1-based episode index.
class LrSchedule {
 public:
  LrSchedule() = default;
  /// Each pair is (first episode, lr); sorted by first episode, the first must be 1.
  explicit LrSchedule(std::vector<std::pair<std::size_t, double>> breakpoints);
  static LrSchedule constant(double lr) { return LrSchedule({{1, lr}}); }

  double at(std::size_t episode) const;
  const std::vector<std::pair<std::size_t, double>>& breakpoints() const noexcept { return points_; }

 private:
  std::vector<std::pair<std::size_t, double>> points_{{1, 1e-3}};
};

}  // namespace tarn
