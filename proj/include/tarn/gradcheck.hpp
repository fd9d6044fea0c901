// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tarn/autodiff.hpp"
#include "tarn/params.hpp"

namespace tarn {

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  double threshold = 1e-4;
  std::vector<TensorCheck> tensors;

  bool passed() const;
  double worst() const;
};

/// Tensor-level relative error: max_i |a_i - n_i| / max(max|a|, max|n|, 1e-6).
/// The floor sits above central-difference round-off, so a tensor whose true
/// gradient is zero compares as zero rather than as noise over noise.
double relative_error(const Matrix& analytic, const Matrix& numeric);

/// Central differences d = (L(p + h) - L(p - h)) / 2h of a scalar loss.
Matrix numeric_gradient(const std::function<double()>& loss, Matrix& param, double h = 1e-5);

/// Replaces every all-zero tensor (the zero-initialised biases) with small
/// Gaussian values. At zero bias a tiny model can park ReLU pre-activations
/// exactly on the kink, where central differences and the subgradient disagree.
void perturb_zero_tensors(ParameterSet& params, std::uint64_t seed, double scale = 0.1);

/// Compares backward() against central differences for every tensor in
/// `params`. `loss` must rebuild the graph on each call. `after_backward`
/// runs between backward() and the comparison (fault injection in tests).
GradcheckReport gradcheck(ParameterSet& params, const std::function<ad::Var()>& loss,
                          double h = 1e-5, double threshold = 1e-4,
                          const std::function<void(ParameterSet&)>& after_backward = {});

}  // namespace tarn
