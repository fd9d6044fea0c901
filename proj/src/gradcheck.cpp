// SPDX-License-Identifier: Apache-2.0
#include "tarn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tarn/errors.hpp"

namespace tarn {

bool GradcheckReport::passed() const {
  return std::all_of(tensors.begin(), tensors.end(), [](const TensorCheck& t) { return t.passed; });
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& t : tensors) w = std::max(w, t.max_relative_error);
  return w;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("relative_error: " + analytic.shape_string() + " vs " + numeric.shape_string());
  }
  double diff = 0.0, scale = 1e-6;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i], n = numeric.data()[i];
    diff = std::max(diff, std::abs(a - n));
    scale = std::max({scale, std::abs(a), std::abs(n)});
  }
  return diff / scale;
}

Matrix numeric_gradient(const std::function<double()>& loss, Matrix& param, double h) {
  Matrix out(param.rows(), param.cols());
  for (std::size_t i = 0; i < param.size(); ++i) {
    double& p = param.data()[i];
    const double saved = p;
    p = saved + h;
    const double plus = loss();
    p = saved - h;
    const double minus = loss();
    p = saved;
    out.data()[i] = (plus - minus) / (2.0 * h);
  }
  return out;
}

void perturb_zero_tensors(ParameterSet& params, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, scale);
  for (auto& e : params.entries()) {
    auto data = e.var.mutable_value().data();
    if (std::any_of(data.begin(), data.end(), [](double v) { return v != 0.0; })) continue;
    for (double& v : data) v = noise(rng);
  }
}

GradcheckReport gradcheck(ParameterSet& params, const std::function<ad::Var()>& loss, double h,
                          double threshold, const std::function<void(ParameterSet&)>& after_backward) {
  params.zero_grad();
  {
    ad::Var l = loss();
    ad::backward(l);
  }
  if (after_backward) after_backward(params);

  GradcheckReport report;
  report.threshold = threshold;
  auto scalar_loss = [&] {
    ad::NoGradGuard no_grad;
    return loss().item();
  };
  for (auto& e : params.entries()) {
    const Matrix analytic = e.var.has_grad() ? e.var.grad() : Matrix(e.var.rows(), e.var.cols());
    const Matrix numeric = numeric_gradient(scalar_loss, e.var.mutable_value(), h);
    const double err = relative_error(analytic, numeric);
    report.tensors.push_back({e.name, err, err < threshold});
  }
  return report;
}

}  // namespace tarn
