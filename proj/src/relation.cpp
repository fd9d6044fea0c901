// SPDX-License-Identifier: Apache-2.0
#include "tarn/relation.hpp"

#include <algorithm>
#include <cmath>

#include "tarn/errors.hpp"

namespace tarn {

FslHead FslHead::create(ParameterSet& params, const std::string& prefix, std::size_t input_width,
                        std::size_t hidden_size, Init init, Rng& rng) {
  FslHead h;
  h.gru = GruParams::create(params, prefix + ".gru", input_width, hidden_size, init, rng);
  h.fc_w = params.add(prefix + ".fc_w", init_matrix(hidden_size, 1, init, rng));
  h.fc_b = params.add(prefix + ".fc_b", Matrix(1, 1));
  return h;
}

ad::Var FslHead::score(const ad::Var& cmp) const {
  using namespace ad;
  return add(matmul(run_unidirectional(cmp, gru).last, fc_w), fc_b);
}

PooledMlpHead PooledMlpHead::create(ParameterSet& params, const std::string& prefix,
                                    std::size_t input_width, std::size_t hidden_size, Init init,
                                    Rng& rng) {
  PooledMlpHead h;
  h.W1 = params.add(prefix + ".W1", init_matrix(input_width, hidden_size, init, rng));
  h.b1 = params.add(prefix + ".b1", Matrix(1, hidden_size));
  h.W2 = params.add(prefix + ".W2", init_matrix(hidden_size, 1, init, rng));
  h.b2 = params.add(prefix + ".b2", Matrix(1, 1));
  return h;
}

ad::Var PooledMlpHead::segment_scores(const ad::Var& cmp) const {
  using namespace ad;
  if (cmp.cols() != W1.rows()) {
    throw ShapeError("relation head: comparison width " + std::to_string(cmp.cols()) +
                     " does not match head input " + std::to_string(W1.rows()));
  }
  return add_row_bias(matmul(relu(add_row_bias(matmul(cmp, W1), b1)), W2), b2);
}

ad::Var PooledMlpHead::score(const ad::Var& cmp) const { return ad::row_mean(segment_scores(cmp)); }

RelationScores aggregate_and_predict(const Matrix& raw) {
  if (raw.rows() < 2 || raw.cols() < 1) {
    throw ContractError("aggregate_and_predict: need C >= 2 and K >= 1, got " + raw.shape_string());
  }
  const std::size_t classes = raw.rows(), shots = raw.cols();
  RelationScores out;
  out.raw = raw;
  out.train_probs = Matrix(classes, shots);
  out.class_scores.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    double total = 0.0;
    for (std::size_t k = 0; k < shots; ++k) {
      total += raw(c, k);
      const double x = raw(c, k);
      out.train_probs(c, k) = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    out.class_scores[c] = total / static_cast<double>(shots);
  }
  const double mx = *std::max_element(out.class_scores.begin(), out.class_scores.end());
  out.class_probs.resize(classes);
  double z = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    out.class_probs[c] = std::exp(out.class_scores[c] - mx);
    z += out.class_probs[c];
  }
  for (double& p : out.class_probs) p /= z;
  out.predicted = static_cast<std::size_t>(
      std::max_element(out.class_scores.begin(), out.class_scores.end()) - out.class_scores.begin());
  return out;
}

}  // namespace tarn
