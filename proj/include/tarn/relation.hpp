// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "tarn/recurrent.hpp"

namespace tarn {

/// Few-shot head: unidirectional GRU over the M comparison rows, then a
/// single-neuron FC on the last state.
struct FslHead {
  GruParams gru;
  ad::Var fc_w;  // h x 1
  ad::Var fc_b;  // 1 x 1

  static FslHead create(ParameterSet& params, const std::string& prefix, std::size_t input_width,
                        std::size_t hidden_size, Init init, Rng& rng);
  /// cmp: M x w -> 1 x 1.
  ad::Var score(const ad::Var& cmp) const;
};

/// Per-segment MLP (FC + relu, FC to a scalar) followed by mean pooling over
/// segments. Used by the zero-shot head and by the single-comparison ablation.
struct PooledMlpHead {
  ad::Var W1, b1;  // w x hidden, 1 x hidden
  ad::Var W2, b2;  // hidden x 1, 1 x 1

  static PooledMlpHead create(ParameterSet& params, const std::string& prefix,
                              std::size_t input_width, std::size_t hidden_size, Init init,
                              Rng& rng);
  /// Per-segment scores: M x w -> M x 1.
  ad::Var segment_scores(const ad::Var& cmp) const;
  /// cmp: M x w -> 1 x 1, mean of the per-segment scores.
  ad::Var score(const ad::Var& cmp) const;
};

using ZslHead = PooledMlpHead;

/// Per-episode scores for one query.
struct RelationScores {
  Matrix raw;                       // C x K pair scores
  std::vector<double> class_scores;  // shot-averaged raw, length C
  Matrix train_probs;               // sigmoid(raw), C x K
  std::vector<double> class_probs;   // softmax(class_scores)
  std::size_t predicted = 0;        // argmax, lowest index on ties
};

/// Requires C >= 2 and K >= 1.
RelationScores aggregate_and_predict(const Matrix& raw);

}  // namespace tarn
