// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "tarn/recurrent.hpp"

namespace tarn {

/// Bidirectional GRU over per-segment features; output width 2 * hidden.
struct VisualEmbedder {
  GruParams forward;
  GruParams backward;

  static VisualEmbedder create(ParameterSet& params, const std::string& prefix,
                               std::size_t input_size, std::size_t hidden_size, Init init,
                               Rng& rng);
  std::size_t input_size() const noexcept { return forward.input_size; }
  std::size_t output_size() const noexcept { return 2 * forward.hidden_size; }

  /// features: N x d_in -> N x 2h.
  ad::Var embed(const ad::Var& features) const;
};

/// Unidirectional GRU summarising a whole video in its last state.
struct SingleVectorEmbedder {
  GruParams gru;

  static SingleVectorEmbedder create(ParameterSet& params, const std::string& prefix,
                                     std::size_t input_size, std::size_t hidden_size, Init init,
                                     Rng& rng);
  std::size_t output_size() const noexcept { return gru.hidden_size; }

  /// features: N x d_in -> 1 x h.
  ad::Var embed(const ad::Var& features) const;
};

/// Two stacked FC layers: relu(v W1 + b1) W2 + b2.
struct SemanticEmbedder {
  ad::Var W1, b1, W2, b2;

  static SemanticEmbedder create(ParameterSet& params, const std::string& prefix,
                                 std::size_t semantic_size, std::size_t hidden_size,
                                 std::size_t output_size, Init init, Rng& rng);
  std::size_t input_size() const { return W1.rows(); }
  std::size_t output_size() const { return W2.cols(); }

  /// vec: 1 x d_sem -> 1 x d.
  ad::Var embed(const ad::Var& vec) const;
};

}  // namespace tarn
