// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "tarn/autodiff.hpp"
#include "tarn/params.hpp"

namespace tarn {

/// GRU weights. Row-vector convention: x[1 x d_in] * Wz[d_in x h].
///
///   z  = sigmoid(x Wz + h_prev Uz + bz)
///   r  = sigmoid(x Wr + h_prev Ur + br)
///   h~ = tanh(x Wh + (r * h_prev) Uh + bh)
///   h  = (1 - z) * h_prev + z * h~
struct GruParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  ad::Var Wz, Wr, Wh;
  ad::Var Uz, Ur, Uh;
  ad::Var bz, br, bh;

  /// Registers nine tensors named "<prefix>.Wz" etc. Biases start at zero.
  static GruParams create(ParameterSet& params, const std::string& prefix, std::size_t input_size,
                          std::size_t hidden_size, Init init, Rng& rng);
};

struct SequenceEmbedding {
  ad::Var steps;  // T x d_out
  ad::Var last;   // 1 x d_out
};

ad::Var gru_cell(const ad::Var& x, const ad::Var& h_prev, const GruParams& p);

/// h0 defaults to zeros when undefined.
SequenceEmbedding run_unidirectional(const ad::Var& seq, const GruParams& p,
                                     const ad::Var& h0 = {});

/// Forward and backward passes concatenated per step: width 2h.
/// `last` is the final row of `steps`.
SequenceEmbedding run_bidirectional(const ad::Var& seq, const GruParams& fwd,
                                    const GruParams& bwd);

}  // namespace tarn
