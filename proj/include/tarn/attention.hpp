// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "tarn/autodiff.hpp"
#include "tarn/params.hpp"

namespace tarn {

struct AttentionParams {
  ad::Var W;  // d x d
  ad::Var b;  // 1 x d

  static AttentionParams create(ParameterSet& params, const std::string& prefix, std::size_t width,
                                Init init, Rng& rng);
};

struct Alignment {
  ad::Var weights;  // A: N x M, each column sums to 1
  ad::Var aligned;  // H: M x d
};

/// Segment-by-segment attention of a sample S (N x d) onto a query Q (M x d):
///   A = softmax_cols((S W + b) Q^T),  H = A^T S.
/// Row m of H is a convex combination of the rows of S.
Alignment align(const ad::Var& sample, const ad::Var& query, const AttentionParams& p);

/// The pre-softmax N x M logit matrix (S W + b) Q^T.
ad::Var attention_logits(const ad::Var& sample, const ad::Var& query, const AttentionParams& p);

}  // namespace tarn
