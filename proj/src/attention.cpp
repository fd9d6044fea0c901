// SPDX-License-Identifier: Apache-2.0
#include "tarn/attention.hpp"

#include "tarn/errors.hpp"

namespace tarn {

AttentionParams AttentionParams::create(ParameterSet& params, const std::string& prefix,
                                        std::size_t width, Init init, Rng& rng) {
  return {params.add(prefix + ".W", init_matrix(width, width, init, rng)),
          params.add(prefix + ".b", Matrix(1, width))};
}

ad::Var attention_logits(const ad::Var& sample, const ad::Var& query, const AttentionParams& p) {
  using namespace ad;
  if (sample.cols() != query.cols()) {
    throw ShapeError("align: sample " + sample.value().shape_string() + " and query " +
                     query.value().shape_string() + " widths differ");
  }
  if (p.W.rows() != sample.cols()) {
    throw ShapeError("align: attention weight " + p.W.value().shape_string() +
                     " does not match embedding width " + std::to_string(sample.cols()));
  }
  return matmul(add_row_bias(matmul(sample, p.W), p.b), transpose(query));
}

Alignment align(const ad::Var& sample, const ad::Var& query, const AttentionParams& p) {
  using namespace ad;
  Var weights = softmax_cols(attention_logits(sample, query, p));
  return {weights, matmul(transpose(weights), sample)};
}

}  // namespace tarn
