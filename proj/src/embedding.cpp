// SPDX-License-Identifier: Apache-2.0
#include "tarn/embedding.hpp"

#include "tarn/errors.hpp"

namespace tarn {

VisualEmbedder VisualEmbedder::create(ParameterSet& params, const std::string& prefix,
                                      std::size_t input_size, std::size_t hidden_size, Init init,
                                      Rng& rng) {
  return {GruParams::create(params, prefix + ".fwd", input_size, hidden_size, init, rng),
          GruParams::create(params, prefix + ".bwd", input_size, hidden_size, init, rng)};
}

ad::Var VisualEmbedder::embed(const ad::Var& features) const {
  return run_bidirectional(features, forward, backward).steps;
}

SingleVectorEmbedder SingleVectorEmbedder::create(ParameterSet& params, const std::string& prefix,
                                                  std::size_t input_size, std::size_t hidden_size,
                                                  Init init, Rng& rng) {
  return {GruParams::create(params, prefix, input_size, hidden_size, init, rng)};
}

ad::Var SingleVectorEmbedder::embed(const ad::Var& features) const {
  return run_unidirectional(features, gru).last;
}

SemanticEmbedder SemanticEmbedder::create(ParameterSet& params, const std::string& prefix,
                                          std::size_t semantic_size, std::size_t hidden_size,
                                          std::size_t output_size, Init init, Rng& rng) {
  SemanticEmbedder e;
  e.W1 = params.add(prefix + ".W1", init_matrix(semantic_size, hidden_size, init, rng));
  e.b1 = params.add(prefix + ".b1", Matrix(1, hidden_size));
  e.W2 = params.add(prefix + ".W2", init_matrix(hidden_size, output_size, init, rng));
  e.b2 = params.add(prefix + ".b2", Matrix(1, output_size));
  return e;
}

ad::Var SemanticEmbedder::embed(const ad::Var& vec) const {
  using namespace ad;
  if (vec.rows() != 1 || vec.cols() != input_size()) {
    throw ShapeError("embed_semantic: expected " + shape_string(1, input_size()) + ", got " +
                     vec.value().shape_string());
  }
  Var hidden = relu(add_row_bias(matmul(vec, W1), b1));
  return add_row_bias(matmul(hidden, W2), b2);
}

}  // namespace tarn
