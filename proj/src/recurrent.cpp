// SPDX-License-Identifier: Apache-2.0
#include "tarn/recurrent.hpp"

#include <vector>

#include "tarn/errors.hpp"

namespace tarn {
namespace {

void check_input(const ad::Var& seq, const GruParams& p, const char* where) {
  if (!seq.defined() || seq.value().empty()) throw ContractError(std::string(where) + ": empty sequence");
  if (seq.cols() != p.input_size) {
    throw ShapeError(std::string(where) + ": input width " + std::to_string(seq.cols()) +
                     " does not match GRU input size " + std::to_string(p.input_size));
  }
}

// One step given the already-projected input rows (x Wz + bz, ...).
ad::Var gru_step(const ad::Var& xz, const ad::Var& xr, const ad::Var& xh, const ad::Var& h_prev,
                 const GruParams& p) {
  using namespace ad;
  Var z = sigmoid(add(xz, matmul(h_prev, p.Uz)));
  Var r = sigmoid(add(xr, matmul(h_prev, p.Ur)));
  Var candidate = tanh(add(xh, matmul(mul(r, h_prev), p.Uh)));
  return add(h_prev, mul(z, sub(candidate, h_prev)));
}

}  // namespace

GruParams GruParams::create(ParameterSet& params, const std::string& prefix,
                            std::size_t input_size, std::size_t hidden_size, Init init, Rng& rng) {
  if (input_size == 0 || hidden_size == 0) throw ContractError("GRU sizes must be positive");
  GruParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.Wz = params.add(prefix + ".Wz", init_matrix(input_size, hidden_size, init, rng));
  p.Wr = params.add(prefix + ".Wr", init_matrix(input_size, hidden_size, init, rng));
  p.Wh = params.add(prefix + ".Wh", init_matrix(input_size, hidden_size, init, rng));
  p.Uz = params.add(prefix + ".Uz", init_matrix(hidden_size, hidden_size, init, rng));
  p.Ur = params.add(prefix + ".Ur", init_matrix(hidden_size, hidden_size, init, rng));
  p.Uh = params.add(prefix + ".Uh", init_matrix(hidden_size, hidden_size, init, rng));
  p.bz = params.add(prefix + ".bz", Matrix(1, hidden_size));
  p.br = params.add(prefix + ".br", Matrix(1, hidden_size));
  p.bh = params.add(prefix + ".bh", Matrix(1, hidden_size));
  return p;
}

ad::Var gru_cell(const ad::Var& x, const ad::Var& h_prev, const GruParams& p) {
  using namespace ad;
  if (x.rows() != 1) throw ShapeError("gru_cell: x must be a single row, got " + x.value().shape_string());
  check_input(x, p, "gru_cell");
  if (h_prev.rows() != 1 || h_prev.cols() != p.hidden_size) {
    throw ShapeError("gru_cell: h_prev " + h_prev.value().shape_string() + " expected " +
                     shape_string(1, p.hidden_size));
  }
  return gru_step(add_row_bias(matmul(x, p.Wz), p.bz), add_row_bias(matmul(x, p.Wr), p.br),
                  add_row_bias(matmul(x, p.Wh), p.bh), h_prev, p);
}

SequenceEmbedding run_unidirectional(const ad::Var& seq, const GruParams& p, const ad::Var& h0) {
  using namespace ad;
  check_input(seq, p, "run_unidirectional");
  Var h = h0.defined() ? h0 : constant(Matrix(1, p.hidden_size));
  if (h.rows() != 1 || h.cols() != p.hidden_size) {
    throw ShapeError("run_unidirectional: h0 " + h.value().shape_string() + " expected " +
                     shape_string(1, p.hidden_size));
  }
  // Input projections for all steps at once; row t is identical to x_t W + b.
  Var xz = add_row_bias(matmul(seq, p.Wz), p.bz);
  Var xr = add_row_bias(matmul(seq, p.Wr), p.br);
  Var xh = add_row_bias(matmul(seq, p.Wh), p.bh);
  std::vector<Var> states;
  states.reserve(seq.rows());
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    h = gru_step(row(xz, t), row(xr, t), row(xh, t), h, p);
    states.push_back(h);
  }
  return {concat_rows(states), states.back()};
}

SequenceEmbedding run_bidirectional(const ad::Var& seq, const GruParams& fwd,
                                    const GruParams& bwd) {
  using namespace ad;
  check_input(seq, fwd, "run_bidirectional");
  check_input(seq, bwd, "run_bidirectional");
  Var forward = run_unidirectional(seq, fwd).steps;
  Var backward = reverse_rows(run_unidirectional(reverse_rows(seq), bwd).steps);
  std::vector<Var> halves{forward, backward};
  Var steps = concat_cols(halves);
  return {steps, row(steps, steps.rows() - 1)};
}

}  // namespace tarn
