// SPDX-License-Identifier: Apache-2.0
#include "tarn/comparison.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "tarn/errors.hpp"

namespace tarn {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::kMult: return "Mult";
    case Measure::kSubt: return "Subt";
    case Measure::kNN: return "NN";
    case Measure::kSubMultNN: return "SubMultNN";
    case Measure::kEucCos: return "EucCos";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mult") return Measure::kMult;
  if (lower == "subt") return Measure::kSubt;
  if (lower == "nn") return Measure::kNN;
  if (lower == "submultnn") return Measure::kSubMultNN;
  if (lower == "euccos") return Measure::kEucCos;
  throw SpecError("unknown comparison measure: " + std::string(name));
}

std::size_t comparison_width(Measure m, std::size_t embed_width, std::size_t nn_hidden) {
  switch (m) {
    case Measure::kMult:
    case Measure::kSubt: return embed_width;
    case Measure::kNN:
    case Measure::kSubMultNN: return nn_hidden;
    case Measure::kEucCos: return 2;
  }
  return 0;
}

Comparator Comparator::create(ParameterSet& params, const std::string& prefix, Measure measure,
                              std::size_t embed_width, std::size_t nn_hidden, Init init,
                              Rng& rng) {
  Comparator c;
  c.measure_ = measure;
  c.embed_width_ = embed_width;
  c.nn_hidden_ = nn_hidden;
  if (measure == Measure::kNN || measure == Measure::kSubMultNN) {
    if (nn_hidden == 0) throw SpecError("NN comparison requires a positive hidden width");
    c.W_ = params.add(prefix + ".W", init_matrix(2 * embed_width, nn_hidden, init, rng));
    c.b_ = params.add(prefix + ".b", Matrix(1, nn_hidden));
  }
  return c;
}

std::size_t Comparator::output_width() const noexcept {
  return comparison_width(measure_, embed_width_, nn_hidden_);
}

ad::Var Comparator::compare(const ad::Var& query, const ad::Var& aligned) const {
  using namespace ad;
  if (!query.value().same_shape(aligned.value())) {
    throw ShapeError("compare: query " + query.value().shape_string() + " vs aligned " +
                     aligned.value().shape_string());
  }
  if (query.cols() != embed_width_) {
    throw ShapeError("compare: expected width " + std::to_string(embed_width_) + ", got " +
                     std::to_string(query.cols()));
  }
  switch (measure_) {
    case Measure::kMult: return mul(query, aligned);
    case Measure::kSubt: return square(sub(query, aligned));
    case Measure::kNN: {
      std::array<Var, 2> parts{query, aligned};
      return relu(add_row_bias(matmul(concat_cols(parts), W_), b_));
    }
    case Measure::kSubMultNN: {
      std::array<Var, 2> parts{square(sub(query, aligned)), mul(query, aligned)};
      return relu(add_row_bias(matmul(concat_cols(parts), W_), b_));
    }
    case Measure::kEucCos: {
      std::array<Var, 2> parts{l2_distance_rows(query, aligned), cosine_rows(query, aligned)};
      return concat_cols(parts);
    }
  }
  throw ContractError("compare: unhandled measure");
}

}  // namespace tarn
