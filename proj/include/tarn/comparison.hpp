// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "tarn/autodiff.hpp"
#include "tarn/params.hpp"

namespace tarn {

enum class Measure { kMult, kSubt, kNN, kSubMultNN, kEucCos };

std::string_view to_string(Measure m);
/// Accepts "Mult", "Subt", "NN", "SubMultNN", "EucCos" (case-insensitive).
Measure parse_measure(std::string_view name);

/// Per-segment comparison width for a measure.
std::size_t comparison_width(Measure m, std::size_t embed_width, std::size_t nn_hidden);

/// Compares row m of Q with row m of H.
///   Mult:      q * h
///   Subt:      (q - h) * (q - h)
///   NN:        relu([q, h] Wc + bc)
///   SubMultNN: relu([(q - h)^2, q * h] Wc + bc)
///   EucCos:    [||q - h||, cos(q, h)]
class Comparator {
 public:
  /// Registers "<prefix>.W" / "<prefix>.b" for the NN measures only.
  static Comparator create(ParameterSet& params, const std::string& prefix, Measure measure,
                           std::size_t embed_width, std::size_t nn_hidden, Init init, Rng& rng);

  Measure measure() const noexcept { return measure_; }
  std::size_t embed_width() const noexcept { return embed_width_; }
  std::size_t output_width() const noexcept;

  /// Q, H: M x d -> M x w.
  ad::Var compare(const ad::Var& query, const ad::Var& aligned) const;

 private:
  Measure measure_ = Measure::kEucCos;
  std::size_t embed_width_ = 0;
  std::size_t nn_hidden_ = 0;
  ad::Var W_, b_;
};

}  // namespace tarn
