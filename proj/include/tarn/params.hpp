// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tarn/autodiff.hpp"

namespace tarn {

using Rng = std::mt19937_64;

/// Independent seed for a named stream derived from a master seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

enum class Init { kGlorot, kZeros };

/// Glorot-uniform matrix with limit sqrt(6 / (rows + cols)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Matrix init_matrix(std::size_t rows, std::size_t cols, Init init, Rng& rng);

struct NamedParameter {
  std::string name;
  ad::Var var;
};

/// Ordered registry of every learnable tensor in a model.
class ParameterSet {
 public:
  ad::Var add(std::string name, Matrix value);
  void adopt(std::string name, ad::Var var);

  const std::vector<NamedParameter>& entries() const noexcept { return entries_; }
  std::vector<NamedParameter>& entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;

  const ad::Var* find(std::string_view name) const;

  void zero_grad();
  /// Global L2 norm over every parameter gradient (missing gradients count as zero).
  double grad_norm() const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<NamedParameter> entries_;
};

}  // namespace tarn
