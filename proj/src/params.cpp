// SPDX-License-Identifier: Apache-2.0
#include "tarn/params.hpp"

#include <cmath>

#include "tarn/errors.hpp"

namespace tarn {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix out(rows, cols);
  for (double& v : out.data()) v = dist(rng);
  return out;
}

Matrix init_matrix(std::size_t rows, std::size_t cols, Init init, Rng& rng) {
  if (init == Init::kZeros) return Matrix(rows, cols);
  return glorot_uniform(rows, cols, rng);
}

ad::Var ParameterSet::add(std::string name, Matrix value) {
  auto var = ad::parameter(std::move(value));
  adopt(std::move(name), var);
  return var;
}

void ParameterSet::adopt(std::string name, ad::Var var) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(var)});
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.value().size();
  return n;
}

const ad::Var* ParameterSet::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e.var;
  return nullptr;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

double ParameterSet::grad_norm() const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (!e.var.has_grad()) continue;
    for (double g : e.var.grad().data()) total += g * g;
  }
  return std::sqrt(total);
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.var.value());
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != entries_.size()) {
    throw ShapeError("restore: expected " + std::to_string(entries_.size()) + " tensors, got " +
                     std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& target = entries_[i].var.mutable_value();
    if (!target.same_shape(values[i])) {
      throw ShapeError("restore: tensor '" + entries_[i].name + "' expects " +
                       target.shape_string() + ", got " + values[i].shape_string());
    }
    target = values[i];
  }
}

}  // namespace tarn
