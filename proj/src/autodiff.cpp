// SPDX-License-Identifier: Apache-2.0
#include "tarn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "tarn/errors.hpp"

namespace tarn::ad {
namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node&)>;

Var make_result(Matrix value, std::vector<NodePtr> parents, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
                     b.value().shape_string());
  }
}

// out += a * b
void gemm_acc(Matrix& out, const Matrix& a, const Matrix& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += g * b^T
void gemm_acc_bt(Matrix& out, const Matrix& g, const Matrix& b) {
  const std::size_t m = g.rows(), n = g.cols(), k = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.row(p).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      out(i, p) += acc;
    }
  }
}

// out += a^T * g
void gemm_acc_at(Matrix& out, const Matrix& a, const Matrix& g) {
  const std::size_t m = a.rows(), k = a.cols(), n = g.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* orow = out.row(p).data();
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

template <typename F>
Var unary_map(const Var& x, F&& f, BackwardFn fn) {
  Matrix out = x.value();
  for (double& v : out.data()) v = f(v);
  return make_result(std::move(out), {x.node()}, std::move(fn));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

constexpr double kLogClamp = 1e-12;

}  // namespace

Matrix& Node::ensure_grad() {
  if (grad.empty()) grad = Matrix(value.rows(), value.cols());
  return grad;
}

Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(parents);
  while (!pending.empty()) {
    std::shared_ptr<Node> n = std::move(pending.back());
    pending.pop_back();
    if (n && n.use_count() == 1) {
      for (auto& p : n->parents) pending.push_back(std::move(p));
      n->parents.clear();
      n->backward = nullptr;
    }
  }
}

void Var::zero_grad() {
  if (!node_->grad.empty()) node_->grad.fill(0.0);
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ContractError("item() requires a 1x1 value, got " + value().shape_string());
  }
  return value()(0, 0);
}

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() noexcept { return g_grad_enabled; }

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree " + a.value().shape_string() + " x " +
                     b.value().shape_string());
  }
  Matrix out(a.rows(), b.cols());
  gemm_acc(out, a.value(), b.value());
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) gemm_acc_bt(pa.ensure_grad(), self.grad, pb.value);
    if (pb.requires_grad) gemm_acc_at(pb.ensure_grad(), pa.value, self.grad);
  });
}

Var transpose(const Var& x) {
  return make_result(x.value().transposed(), {x.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    Matrix& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += self.grad(j, i);
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Matrix out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto g = p->ensure_grad().data();
      auto sg = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    auto sg = self.grad.data();
    if (self.parents[0]->requires_grad) {
      auto g = self.parents[0]->ensure_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i];
    }
    if (self.parents[1]->requires_grad) {
      auto g = self.parents[1]->ensure_grad().data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= sg[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    auto sg = self.grad.data();
    if (pa.requires_grad) {
      auto g = pa.ensure_grad().data();
      auto bv = pb.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i] * bv[i];
    }
    if (pb.requires_grad) {
      auto g = pb.ensure_grad().data();
      auto av = pa.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i] * av[i];
    }
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row_bias: bias " + bias.value().shape_string() +
                     " cannot broadcast onto " + x.value().shape_string());
  }
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    auto b = bias.value().row(0);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  return make_result(std::move(out), {x.node(), bias.node()}, [](Node& self) {
    Node& px = *self.parents[0];
    Node& pb = *self.parents[1];
    if (px.requires_grad) {
      auto g = px.ensure_grad().data();
      auto sg = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i];
    }
    if (pb.requires_grad) {
      auto g = pb.ensure_grad().row(0);
      for (std::size_t i = 0; i < self.grad.rows(); ++i) {
        auto sr = self.grad.row(i);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += sr[j];
      }
    }
  });
}

Var scale(const Var& x, double factor) {
  return unary_map(x, [factor](double v) { return v * factor; }, [factor](Node& self) {
    auto g = self.parents[0]->ensure_grad().data();
    auto sg = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * sg[i];
  });
}

Var sigmoid(const Var& x) {
  return unary_map(x, stable_sigmoid, [](Node& self) {
    auto g = self.parents[0]->ensure_grad().data();
    auto sg = self.grad.data();
    auto y = self.value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(const Var& x) {
  return unary_map(x, [](double v) { return std::tanh(v); }, [](Node& self) {
    auto g = self.parents[0]->ensure_grad().data();
    auto sg = self.grad.data();
    auto y = self.value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += sg[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(const Var& x) {
  return unary_map(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](Node& self) {
    auto g = self.parents[0]->ensure_grad().data();
    auto sg = self.grad.data();
    auto xv = self.parents[0]->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) g[i] += sg[i];
    }
  });
}

Var square(const Var& x) {
  return unary_map(x, [](double v) { return v * v; }, [](Node& self) {
    auto g = self.parents[0]->ensure_grad().data();
    auto sg = self.grad.data();
    auto xv = self.parents[0]->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * xv[i] * sg[i];
  });
}

Var softmax_cols(const Var& x) {
  const Matrix& in = x.value();
  Matrix out(in.rows(), in.cols());
  for (std::size_t j = 0; j < in.cols(); ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in.rows(); ++i) mx = std::max(mx, in(i, j));
    double total = 0.0;
    for (std::size_t i = 0; i < in.rows(); ++i) {
      out(i, j) = std::exp(in(i, j) - mx);
      total += out(i, j);
    }
    for (std::size_t i = 0; i < in.rows(); ++i) out(i, j) /= total;
  }
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    Matrix& g = self.parents[0]->ensure_grad();
    const Matrix& y = self.value;
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.rows(); ++i) dot += y(i, j) * self.grad(i, j);
      for (std::size_t i = 0; i < y.rows(); ++i) g(i, j) += y(i, j) * (self.grad(i, j) - dot);
    }
  });
}

Var row_mean(const Var& x) {
  const Matrix& in = x.value();
  Matrix out(1, in.cols());
  for (std::size_t i = 0; i < in.rows(); ++i)
    for (std::size_t j = 0; j < in.cols(); ++j) out(0, j) += in(i, j);
  const double inv = 1.0 / static_cast<double>(in.rows());
  for (double& v : out.data()) v *= inv;
  return make_result(std::move(out), {x.node()}, [inv](Node& self) {
    Matrix& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += inv * self.grad(0, j);
  });
}

Var col_mean(const Var& x) {
  const Matrix& in = x.value();
  Matrix out(in.rows(), 1);
  for (std::size_t i = 0; i < in.rows(); ++i)
    for (std::size_t j = 0; j < in.cols(); ++j) out(i, 0) += in(i, j);
  const double inv = 1.0 / static_cast<double>(in.cols());
  for (double& v : out.data()) v *= inv;
  return make_result(std::move(out), {x.node()}, [inv](Node& self) {
    Matrix& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += inv * self.grad(i, 0);
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return make_result(Matrix(1, 1, total), {x.node()}, [](Node& self) {
    const double sg = self.grad(0, 0);
    for (double& g : self.parents[0]->ensure_grad().data()) g += sg;
  });
}

Var l2_distance_rows(const Var& a, const Var& b) {
  require_same_shape(a, b, "l2_distance_rows");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      const double d = av(i, j) - bv(i, j);
      acc += d * d;
    }
    out(i, 0) = std::sqrt(acc);
  }
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    Matrix* ga = pa.requires_grad ? &pa.ensure_grad() : nullptr;
    Matrix* gb = pb.requires_grad ? &pb.ensure_grad() : nullptr;
    for (std::size_t i = 0; i < self.value.rows(); ++i) {
      const double dist = self.value(i, 0);
      if (dist == 0.0) continue;
      const double coef = self.grad(i, 0) / dist;
      for (std::size_t j = 0; j < pa.value.cols(); ++j) {
        const double d = coef * (pa.value(i, j) - pb.value(i, j));
        if (ga) (*ga)(i, j) += d;
        if (gb) (*gb)(i, j) -= d;
      }
    }
  });
}

Var cosine_rows(const Var& a, const Var& b) {
  require_same_shape(a, b, "cosine_rows");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const std::size_t m = av.rows();
  Matrix out(m, 1);
  // Cached per-row norms: columns are |a|, |b|.
  Matrix norms(m, 2);
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) {
      dot += av(i, j) * bv(i, j);
      na += av(i, j) * av(i, j);
      nb += bv(i, j) * bv(i, j);
    }
    norms(i, 0) = std::sqrt(na);
    norms(i, 1) = std::sqrt(nb);
    out(i, 0) = (na == 0.0 || nb == 0.0) ? 0.0 : dot / (norms(i, 0) * norms(i, 1));
  }
  return make_result(std::move(out), {a.node(), b.node()}, [norms](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    Matrix* ga = pa.requires_grad ? &pa.ensure_grad() : nullptr;
    Matrix* gb = pb.requires_grad ? &pb.ensure_grad() : nullptr;
    for (std::size_t i = 0; i < self.value.rows(); ++i) {
      const double na = norms(i, 0), nb = norms(i, 1);
      if (na == 0.0 || nb == 0.0) continue;
      const double c = self.value(i, 0);
      const double sg = self.grad(i, 0);
      const double inv = 1.0 / (na * nb);
      for (std::size_t j = 0; j < pa.value.cols(); ++j) {
        const double x = pa.value(i, j), y = pb.value(i, j);
        if (ga) (*ga)(i, j) += sg * (y * inv - c * x / (na * na));
        if (gb) (*gb)(i, j) += sg * (x * inv - c * y / (nb * nb));
      }
    }
  });
}

Var l2_norm_rowpair(const Var& a, const Var& b) {
  if (a.rows() != 1 || b.rows() != 1) throw ShapeError("l2_norm_rowpair expects two row vectors");
  return l2_distance_rows(a, b);
}

Var cosine_rowpair(const Var& a, const Var& b) {
  if (a.rows() != 1 || b.rows() != 1) throw ShapeError("cosine_rowpair expects two row vectors");
  return cosine_rows(a, b);
}

Var binary_cross_entropy(const Var& q, const Matrix& targets) {
  if (!q.value().same_shape(targets)) {
    throw ShapeError("binary_cross_entropy: probabilities " + q.value().shape_string() +
                     " vs targets " + targets.shape_string());
  }
  const auto qv = q.value().data();
  const auto tv = targets.data();
  const double inv_n = 1.0 / static_cast<double>(qv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < qv.size(); ++i) {
    total += tv[i] * std::log(std::max(qv[i], kLogClamp)) +
             (1.0 - tv[i]) * std::log(std::max(1.0 - qv[i], kLogClamp));
  }
  return make_result(Matrix(1, 1, -total * inv_n), {q.node()}, [targets, inv_n](Node& self) {
    const double sg = self.grad(0, 0) * inv_n;
    auto g = self.parents[0]->ensure_grad().data();
    auto qv = self.parents[0]->value.data();
    auto tv = targets.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double d = 0.0;
      if (qv[i] > kLogClamp) d -= tv[i] / qv[i];
      if (1.0 - qv[i] > kLogClamp) d += (1.0 - tv[i]) / (1.0 - qv[i]);
      g[i] += sg * d;
    }
  });
}

Var row(const Var& x, std::size_t index) {
  if (index >= x.rows()) {
    throw ShapeError("row: index " + std::to_string(index) + " out of range for " +
                     x.value().shape_string());
  }
  return make_result(x.value().row_copy(index), {x.node()}, [index](Node& self) {
    auto g = self.parents[0]->ensure_grad().row(index);
    auto sg = self.grad.row(0);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += sg[j];
  });
}

Var reverse_rows(const Var& x) {
  const Matrix& in = x.value();
  const std::size_t n = in.rows();
  Matrix out(n, in.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto src = in.row(n - 1 - i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return make_result(std::move(out), {x.node()}, [n](Node& self) {
    Matrix& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = g.row(n - 1 - i);
      auto sg = self.grad.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += sg[j];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + offset * cols);
    offset += p.rows();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    const std::size_t cols = self.value.cols();
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t len = p->value.size();
      if (p->requires_grad) {
        auto g = p->ensure_grad().data();
        const double* sg = self.grad.data().data() + offset * cols;
        for (std::size_t i = 0; i < len; ++i) g[i] += sg[i];
      }
      offset += p->value.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < rows; ++i) {
      auto src = p.value().row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + offset);
    }
    offset += p.cols();
    parents.push_back(p.node());
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t w = p->value.cols();
      if (p->requires_grad) {
        Matrix& g = p->ensure_grad();
        for (std::size_t i = 0; i < g.rows(); ++i) {
          auto sg = self.grad.row(i);
          auto gr = g.row(i);
          for (std::size_t j = 0; j < w; ++j) gr[j] += sg[offset + j];
        }
      }
      offset += w;
    }
  });
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be a 1x1 scalar, got " +
                        (loss.defined() ? loss.value().shape_string() : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; the result is a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace tarn::ad
