// SPDX-License-Identifier: Apache-2.0
// Straight-line reference implementations used to cross-check the library.
// They work on nested std::vector and share no code with src/.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "tarn/matrix.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat from(const tarn::Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline tarn::Matrix to(const Mat& m) {
  tarn::Matrix out(m.size(), m.front().size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c) out(r, c) = m[r][c];
  return out;
}

inline tarn::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                  double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  tarn::Matrix m(rows, cols);
  for (double& v : m.data()) v = u(rng);
  return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.front().size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      out[i][j] = s;
    }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double max_abs_diff(const tarn::Matrix& a, const Mat& b) {
  double worst = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b[r][c]));
  return worst;
}

// One GRU step, element by element.
struct Gru {
  Mat Wz, Wr, Wh, Uz, Ur, Uh;
  Vec bz, br, bh;

  Vec step(const Vec& x, const Vec& h) const {
    const std::size_t H = h.size();
    auto affine = [&](const Mat& W, const Vec& in, std::size_t j) {
      double s = 0.0;
      for (std::size_t i = 0; i < in.size(); ++i) s += in[i] * W[i][j];
      return s;
    };
    Vec z(H), r(H), out(H);
    for (std::size_t j = 0; j < H; ++j) {
      z[j] = sigmoid(affine(Wz, x, j) + affine(Uz, h, j) + bz[j]);
      r[j] = sigmoid(affine(Wr, x, j) + affine(Ur, h, j) + br[j]);
    }
    Vec rh(H);
    for (std::size_t j = 0; j < H; ++j) rh[j] = r[j] * h[j];
    for (std::size_t j = 0; j < H; ++j) {
      const double cand = std::tanh(affine(Wh, x, j) + affine(Uh, rh, j) + bh[j]);
      out[j] = (1.0 - z[j]) * h[j] + z[j] * cand;
    }
    return out;
  }

  Mat run(const Mat& seq) const {
    Vec h(bz.size(), 0.0);
    Mat out;
    for (const auto& x : seq) {
      h = step(x, h);
      out.push_back(h);
    }
    return out;
  }
};

// Column-wise softmax attention: A[i][j] over sample rows i for query row j.
struct Attention {
  Mat logits, weights, aligned;
};

inline Attention attention(const Mat& S, const Mat& Q, const Mat& W, const Vec& b) {
  Attention out;
  Mat SW = matmul(S, W);
  for (auto& row : SW)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  const std::size_t N = S.size(), M = Q.size(), d = S.front().size();
  out.logits.assign(N, Vec(M, 0.0));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < d; ++k) out.logits[i][j] += SW[i][k] * Q[j][k];
  out.weights.assign(N, Vec(M, 0.0));
  for (std::size_t j = 0; j < M; ++j) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < N; ++i) mx = std::max(mx, out.logits[i][j]);
    double z = 0.0;
    for (std::size_t i = 0; i < N; ++i) z += std::exp(out.logits[i][j] - mx);
    for (std::size_t i = 0; i < N; ++i) out.weights[i][j] = std::exp(out.logits[i][j] - mx) / z;
  }
  out.aligned.assign(M, Vec(d, 0.0));
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < d; ++k) out.aligned[j][k] += out.weights[i][j] * S[i][k];
  return out;
}

inline Vec relu_affine(const Vec& in, const Mat& W, const Vec& b) {
  Vec out(b);
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < in.size(); ++i) out[j] += in[i] * W[i][j];
    out[j] = std::max(0.0, out[j]);
  }
  return out;
}

enum class Measure { kMult, kSubt, kNN, kSubMultNN, kEucCos };

// Per-row comparison of q and h. W/b are only used by the NN measures.
inline Vec compare(Measure m, const Vec& q, const Vec& h, const Mat& W, const Vec& b) {
  const std::size_t d = q.size();
  Vec out;
  switch (m) {
    case Measure::kMult:
      for (std::size_t k = 0; k < d; ++k) out.push_back(q[k] * h[k]);
      return out;
    case Measure::kSubt:
      for (std::size_t k = 0; k < d; ++k) out.push_back((q[k] - h[k]) * (q[k] - h[k]));
      return out;
    case Measure::kNN: {
      Vec cat(q);
      cat.insert(cat.end(), h.begin(), h.end());
      return relu_affine(cat, W, b);
    }
    case Measure::kSubMultNN: {
      Vec cat;
      for (std::size_t k = 0; k < d; ++k) cat.push_back((q[k] - h[k]) * (q[k] - h[k]));
      for (std::size_t k = 0; k < d; ++k) cat.push_back(q[k] * h[k]);
      return relu_affine(cat, W, b);
    }
    case Measure::kEucCos: {
      double dist = 0.0, dot = 0.0, nq = 0.0, nh = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        dist += (q[k] - h[k]) * (q[k] - h[k]);
        dot += q[k] * h[k];
        nq += q[k] * q[k];
        nh += h[k] * h[k];
      }
      const double denom = std::sqrt(nq) * std::sqrt(nh);
      return {std::sqrt(dist), denom == 0.0 ? 0.0 : dot / denom};
    }
  }
  return out;
}

// Mean binary cross-entropy of sigmoid(raw) against the one-hot row `true_class`.
inline double episode_loss(const Mat& raw, std::size_t true_class) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < raw.size(); ++c)
    for (double s : raw[c]) {
      const double q = sigmoid(s);
      total += c == true_class ? -std::log(q) : -std::log(1.0 - q);
      ++n;
    }
  return total / static_cast<double>(n);
}

// Softmax of the per-class mean over shots.
inline Vec class_probabilities(const Mat& raw) {
  Vec means;
  for (const auto& row : raw) {
    double s = 0.0;
    for (double v : row) s += v;
    means.push_back(s / static_cast<double>(row.size()));
  }
  double mx = *std::max_element(means.begin(), means.end());
  double z = 0.0;
  for (double m : means) z += std::exp(m - mx);
  Vec out;
  for (double m : means) out.push_back(std::exp(m - mx) / z);
  return out;
}

}  // namespace oracle
