// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "support/oracles.hpp"
#include "tarn/recurrent.hpp"

namespace oracle {

inline Vec row0(const tarn::Matrix& m) { return from(m).front(); }

inline Gru gru_from(const tarn::GruParams& p) {
  return Gru{from(p.Wz.value()), from(p.Wr.value()), from(p.Wh.value()),
             from(p.Uz.value()), from(p.Ur.value()), from(p.Uh.value()),
             row0(p.bz.value()), row0(p.br.value()), row0(p.bh.value())};
}

// Gives every bias a random value so tests exercise the bias paths.
inline void randomize_biases(tarn::GruParams& p, std::mt19937_64& rng) {
  for (auto* b : {&p.bz, &p.br, &p.bh}) b->mutable_value() = random_matrix(1, p.hidden_size, rng);
}

}  // namespace oracle
