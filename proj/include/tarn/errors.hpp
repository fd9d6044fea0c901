// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tarn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition was violated (empty sequence, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or a dataset that cannot satisfy an episode request.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid generator/run specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf during training, or a failed gradient check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tarn
