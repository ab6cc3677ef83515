#pragma once

#include <stdexcept>
#include <string>

namespace tua {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad lattice, missing file, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor/observation shape disagreement.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Association that violates the feasibility constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace tua
