#pragma once

#include <stdexcept>
#include <string>

namespace ymgen {

constexpr int kMaxDim = 3;

// All numerical tolerances in one place.
struct Tolerances {
  double trace = 1e-12;
  double sphere = 1e-12;
  double probability = 1e-12;
  double symmetry = 1e-12;
  double jacobi = 1e-14;
  double kernel = 1e-10;
  double merge = 1e-10;
  double barycentre = 1e-12;
  double det_root = 1e-11;
  double lattice_direction = 1e-12;
  double residual = 1e-8;
};

inline const Tolerances& tol() {
  static const Tolerances t{};
  return t;
}

// Error kinds map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ymgen
