#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srhc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. Every failure surfaced by the library derives from Error so
// callers can catch a single type; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Raised when U_max does not exceed the noise constant rho of the bounded
// stabilizer; rho is kept so callers can report the required authority.
class InsufficientAuthorityError : public Error {
 public:
  InsufficientAuthorityError(const std::string& what, double rho)
      : Error(what), rho_(rho) {}
  double rho() const { return rho_; }

 private:
  double rho_;
};

inline void require_dim(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

}  // namespace srhc
