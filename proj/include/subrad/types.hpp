#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace subrad {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

inline constexpr Complex kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the inputs was violated (bad index, bad shape, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical invariant failed at run time. `invariant()` names it.
class NumericalFailure : public Error {
 public:
  NumericalFailure(std::string invariant, const std::string& detail)
      : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Local projective measurement basis.
enum class Observable { X, Z };

inline const char* to_string(Observable o) { return o == Observable::X ? "x" : "z"; }

inline Observable observable_from_string(const std::string& s) {
  if (s == "x" || s == "X") return Observable::X;
  if (s == "z" || s == "Z") return Observable::Z;
  throw InvalidArgument("unknown observable '" + s + "' (expected x or z)");
}

}  // namespace subrad
