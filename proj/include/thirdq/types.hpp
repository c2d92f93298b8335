// types.hpp — scalar/matrix aliases and the error hierarchy shared by every module.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace thirdq {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

inline constexpr cplx kI{0.0, 1.0};

// Base of everything this library throws. `exit_code()` is what the CLI returns.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

// Malformed or inconsistent model input.
class ModelError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

// A numerical precondition of the construction failed.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double diagnostic)
      : Error(what), diagnostic_(diagnostic) {}
  // Smallest singular value, condition estimate, or failure time, depending on the subclass.
  double diagnostic() const noexcept { return diagnostic_; }

 private:
  double diagnostic_;
};

class SingularS : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class DefectiveX : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class LyapunovUnsolvable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class NoKernel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class TruncationOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class Unstable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline double max_abs(const CMat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace thirdq
