#pragma once

#include <stdexcept>
#include <string>

namespace ggfr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public Error {
 public:
  NotHermitian(double defect)
      : Error("matrix is not Hermitian (max |A - A^dag| = " + std::to_string(defect) + ")"),
        defect(defect) {}
  double defect;
};

class NotUnitary : public Error {
 public:
  NotUnitary(double defect)
      : Error("matrix is not unitary (max |U^dag U - I| = " + std::to_string(defect) + ")"),
        defect(defect) {}
  double defect;
};

class EigenSolverFailure : public Error {
 public:
  EigenSolverFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual(residual) {}
  double residual;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class NonCommutingCharge : public Error {
 public:
  NonCommutingCharge(std::string first, std::string second, double norm)
      : Error("operators '" + first + "' and '" + second +
              "' do not commute (||[A,B]||_max = " + std::to_string(norm) + ")"),
        first(std::move(first)), second(std::move(second)), norm(norm) {}
  std::string first;
  std::string second;
  double norm;
};

class TruncationUnconverged : public Error {
 public:
  TruncationUnconverged(double leakage, int n_max, int suggested_n_max)
      : Error("phonon truncation unconverged at n_max=" + std::to_string(n_max) +
              ": top-quanta GGE weight " + std::to_string(leakage) +
              ", try n_max >= " + std::to_string(suggested_n_max)),
        leakage(leakage), n_max(n_max), suggested_n_max(suggested_n_max) {}
  double leakage;
  int n_max;
  int suggested_n_max;
};

class TargetOutsideSpectrum : public Error {
 public:
  using Error::Error;
};

class UnknownCharge : public Error {
 public:
  explicit UnknownCharge(const std::string& id) : Error("unknown charge id '" + id + "'"), id(id) {}
  std::string id;
};

}  // namespace ggfr
