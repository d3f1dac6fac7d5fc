#pragma once

// Dense complex Hermitian linear algebra: eigendecomposition, spectral
// propagators and commutators.

#include <Eigen/Dense>
#include <complex>

namespace ggfr {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;
using CVector = Eigen::VectorXcd;

double max_abs(const CMatrix& m);

/// max |U^dag U - I|
double unitarity_defect(const CMatrix& u);

/// Dense Hermitian matrix. Hermiticity is checked on construction.
class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix entries);
  explicit HermitianOperator(const RMatrix& entries);

  Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  double max_norm() const { return max_abs(m_); }
  bool is_real() const { return real_; }
  bool is_diagonal(double tol = 0.0) const;

 private:
  CMatrix m_;
  bool real_ = false;
};

/// Eigenpairs of a Hermitian operator. Column k of `eigenvectors` belongs to
/// `eigenvalues[k]`; eigenvalues ascend.
struct SpectralData {
  RVector eigenvalues;
  CMatrix eigenvectors;

  Index dim() const { return eigenvalues.size(); }
  CMatrix reconstruct() const;
};

class UnitaryOperator {
 public:
  /// Checks ||U^dag U - I||_max < tol::kUnitarity when dim is below
  /// tol::kValidationDimLimit (always when `force_check`).
  explicit UnitaryOperator(CMatrix entries, bool force_check = false);

  static UnitaryOperator identity(Index dim);

  Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }
  UnitaryOperator adjoint() const;
  UnitaryOperator operator*(const UnitaryOperator& rhs) const;

 private:
  struct Trusted {};
  UnitaryOperator(CMatrix entries, Trusted) : m_(std::move(entries)) {}
  CMatrix m_;
};

/// Eigendecomposition with a fixed gauge: the first component of each
/// eigenvector above tol::kPhaseThreshold is real and positive; within a
/// numerically degenerate cluster columns are ordered by the index of that
/// component.
SpectralData eigh(const HermitianOperator& a);

/// exp(-i H t) from the spectral data of H (t in units of hbar/epsilon).
UnitaryOperator propagator(const SpectralData& spec, double t);

/// ||AB - BA||_max
double commutator_norm(const HermitianOperator& a, const HermitianOperator& b);

/// commutator_norm scaled by ||A||_max ||B||_max (0 when either is zero).
double relative_commutator_norm(const HermitianOperator& a, const HermitianOperator& b);

}  // namespace ggfr
