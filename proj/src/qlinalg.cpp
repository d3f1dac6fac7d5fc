#include "ggfr/qlinalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ggfr/errors.hpp"
#include "ggfr/tolerances.hpp"

namespace ggfr {

double max_abs(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

double unitarity_defect(const CMatrix& u) {
  CMatrix g = u.adjoint() * u;
  g.diagonal().array() -= 1.0;
  return max_abs(g);
}

namespace {

double hermiticity_defect(const CMatrix& m) {
  double worst = 0.0;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i <= j; ++i)
      worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
  return worst;
}

// Applies the phase convention column by column and orders columns inside
// degenerate clusters.
void fix_gauge(RVector& values, CMatrix& vectors) {
  const Index n = values.size();
  std::vector<Index> lead(n, 0);
  for (Index k = 0; k < n; ++k) {
    Index first = 0;
    for (Index r = 0; r < n; ++r) {
      if (std::abs(vectors(r, k)) > tol::kPhaseThreshold) {
        first = r;
        break;
      }
    }
    lead[k] = first;
    const Complex c = vectors(first, k);
    if (std::abs(c) > 0.0) vectors.col(k) *= std::conj(c) / std::abs(c);
    vectors(first, k) = Complex(vectors(first, k).real(), 0.0);
  }

  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Index start = 0;
  bool permuted = false;
  while (start < n) {
    Index stop = start + 1;
    while (stop < n && values[stop] - values[stop - 1] <= tol::kDegeneracy * scale) ++stop;
    if (stop - start > 1) {
      std::stable_sort(order.begin() + start, order.begin() + stop,
                       [&](Index a, Index b) { return lead[a] < lead[b]; });
      permuted = true;
    }
    start = stop;
  }
  if (!permuted) return;
  RVector v2(n);
  CMatrix w2(vectors.rows(), n);
  for (Index k = 0; k < n; ++k) {
    v2[k] = values[order[k]];
    w2.col(k) = vectors.col(order[k]);
  }
  values = std::move(v2);
  vectors = std::move(w2);
}

}  // namespace

HermitianOperator::HermitianOperator(CMatrix entries) : m_(std::move(entries)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols())
    throw DimensionMismatch("Hermitian operator must be square with dim >= 1");
  const double defect = hermiticity_defect(m_);
  if (defect > tol::kHermiticity) throw NotHermitian(defect);
  real_ = m_.imag().cwiseAbs().maxCoeff() == 0.0;
}

HermitianOperator::HermitianOperator(const RMatrix& entries)
    : HermitianOperator(CMatrix(entries.cast<Complex>())) {}

bool HermitianOperator::is_diagonal(double tol) const {
  for (Index j = 0; j < m_.cols(); ++j)
    for (Index i = 0; i < m_.rows(); ++i)
      if (i != j && std::abs(m_(i, j)) > tol) return false;
  return true;
}

CMatrix SpectralData::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

UnitaryOperator::UnitaryOperator(CMatrix entries, bool force_check) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols()) throw DimensionMismatch("unitary operator must be square");
  if (force_check || m_.rows() <= tol::kValidationDimLimit) {
    const double defect = unitarity_defect(m_);
    if (defect > tol::kUnitarity) throw NotUnitary(defect);
  }
}

UnitaryOperator UnitaryOperator::identity(Index dim) {
  return UnitaryOperator(CMatrix::Identity(dim, dim), Trusted{});
}

UnitaryOperator UnitaryOperator::adjoint() const { return UnitaryOperator(m_.adjoint(), Trusted{}); }

UnitaryOperator UnitaryOperator::operator*(const UnitaryOperator& rhs) const {
  if (dim() != rhs.dim()) throw DimensionMismatch("unitary product dimension mismatch");
  return UnitaryOperator(CMatrix(m_ * rhs.m_), Trusted{});
}

SpectralData eigh(const HermitianOperator& a) {
  const Index n = a.dim();
  SpectralData out;
  out.eigenvalues.resize(n);
  lapack_int info = 0;
  if (a.is_real()) {
    RMatrix w = a.matrix().real();
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n), w.data(),
                          static_cast<lapack_int>(n), out.eigenvalues.data());
    out.eigenvectors = w.cast<Complex>();
  } else {
    CMatrix w = a.matrix();
    info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                          reinterpret_cast<lapack_complex_double*>(w.data()),
                          static_cast<lapack_int>(n), out.eigenvalues.data());
    out.eigenvectors = std::move(w);
  }
  if (info != 0) {
    double residual = std::numeric_limits<double>::infinity();
    if (info > 0) residual = max_abs(a.matrix() * out.eigenvectors -
                                     out.eigenvectors * out.eigenvalues.cast<Complex>().asDiagonal());
    throw EigenSolverFailure("Hermitian eigensolver did not converge (info=" + std::to_string(info) + ")",
                             residual);
  }
  fix_gauge(out.eigenvalues, out.eigenvectors);

  if (n <= tol::kValidationDimLimit) {
    const double orth = unitarity_defect(out.eigenvectors);
    const double rec = max_abs(out.reconstruct() - a.matrix());
    const double scale = std::max(a.max_norm(), std::numeric_limits<double>::min());
    if (orth >= tol::kUnitarity || rec >= tol::kReconstruction * scale)
      throw EigenSolverFailure("eigendecomposition failed post-condition checks", std::max(orth, rec));
  }
  return out;
}

UnitaryOperator propagator(const SpectralData& spec, double t) {
  if (!std::isfinite(t)) throw InvalidParameter("propagation time must be finite");
  Eigen::VectorXcd phases(spec.dim());
  for (Index k = 0; k < spec.dim(); ++k) phases[k] = std::polar(1.0, -spec.eigenvalues[k] * t);
  CMatrix u = spec.eigenvectors * phases.asDiagonal() * spec.eigenvectors.adjoint();
  return UnitaryOperator(std::move(u));
}

double commutator_norm(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("commutator of operators with different dimensions");
  const CMatrix ab = a.matrix() * b.matrix();
  // BA = (AB)^dag for Hermitian A, B.
  return max_abs(ab - ab.adjoint());
}

double relative_commutator_norm(const HermitianOperator& a, const HermitianOperator& b) {
  const double scale = a.max_norm() * b.max_norm();
  if (scale == 0.0) return 0.0;
  return commutator_norm(a, b) / scale;
}

}  // namespace ggfr
