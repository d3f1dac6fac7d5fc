#include "ggfr/dicke.hpp"

#include <cmath>

#include "ggfr/errors.hpp"

namespace ggfr::dicke {

void DickeParams::validate() const {
  if (n_ions < 1) throw InvalidParameter("n_ions must be >= 1");
  if (!(omega_com > 0.0) || !std::isfinite(omega_com)) throw InvalidParameter("omega_com must be > 0");
  if (!(omega_at > 0.0) || !std::isfinite(omega_at)) throw InvalidParameter("omega_at must be > 0");
  if (!(g >= 0.0) || !std::isfinite(g)) throw InvalidParameter("g must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in [0, 1]");
  if (n_max < 1) throw InvalidParameter("n_max must be >= 1");
}

DickeBasis::DickeBasis(int n_ions, int n_max) : n_ions_(n_ions), n_max_(n_max) {
  if (n_ions < 1) throw InvalidParameter("n_ions must be >= 1");
  if (n_max < 1) throw InvalidParameter("n_max must be >= 1");
}

Eigen::VectorXi DickeBasis::phonon_numbers() const {
  Eigen::VectorXi n(size());
  for (Index i = 0; i < size(); ++i) n[i] = state(i).n;
  return n;
}

namespace {

// <m+1| J+ |m> for spin J, with m = J + jz.
double spin_raise(double j, int m) {
  const double jz = m - j;
  return std::sqrt(j * (j + 1.0) - jz * (jz + 1.0));
}

HermitianOperator diagonal_operator(const DickeBasis& basis, auto&& value) {
  RVector d(basis.size());
  for (Index i = 0; i < basis.size(); ++i) d[i] = value(basis.state(i));
  return HermitianOperator(RMatrix(d.asDiagonal()));
}

}  // namespace

HermitianOperator build_hamiltonian(const DickeParams& p) {
  p.validate();
  const DickeBasis basis(p);
  const double j = p.spin();
  const double coupling = 2.0 * p.g / std::sqrt(static_cast<double>(p.n_ions));
  const double rotating = coupling * (1.0 - p.alpha);
  const double counter = coupling * p.alpha;

  RMatrix h = RMatrix::Zero(basis.size(), basis.size());
  for (Index i = 0; i < basis.size(); ++i) {
    const auto [m, n] = basis.state(i);
    h(i, i) = p.omega_com * n + p.omega_at * (m - j);
    if (m == p.n_ions) continue;
    const double up = spin_raise(j, m);
    // J+ b |m, n> and its conjugate J- b^dag.
    if (n > 0 && rotating != 0.0) {
      const Index k = basis.index_of(m + 1, n - 1);
      h(k, i) += rotating * up * std::sqrt(static_cast<double>(n));
      h(i, k) = h(k, i);
    }
    // J+ b^dag |m, n> and its conjugate J- b.
    if (n < p.n_max && counter != 0.0) {
      const Index k = basis.index_of(m + 1, n + 1);
      h(k, i) += counter * up * std::sqrt(static_cast<double>(n + 1));
      h(i, k) = h(k, i);
    }
  }
  return HermitianOperator(h);
}

HermitianOperator build_charge_q(const DickeBasis& basis) {
  return diagonal_operator(basis, [](DickeBasis::State s) { return double(s.m + s.n); });
}

HermitianOperator build_charge_qprime(const DickeBasis& basis) {
  return diagonal_operator(basis, [](DickeBasis::State s) { return double(s.m - s.n); });
}

HermitianOperator build_parity(const DickeBasis& basis) {
  return diagonal_operator(basis, [](DickeBasis::State s) { return (s.m + s.n) % 2 == 0 ? 1.0 : -1.0; });
}

double critical_coupling(const DickeParams& p) {
  p.validate();
  return 0.5 * std::sqrt(p.omega_com * p.omega_at);
}

HermitianOperator build_charge(const std::string& id, const DickeBasis& basis) {
  if (id == kChargeQ) return build_charge_q(basis);
  if (id == kChargeQPrime) return build_charge_qprime(basis);
  if (id == kChargeParity) return build_parity(basis);
  throw UnknownCharge(id);
}

double charge_phonon_slope(const std::string& id) {
  if (id == kChargeQ) return 1.0;
  if (id == kChargeQPrime) return -1.0;
  if (id == kChargeParity) return 0.0;
  throw UnknownCharge(id);
}

double ladder_coefficient(const BetaVector& betas, double omega_com) {
  double c = betas.beta * omega_com;
  for (const auto& [id, b] : betas.charge_betas) c += b * charge_phonon_slope(id);
  return c;
}

}  // namespace ggfr::dicke
