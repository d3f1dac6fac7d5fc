#include "ggfr/qfr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ggfr::qfr {

double delta_gen_free_energy(const GgeEnsemble& initial, const GgeEnsemble& final_ensemble) {
  return final_ensemble.free_energy() - initial.free_energy();
}

double delta_gen_free_energy(const GgeEnsemble& initial, const BetaVector& beta_fin,
                             const HermitianOperator& h_fin, const std::vector<Charge>& charges_fin,
                             const std::optional<PhononLadder>& ladder) {
  return delta_gen_free_energy(initial, build_gge(beta_fin, h_fin, charges_fin, ladder));
}

namespace {

double log_sum_exp(const RVector& x) {
  const double top = x.maxCoeff();
  return top + std::log((x.array() - top).exp().sum());
}

}  // namespace

double delta_canonical_free_energy(const RVector& energies_ini, double beta, const RVector& energies_fin,
                                   double beta_prime) {
  return log_sum_exp(-beta * energies_ini) - log_sum_exp(-beta_prime * energies_fin);
}

QjeReport check_qje(const tpm::DiscreteDistribution& pdf, double delta_f) {
  QjeReport r;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& a : pdf.atoms) top = std::max(top, std::log(a.prob) - a.value);
  double s = 0.0;
  for (const auto& a : pdf.atoms) s += std::exp(std::log(a.prob) - a.value - top);
  r.log_lhs = top + std::log(s);
  r.lhs = std::exp(r.log_lhs);
  r.log_rhs = -delta_f;
  r.rhs = std::exp(r.log_rhs);
  r.relative_error = std::abs(std::expm1(r.log_lhs - r.log_rhs));
  return r;
}

TcrReport check_tcr(const tpm::DiscreteDistribution& pdf_fw, const tpm::DiscreteDistribution& pdf_bw,
                    double delta_f, double floor, double pass_threshold) {
  TcrReport rep;
  rep.delta_f = delta_f;
  rep.floor = floor;
  rep.pass_threshold = pass_threshold;

  // BW atoms mirrored to -W, ascending.
  std::vector<tpm::DiscreteDistribution::Atom> mirror(pdf_bw.atoms.rbegin(), pdf_bw.atoms.rend());
  for (auto& a : mirror) a.value = -a.value;
  const double base_tol = 10.0 * std::max(pdf_fw.merge_tolerance, pdf_bw.merge_tolerance);

  auto make_atom = [&](double value, double p_fw, double p_bw) {
    TcrAtom t;
    t.value = value;
    t.p_fw = p_fw;
    t.p_bw = p_bw;
    t.log_lhs = std::log(p_fw) - value;
    t.log_rhs = std::log(p_bw) - delta_f;
    const double top = std::max(t.log_lhs, t.log_rhs);
    const double denom = std::max({p_fw, p_bw, floor});
    if (std::isinf(top) && top < 0) {
      t.residual = 0.0;
    } else {
      t.residual = std::exp(top - std::log(denom)) * std::abs(std::exp(t.log_lhs - top) - std::exp(t.log_rhs - top));
    }
    return t;
  };

  std::size_t i = 0, j = 0;
  while (i < pdf_fw.atoms.size() || j < mirror.size()) {
    const bool have_fw = i < pdf_fw.atoms.size();
    const bool have_bw = j < mirror.size();
    if (have_fw && have_bw) {
      const double v = pdf_fw.atoms[i].value;
      const double u = mirror[j].value;
      const double tol = base_tol + 1e-12 * std::max(std::abs(v), std::abs(u));
      if (std::abs(v - u) <= tol) {
        rep.atoms.push_back(make_atom(v, pdf_fw.atoms[i].prob, mirror[j].prob));
        ++i;
        ++j;
        continue;
      }
      if (v < u) {
        if (pdf_fw.atoms[i].prob > floor) rep.support_mismatch.push_back(make_atom(v, pdf_fw.atoms[i].prob, 0.0));
        ++i;
      } else {
        if (mirror[j].prob > floor) rep.support_mismatch.push_back(make_atom(u, 0.0, mirror[j].prob));
        ++j;
      }
    } else if (have_fw) {
      if (pdf_fw.atoms[i].prob > floor)
        rep.support_mismatch.push_back(make_atom(pdf_fw.atoms[i].value, pdf_fw.atoms[i].prob, 0.0));
      ++i;
    } else {
      if (mirror[j].prob > floor) rep.support_mismatch.push_back(make_atom(mirror[j].value, 0.0, mirror[j].prob));
      ++j;
    }
  }
  for (const auto& a : rep.atoms) rep.max_residual = std::max(rep.max_residual, a.residual);
  return rep;
}

TcrReport check_marginal_tcr(const tpm::DiscreteDistribution& pdf_fw_m,
                             const tpm::DiscreteDistribution& pdf_bw_m, double delta_f, double floor,
                             double pass_threshold) {
  return check_tcr(pdf_fw_m, pdf_bw_m, delta_f, floor, pass_threshold);
}

}  // namespace ggfr::qfr
