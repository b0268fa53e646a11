#pragma once

// Island + quantum-dot measurement model.
//
//   H = E_C (N - N_g)^2 + h n_f + eps_C (n_f - n_g)^2 + H_tunn
//   H_tunn = -(i/2) e^{-i phi/2} f^dag (t_1 X_1 + t_2 X_2) + h.c.
//
// X is a Majorana (MZM pair), a local fermion c, or an Andreev
// quasiparticle alpha = |u| c + |v| c^dag. The island charge N is kept on the
// three-level register {-1, 0, +1}; e^{-i phi/2} lowers it by one.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mzmwit/fock.hpp"
#include "mzmwit/states.hpp"

namespace mzmwit {

/// Site label -> complex tunnel amplitude. Missing sites have t = 0.
struct TunnelCouplings {
  std::map<int, Complex> t;

  Complex at(int site) const {
    const auto it = t.find(site);
    return it == t.end() ? Complex(0.0) : it->second;
  }

  static TunnelCouplings uniform(Complex value = 1.0, int n_sites = 6) {
    TunnelCouplings c;
    for (int s = 1; s <= n_sites; ++s) c.t[s] = value;
    return c;
  }
};

/// T_ij = 2 |t_i^* t_j| / (|t_i|^2 + |t_j|^2), in [0, 1].
inline double coupling_factor(Complex ti, Complex tj) {
  const double s = std::norm(ti) + std::norm(tj);
  if (s == 0.0) throw DomainError("coupling_factor: both couplings are zero");
  return 2.0 * std::abs(std::conj(ti) * tj) / s;
}

/// Energy-splitting to parity conversion constant (|t_1|^2 + |t_2|^2) / (t_1^* t_2 - t_1 t_2^*).
/// Purely imaginary; infinite when t_1^* t_2 is real.
inline Complex parity_conversion_constant(Complex t1, Complex t2) {
  const Complex k = std::conj(t1) * t2 - t1 * std::conj(t2);
  return (std::norm(t1) + std::norm(t2)) / k;
}

/// b^dag b for the pair (i, j) with
///   b^dag = [t_i^*(|u_i| c_i^dag + |v_i| c_i) + t_j^*(|u_j| c_j^dag + |v_j| c_j)] / sqrt(|t_i|^2 + |t_j|^2),
/// with site i on `mode_i` and site j on `mode_j` of `space`.
inline Operator effective_b_operator(const TunnelCouplings& couplings,
                                     const std::pair<AbsSiteParams, AbsSiteParams>& sites,
                                     std::pair<int, int> pair, const FockSpace& space,
                                     int mode_i, int mode_j) {
  if (pair.first == pair.second || mode_i == mode_j) {
    throw ValidationError("effective_b_operator: pair sites must be distinct");
  }
  const Complex ti = couplings.at(pair.first);
  const Complex tj = couplings.at(pair.second);
  const double s = std::norm(ti) + std::norm(tj);
  if (s == 0.0) {
    throw DomainError("effective_b_operator: zero total coupling for pair (" +
                      std::to_string(pair.first) + "," + std::to_string(pair.second) + ")");
  }
  const Operator ci = annihilation_op(space, mode_i);
  const Operator cj = annihilation_op(space, mode_j);
  const auto& [si, sj] = sites;
  const Operator bd =
      (std::conj(ti) * (std::abs(si.u) * ci.adjoint() + std::abs(si.v) * ci) +
       std::conj(tj) * (std::abs(sj.u) * cj.adjoint() + std::abs(sj.v) * cj)) *
      Complex(1.0 / std::sqrt(s));
  return bd * bd.adjoint();
}

/// Six-site layout: site s on mode s - 1.
inline Operator effective_b_operator(const TunnelCouplings& couplings,
                                     const std::pair<AbsSiteParams, AbsSiteParams>& sites,
                                     std::pair<int, int> pair, const FockSpace& space) {
  return effective_b_operator(couplings, sites, pair, space, pair.first - 1, pair.second - 1);
}

enum class Scenario { MzmPair, FermionPair, AbsPair };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::MzmPair: return "mzm";
    case Scenario::FermionPair: return "fermion";
    case Scenario::AbsPair: return "abs";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "mzm") return Scenario::MzmPair;
  if (s == "fermion") return Scenario::FermionPair;
  if (s == "abs") return Scenario::AbsPair;
  throw ValidationError("scenario must be mzm, fermion or abs, got \"" + s + "\"");
}

struct IslandQdModel {
  double E_C = 1.0;
  double N_g = 0.0;
  double eps_C = 10.0;
  double n_g = 0.3;
  double h = 0.1;
  Complex t1 = 0.0;
  Complex t2 = 0.0;
  // Andreev weights of the two measured sites (AbsPair scenario only).
  AbsSiteParams site1{};
  AbsSiteParams site2{};

  double eps0() const { return eps_C * n_g * n_g; }
  double eps1() const { return eps_C * (1.0 - n_g) * (1.0 - n_g) + h; }
  double base() const { return E_C * N_g * N_g; }
  /// Virtual-state gap seen from the occupied-dot branch.
  double denom1() const { return E_C * (1.0 - 2.0 * N_g) + eps0() - eps1(); }
  /// Virtual-state gap seen from the empty-dot branch.
  double denom0() const { return E_C * (1.0 + 2.0 * N_g) + eps1() - eps0(); }
  double coupling_sum() const { return std::norm(t1) + std::norm(t2); }
  /// i (t_1^* t_2 - t_1 t_2^*), real.
  double parity_coupling() const {
    return (Complex(0.0, 1.0) * (std::conj(t1) * t2 - t1 * std::conj(t2))).real();
  }

  /// Throws on an unusable model and returns advisory warnings.
  std::vector<std::string> validate(double degenerate_tol = 1e-9) const {
    if (!(E_C > 0.0)) throw ValidationError("IslandQdModel: E_C must be positive");
    if (!(eps_C > E_C)) {
      throw DomainError("IslandQdModel: eps_C must exceed E_C (dot charging dominates)");
    }
    if (std::abs(denom1()) < degenerate_tol || std::abs(denom0()) < degenerate_tol) {
      throw DomainError("IslandQdModel: vanishing perturbation denominator (degenerate levels)");
    }
    std::vector<std::string> warnings;
    if (eps_C < 5.0 * E_C) warnings.push_back("eps_C < 5 E_C: outside the strong dot-charging regime");
    return warnings;
  }
};

/// (eps0, eps1) with the island pair in parity p12 = +-1.
inline std::pair<double, double> perturbed_energies_mzm(const IslandQdModel& m, int p12) {
  if (p12 != 1 && p12 != -1) throw ValidationError("perturbed_energies_mzm: p12 must be +1 or -1");
  m.validate();
  const double s = m.coupling_sum();
  const double g = m.parity_coupling();
  const double e1 = m.base() + m.eps1() - (s + p12 * g) / (4.0 * m.denom1());
  const double e0 = m.base() + m.eps0() - (s - p12 * g) / (4.0 * m.denom0());
  return {e0, e1};
}

/// (eps0, eps1) with <b^dag b> = occupation. Holds for Andreev pairs too,
/// since {b, b^dag} = 1 makes <b b^dag> = 1 - <b^dag b>.
inline std::pair<double, double> perturbed_energies_fermion(const IslandQdModel& m, double occupation) {
  if (occupation < 0.0 || occupation > 1.0) {
    throw ValidationError("perturbed_energies_fermion: occupation outside [0, 1]");
  }
  m.validate();
  const double s = m.coupling_sum();
  const double e1 = m.base() + m.eps1() - s * (1.0 - occupation) / (4.0 * m.denom1());
  const double e0 = m.base() + m.eps0() - s * occupation / (4.0 * m.denom0());
  return {e0, e1};
}

struct MeasurementOutcome {
  double energy_splitting = 0.0;
  double inferred_expectation = 0.0;
};

/// Inverts delta = eps1 - eps0 to p12 (MZM) or <b^dag b> (fermion, ABS).
/// Values up to 0.05 outside the physical range are clamped; beyond that
/// the splitting is inconsistent with the model.
inline MeasurementOutcome splitting_to_expectation(double delta, const IslandQdModel& m, Scenario sc) {
  m.validate();
  const double s = m.coupling_sum();
  const double w1 = 1.0 / (4.0 * m.denom1());
  const double w0 = 1.0 / (4.0 * m.denom0());
  const double bare = m.eps1() - m.eps0();
  double x = 0.0, lo = 0.0, hi = 1.0;
  if (sc == Scenario::MzmPair) {
    const double g = m.parity_coupling();
    if (g == 0.0) {
      throw DomainError("splitting_to_expectation: t1^* t2 is real, splitting carries no parity information");
    }
    // delta = bare - s (w1 - w0) - p g (w1 + w0)
    x = (bare - s * (w1 - w0) - delta) / (g * (w1 + w0));
    lo = -1.0;
  } else {
    if (s == 0.0) throw DomainError("splitting_to_expectation: zero couplings");
    // delta = bare - s w1 + n s (w1 + w0)
    x = (delta - bare + s * w1) / (s * (w1 + w0));
  }
  constexpr double kClampTol = 0.05;
  if (x < lo - kClampTol || x > hi + kClampTol) {
    throw MeasurementError("splitting_to_expectation: inferred value " + std::to_string(x) +
                           " outside the physical range");
  }
  return {delta, std::clamp(x, lo, hi)};
}

namespace detail {

struct QdSystem {
  int n_island = 0;   // island fermion modes
  FockSpace fock{1};  // island modes + dot (last mode)
  Matrix H;           // on charge(3) x fock, index = charge * fock.dim() + fock state
};

inline QdSystem build_qd_hamiltonian(const IslandQdModel& m, Scenario sc) {
  QdSystem sys;
  sys.n_island = sc == Scenario::MzmPair ? 1 : 2;
  sys.fock = FockSpace(sys.n_island + 1);
  const auto df = sys.fock.dim();
  const Operator f = annihilation_op(sys.fock, sys.n_island);
  const Operator nf = f.adjoint() * f;

  Operator x1 = Operator::zero(sys.fock), x2 = Operator::zero(sys.fock);
  if (sc == Scenario::MzmPair) {
    x1 = majorana_op(sys.fock, 1);
    x2 = majorana_op(sys.fock, 2);
  } else {
    const Operator c1 = annihilation_op(sys.fock, 0);
    const Operator c2 = annihilation_op(sys.fock, 1);
    if (sc == Scenario::FermionPair) {
      x1 = c1;
      x2 = c2;
    } else {
      x1 = std::abs(m.site1.u) * c1 + std::abs(m.site1.v) * c1.adjoint();
      x2 = std::abs(m.site2.u) * c2 + std::abs(m.site2.v) * c2.adjoint();
    }
  }
  const Matrix dot = (m.h * nf.matrix() +
                      m.eps_C * (nf.matrix() - m.n_g * Matrix::Identity(df, df)) *
                          (nf.matrix() - m.n_g * Matrix::Identity(df, df)));
  // -(i/2) f^dag (t1 X1 + t2 X2): moves an electron from the island to the dot.
  const Matrix hop = (Complex(0.0, -0.5) * (f.adjoint() * (m.t1 * x1 + m.t2 * x2))).matrix();

  sys.H = Matrix::Zero(3 * df, 3 * df);
  for (int q = 0; q < 3; ++q) {
    const double N = q - 1;
    sys.H.block(q * df, q * df, df, df) =
        m.E_C * (N - m.N_g) * (N - m.N_g) * Matrix::Identity(df, df) + dot;
  }
  for (int q = 1; q < 3; ++q) {
    // charge q -> q-1 together with the hop
    sys.H.block((q - 1) * df, q * df, df, df) += hop;
    sys.H.block(q * df, (q - 1) * df, df, df) += hop.adjoint();
  }
  return sys;
}

}  // namespace detail

/// Island state (island modes only) for a definite pair parity p12.
inline Vector island_state_mzm(int p12) {
  if (p12 != 1 && p12 != -1) throw ValidationError("island_state_mzm: p12 must be +1 or -1");
  Vector v = Vector::Zero(2);
  v(p12 == 1 ? 0 : 1) = 1.0;
  return v;
}

/// Two-mode island state with the coupled fermion b empty (n_b = 0) or
/// filled (n_b = 1); the orthogonal combination stays empty.
inline Vector island_state_fermion(const IslandQdModel& m, int n_b) {
  if (n_b != 0 && n_b != 1) throw ValidationError("island_state_fermion: n_b must be 0 or 1");
  Vector v = Vector::Zero(4);
  v(0) = 1.0;
  if (n_b == 0) return v;
  const double s = m.coupling_sum();
  if (s == 0.0) throw DomainError("island_state_fermion: zero couplings");
  const FockSpace sp(2);
  const Operator bd = (std::conj(m.t1) * creation_op(sp, 0) + std::conj(m.t2) * creation_op(sp, 1)) *
                      Complex(1.0 / std::sqrt(s));
  return bd.matrix() * v;
}

/// Exact energy of the level adiabatically connected to
/// |N = 0> (x) |island> (x) |n_f = qd_occupation>, by dense diagonalization.
/// The level is the eigenvalue cluster carrying the largest weight of the
/// unperturbed vector, which need not be the sector's lowest eigenvalue.
inline double exact_ground_energies(const IslandQdModel& m, Scenario sc, int qd_occupation,
                                    const Vector& island) {
  if (qd_occupation != 0 && qd_occupation != 1) {
    throw ValidationError("exact_ground_energies: QD occupation must be 0 or 1");
  }
  const detail::QdSystem sys = detail::build_qd_hamiltonian(m, sc);
  const Eigen::Index di = Eigen::Index{1} << sys.n_island;
  if (island.size() != di) throw DimensionError("exact_ground_energies: island state size mismatch");
  const auto df = sys.fock.dim();
  Vector u = Vector::Zero(3 * df);
  u.segment(df + qd_occupation * di, di) = island / island.norm();

  Eigen::SelfAdjointEigenSolver<Matrix> es(sys.H);
  const auto& ev = es.eigenvalues();
  const Eigen::VectorXd w = (es.eigenvectors().adjoint() * u).cwiseAbs2();
  double best_weight = -1.0, best_energy = 0.0;
  for (Eigen::Index a = 0; a < ev.size();) {
    Eigen::Index b = a;
    double weight = 0.0, esum = 0.0;
    while (b < ev.size() && ev(b) - ev(a) < 1e-9) {
      weight += w(b);
      esum += ev(b);
      ++b;
    }
    if (weight > best_weight + 1e-12) {
      best_weight = weight;
      best_energy = esum / static_cast<double>(b - a);
    }
    a = b;
  }
  return best_energy;
}

inline double exact_ground_energies(const IslandQdModel& m, int p12, int qd_occupation) {
  return exact_ground_energies(m, Scenario::MzmPair, qd_occupation, island_state_mzm(p12));
}

/// Parity splitting eps1(p12=+1) - eps1(p12=-1) of the occupied-dot branch.
struct ParitySplitting {
  double exact = 0.0;
  double perturbative = 0.0;
  double residual() const { return std::abs(exact - perturbative); }
};

inline ParitySplitting mzm_parity_splitting(const IslandQdModel& m) {
  ParitySplitting out;
  out.perturbative = perturbed_energies_mzm(m, 1).second - perturbed_energies_mzm(m, -1).second;
  out.exact = exact_ground_energies(m, 1, 1) - exact_ground_energies(m, -1, 1);
  return out;
}

/// Occupation splitting eps1(n_b=1) - eps1(n_b=0) of the occupied-dot branch.
inline ParitySplitting fermion_occupation_splitting(const IslandQdModel& m) {
  ParitySplitting out;
  out.perturbative = perturbed_energies_fermion(m, 1.0).second - perturbed_energies_fermion(m, 0.0).second;
  out.exact = exact_ground_energies(m, Scenario::FermionPair, 1, island_state_fermion(m, 1)) -
              exact_ground_energies(m, Scenario::FermionPair, 1, island_state_fermion(m, 0));
  return out;
}

/// Least-squares slope of log(residual) against log(|t|).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mzmwit
