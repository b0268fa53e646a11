#pragma once

// Witness operators for the six-site pairing test.
//
// The nine crossing pairs join a site of {1,3,5} with a site of {2,4,6}.
// MZM witness:  W_M = I - sum a_ij i gamma_i gamma_j
// ABS witness:  W_A = I - sum a_ij b_ij^dag b_ij
// with the same coefficients a_ij in both.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mzmwit/fock.hpp"
#include "mzmwit/parallel.hpp"
#include "mzmwit/states.hpp"
#include "mzmwit/tunneling.hpp"

namespace mzmwit {

// Exact values at multiples of 90 degrees so that sin(180) is 0, not 1.2e-16.
inline double cos_deg(double deg) {
  const double q = deg / 90.0;
  if (q == std::round(q)) {
    const long k = ((static_cast<long>(std::round(q)) % 4) + 4) % 4;
    static constexpr double table[4] = {1.0, 0.0, -1.0, 0.0};
    return table[k];
  }
  return std::cos(deg * M_PI / 180.0);
}

inline double sin_deg(double deg) { return cos_deg(90.0 - deg); }

struct PairDatum {
  int i = 0;
  int j = 0;
  double a = 0.0;
  double d = 0.0;  // measured expectation
};

inline std::string pair_key(int i, int j) { return std::to_string(i) + std::to_string(j); }

class WitnessParams {
 public:
  static constexpr std::array<std::pair<int, int>, 9> kCrossingPairs = {{
      {1, 2}, {1, 4}, {1, 6}, {3, 2}, {3, 4}, {3, 6}, {5, 2}, {5, 4}, {5, 6}}};
  static constexpr std::array<std::pair<int, int>, 5> kSurvivingPairs = {{
      {1, 4}, {1, 6}, {3, 4}, {3, 6}, {5, 2}}};

  WitnessParams() { a_.fill({0.0, 0.0, 0.0}); }

  static bool is_crossing(int i, int j) {
    return (i == 1 || i == 3 || i == 5) && (j == 2 || j == 4 || j == 6);
  }

  double get(int i, int j) const { return a_[row(i, j)][col(j)]; }
  WitnessParams& set(int i, int j, double value) {
    a_[row(i, j)][col(j)] = value;
    return *this;
  }

  /// a14 = m cos(theta), a16 = m sin(theta), a34 = -m sin(theta),
  /// a36 = m cos(theta), plus a free a52.
  static WitnessParams canonical(double m, double theta_deg, double a52) {
    WitnessParams w;
    const double c = cos_deg(theta_deg), s = sin_deg(theta_deg);
    w.set(1, 4, m * c).set(1, 6, m * s).set(3, 4, -m * s).set(3, 6, m * c).set(5, 2, a52);
    return w;
  }
  static WitnessParams canonical_odd() { return canonical(1.0, 180.0, -1.0); }
  static WitnessParams canonical_even() { return canonical(1.0, 180.0, 1.0); }

  /// True when every nonzero coefficient sits on a pair that survives
  /// parity conservation.
  bool in_surviving_support() const {
    for (const auto& [i, j] : kCrossingPairs) {
      const bool surviving = std::find(kSurvivingPairs.begin(), kSurvivingPairs.end(),
                                       std::make_pair(i, j)) != kSurvivingPairs.end();
      if (!surviving && get(i, j) != 0.0) return false;
    }
    return true;
  }

  friend bool operator==(const WitnessParams& x, const WitnessParams& y) { return x.a_ == y.a_; }

 private:
  static std::size_t row(int i, int j) {
    if (!is_crossing(i, j)) {
      throw ValidationError("WitnessParams: (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is not a crossing pair");
    }
    return static_cast<std::size_t>((i - 1) / 2);
  }
  static std::size_t col(int j) { return static_cast<std::size_t>(j / 2 - 1); }

  std::array<std::array<double, 3>, 3> a_;
};

struct WitnessReport {
  double value = 1.0;
  std::vector<PairDatum> per_pair;

  bool negative() const { return value < 0.0; }
  /// Negative but within roundoff of zero.
  bool marginal() const { return value < 0.0 && value >= -kPositivityTol; }
  std::string verdict() const { return negative() ? "negative" : "nonnegative"; }
};

// ---------------------------------------------------------------- MZM witness

/// i gamma_i gamma_j for the nine crossing pairs on the 3-pair-mode space,
/// in kCrossingPairs order.
inline const std::vector<Operator>& crossing_pair_parities() {
  static const std::vector<Operator> ops = [] {
    const FockSpace sp = FockSpace::pair_modes(3);
    std::vector<Operator> out;
    for (const auto& [i, j] : WitnessParams::kCrossingPairs) out.push_back(pair_parity(sp, i, j));
    return out;
  }();
  return ops;
}

inline Operator mzm_witness_operator(const WitnessParams& params) {
  const FockSpace sp = FockSpace::pair_modes(3);
  Operator w = Operator::identity(sp);
  const auto& ops = crossing_pair_parities();
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& [i, j] = WitnessParams::kCrossingPairs[k];
    const double a = params.get(i, j);
    if (a != 0.0) w -= Complex(a) * ops[k];
  }
  return w;
}

inline WitnessReport mzm_witness_value(const DensityMatrix& rho, const WitnessParams& params) {
  if (rho.space().n_modes() != 3) {
    throw DimensionError("mzm_witness_value: expected the 3-pair-mode space, got " +
                         std::to_string(rho.space().n_modes()) + " modes");
  }
  WitnessReport r;
  const auto& ops = crossing_pair_parities();
  double sum = 0.0;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& [i, j] = WitnessParams::kCrossingPairs[k];
    const double a = params.get(i, j);
    const double d = expectation(ops[k], rho).real();
    sum += a * d;
    r.per_pair.push_back({i, j, a, d});
  }
  r.value = 1.0 - sum;
  return r;
}

/// Symmetric Q with closed-form value 1 - c^T Q c, c = (A, B, C, D).
inline Eigen::Matrix4d closed_form_matrix(const WitnessParams& p, Parity parity) {
  if (!p.in_surviving_support()) {
    throw UnsupportedError(
        "closed form covers only pairs 14, 16, 34, 36, 52; another coefficient is nonzero");
  }
  enum { A = 0, B = 1, C = 2, D = 3 };
  const double a14 = p.get(1, 4), a16 = p.get(1, 6), a34 = p.get(3, 4), a36 = p.get(3, 6),
               a52 = p.get(5, 2);
  // The even sector differs only in the sign of the 14 and 16 terms.
  const double s = parity == Parity::Odd ? 1.0 : -1.0;
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  auto off = [&q](int x, int y, double v) {
    q(x, y) += v;
    q(y, x) += v;
  };
  off(C, D, a34);  // 2 a34 (CD - AB)
  off(A, B, -a34);
  q(A, A) -= a36;  // a36 (-A^2 - C^2 + B^2 + D^2)
  q(C, C) -= a36;
  q(B, B) += a36;
  q(D, D) += a36;
  off(A, C, -s * a14);  // 2 a14 (-AC - BD)
  off(B, D, -s * a14);
  off(B, C, s * a16);  // 2 a16 (BC - AD)
  off(A, D, -s * a16);
  off(B, D, a52);  // 2 a52 (BD - AC)
  off(A, C, -a52);
  return q;
}

inline double mzm_witness_closed_form(const std::array<double, 4>& c, Parity parity,
                                      const WitnessParams& params) {
  double n2 = 0.0;
  for (double x : c) n2 += x * x;
  if (std::abs(n2 - 1.0) > 1e-12) throw ValidationError("mzm_witness_closed_form: coefficients not normalized");
  const Eigen::Vector4d v(c[0], c[1], c[2], c[3]);
  return 1.0 - v.dot(closed_form_matrix(params, parity) * v);
}

// ---------------------------------------------------------------- ABS witness

/// Dense W_A on the six-site local space.
inline Operator abs_witness_operator(const WitnessParams& params, const TunnelCouplings& couplings,
                                     const std::vector<AbsSiteParams>& sites) {
  if (sites.size() != 6) throw DimensionError("abs_witness_operator: expected 6 sites");
  const FockSpace sp = FockSpace::local_sites(6);
  Operator w = Operator::identity(sp);
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    if (a == 0.0) continue;
    w -= Complex(a) * effective_b_operator(couplings, {sites[i - 1], sites[j - 1]}, {i, j}, sp);
  }
  return w;
}

inline WitnessReport abs_witness_value(const DensityMatrix& rho, const WitnessParams& params,
                                       const TunnelCouplings& couplings,
                                       const std::vector<AbsSiteParams>& sites) {
  if (rho.space().n_modes() != 6) {
    throw DimensionError("abs_witness_value: expected the 6-site space, got " +
                         std::to_string(rho.space().n_modes()) + " modes");
  }
  if (sites.size() != 6) throw DimensionError("abs_witness_value: expected 6 site parameter sets");
  WitnessReport r;
  double sum = 0.0;
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    double d = 0.0;
    if (a != 0.0) {
      d = expectation(effective_b_operator(couplings, {sites[i - 1], sites[j - 1]}, {i, j}, rho.space()), rho)
              .real();
      sum += a * d;
    }
    r.per_pair.push_back({i, j, a, d});
  }
  r.value = 1.0 - sum;
  return r;
}

/// <b_ij^dag b_ij> on a product state without forming 64x64 operators.
/// Uses the Jordan-Wigner form c_k = Z_{<k} sigma^-_k and factorizes the
/// expectation over sites.
inline double abs_pair_occupation(const AbsState& s, const TunnelCouplings& couplings, int i, int j) {
  const Complex ti = couplings.at(i), tj = couplings.at(j);
  const double norm2 = std::norm(ti) + std::norm(tj);
  if (norm2 == 0.0) {
    throw DomainError("abs_pair_occupation: zero total coupling for pair " + pair_key(i, j));
  }
  Eigen::Matrix2cd sp, sm, z, id;
  sp << 0, 0, 1, 0;  // |1><0|
  sm << 0, 1, 0, 0;  // |0><1|
  z << 1, 0, 0, -1;
  id.setIdentity();

  auto bdag_local = [&](int x) {  // |u| sigma^+ + |v| sigma^-
    const auto& p = s.site(x);
    return Eigen::Matrix2cd(std::abs(p.u) * sp + std::abs(p.v) * sm);
  };
  auto tr = [&](int x, const Eigen::Matrix2cd& op) { return (op * s.site(x).density()).trace(); };

  // <(Z_{<x} Bd_x)(Z_{<y} Bd_y^dag)>
  auto term = [&](int x, int y) -> Complex {
    const Eigen::Matrix2cd bx = bdag_local(x);
    const Eigen::Matrix2cd ay = bdag_local(y).adjoint();
    if (x == y) return tr(x, bx * ay);
    Complex acc = 1.0;
    const int lo = std::min(x, y), hi = std::max(x, y);
    for (int m = lo + 1; m < hi; ++m) acc *= tr(m, z);
    if (x < y) {
      acc *= tr(x, bx * z) * tr(y, ay);
    } else {
      acc *= tr(y, z * ay) * tr(x, bx);
    }
    return acc;
  };

  const std::array<int, 2> site{i, j};
  const std::array<Complex, 2> t{ti, tj};
  Complex total = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) total += std::conj(t[x]) * t[y] * term(site[x], site[y]);
  }
  return total.real() / norm2;
}

/// W_A expectation for a six-site product state.
inline WitnessReport abs_witness_value_product(const AbsState& s, const WitnessParams& params,
                                               const TunnelCouplings& couplings) {
  if (s.n_sites() != 6 || s.first_site != 1) throw DimensionError("abs_witness_value_product: expected sites 1..6");
  WitnessReport r;
  double sum = 0.0;
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    double d = 0.0;
    if (a != 0.0) {
      d = abs_pair_occupation(s, couplings, i, j);
      sum += a * d;
    }
    r.per_pair.push_back({i, j, a, d});
  }
  r.value = 1.0 - sum;
  return r;
}

// ---------------------------------------------------------- candidate bounds

struct BoundResult {
  double margin = 1.0;         // 1 - sum max(a_ij, 0) w_ij; decides `holds`
  double signed_margin = 1.0;  // 1 - sum a_ij w_ij
  bool holds = true;
};

namespace detail {

template <class Weight>
BoundResult candidate_bound(const WitnessParams& params, const TunnelCouplings& couplings, Weight weight) {
  BoundResult r;
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    if (a == 0.0) continue;
    const Complex ti = couplings.at(i), tj = couplings.at(j);
    if (ti == 0.0 && tj == 0.0) {
      throw ValidationError("candidate bound: no coupling defined for pair " + pair_key(i, j));
    }
    const double w = weight(coupling_factor(ti, tj));
    r.signed_margin -= a * w;
    r.margin -= std::max(a, 0.0) * w;
  }
  r.holds = r.margin >= 0.0;
  return r;
}

}  // namespace detail

/// Pair fermions: <b^dag b> in [0, 1] on every state, weight 1 + T_ij.
inline BoundResult candidate_bound_fermion(const WitnessParams& params, const TunnelCouplings& couplings) {
  return detail::candidate_bound(params, couplings, [](double t) { return 1.0 + t; });
}

/// Andreev pairs: weight 1 + sqrt(2) + T_ij.
inline BoundResult candidate_bound_abs(const WitnessParams& params, const TunnelCouplings& couplings) {
  return detail::candidate_bound(params, couplings, [](double t) { return 1.0 + std::sqrt(2.0) + t; });
}

// ------------------------------------------------------------------- hybrid

namespace detail {

inline int hybrid_abs_local_mode(const HybridState& h, int label) {
  return h.abs_mode_of(label) - h.mzm.pairing.n_pairs();
}

/// sum a_ij i gamma_i gamma_j over crossing pairs inside the MZM block.
inline Operator hybrid_mzm_part(const HybridState& h, const WitnessParams& params) {
  const Pairing& p = h.mzm.pairing;
  const FockSpace sp = FockSpace::pair_modes(p.n_pairs());
  Operator r = Operator::zero(sp);
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    if (a == 0.0 || !p.contains_site(i) || !p.contains_site(j)) continue;
    r += Complex(a) * pair_parity(sp, p.local_label(i), p.local_label(j));
  }
  return r;
}

/// I - sum a_ij b^dag b over crossing pairs inside the ABS block.
inline Operator hybrid_abs_part(const HybridState& h, const WitnessParams& params,
                                const TunnelCouplings& couplings) {
  const FockSpace sp = FockSpace::local_sites(static_cast<int>(h.abs_sites.size()));
  Operator w = Operator::identity(sp);
  const auto labels = h.abs_labels();
  auto in_abs = [&](int s) { return std::find(labels.begin(), labels.end(), s) != labels.end(); };
  for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
    const double a = params.get(i, j);
    if (a == 0.0 || !in_abs(i) || !in_abs(j)) continue;
    w -= Complex(a) * effective_b_operator(couplings, {h.abs_site(i), h.abs_site(j)}, {i, j}, sp,
                                           hybrid_abs_local_mode(h, i), hybrid_abs_local_mode(h, j));
  }
  return w;
}

}  // namespace detail

/// W = I - R_M (x) W_A, with R_M the MZM-block correlator sum and W_A the
/// ABS-block witness. Pairs straddling the two blocks do not enter.
inline Operator hybrid_witness_operator(const HybridState& h, const WitnessParams& params,
                                        const TunnelCouplings& couplings) {
  h.validate();
  const Operator rm = detail::hybrid_mzm_part(h, params);
  const Operator wa = detail::hybrid_abs_part(h, params, couplings);
  const int k = h.mzm.pairing.n_pairs();
  std::vector<int> mm(k), am(h.abs_sites.size());
  for (int q = 0; q < k; ++q) mm[q] = q;
  for (std::size_t q = 0; q < am.size(); ++q) am[q] = k + static_cast<int>(q);
  const FockSpace sp = h.space();
  return Operator::identity(sp) - Operator(sp, tensor_on_modes(rm.matrix(), mm, wa.matrix(), am));
}

inline WitnessReport hybrid_witness_value(const DensityMatrix& rho, const HybridState& h,
                                          const WitnessParams& params, const TunnelCouplings& couplings) {
  const Operator w = hybrid_witness_operator(h, params, couplings);
  detail::require_compatible(w.space(), rho.space(), "hybrid_witness_value");
  WitnessReport r;
  r.value = expectation(w, rho).real();
  return r;
}

/// 1 - Tr(R_M rho_MZM) Tr(W_A rho_ABS), evaluated on the two parts separately.
inline double hybrid_witness_factorized(const HybridState& h, const WitnessParams& params,
                                        const TunnelCouplings& couplings) {
  h.validate();
  const double rm = expectation(detail::hybrid_mzm_part(h, params), build_mzm_state(h.mzm)).real();
  const double wa =
      expectation(detail::hybrid_abs_part(h, params, couplings), build_abs_state(AbsState{h.abs_sites, 1})).real();
  return 1.0 - rm * wa;
}

// --------------------------------------------------------------------- CHSH

using Vec3 = std::array<double, 3>;

struct ChshSettings {
  Vec3 l1{0, 0, 1}, l2{1, 0, 0};
  Vec3 r1{M_SQRT1_2, 0, M_SQRT1_2}, r2{M_SQRT1_2, 0, -M_SQRT1_2};
};

/// Unscaled Pauli triples on the 3-pair-mode space: left from Majoranas
/// {1,3,5}, right from {2,4,6}.
inline const std::array<Operator, 3>& chsh_left_paulis() {
  static const std::array<Operator, 3> ops = [] {
    const FockSpace sp = FockSpace::pair_modes(3);
    const Complex mi(0.0, -1.0);
    auto g = [&](int l) { return majorana_op(sp, l); };
    return std::array<Operator, 3>{mi * (g(3) * g(5)), mi * (g(5) * g(1)), mi * (g(1) * g(3))};
  }();
  return ops;
}

inline const std::array<Operator, 3>& chsh_right_paulis() {
  static const std::array<Operator, 3> ops = [] {
    const FockSpace sp = FockSpace::pair_modes(3);
    const Complex mi(0.0, -1.0);
    auto g = [&](int l) { return majorana_op(sp, l); };
    return std::array<Operator, 3>{mi * (g(4) * g(6)), mi * (g(6) * g(2)), mi * (g(2) * g(4))};
  }();
  return ops;
}

inline Operator chsh_witness_operator(const ChshSettings& s) {
  for (const Vec3* v : {&s.l1, &s.l2, &s.r1, &s.r2}) {
    const double n = std::sqrt((*v)[0] * (*v)[0] + (*v)[1] * (*v)[1] + (*v)[2] * (*v)[2]);
    if (std::abs(n - 1.0) > 1e-9) throw ValidationError("chsh_witness_value: direction is not a unit vector");
  }
  const FockSpace sp = FockSpace::pair_modes(3);
  auto dir = [&](const std::array<Operator, 3>& sig, const Vec3& v) {
    Operator o = Operator::zero(sp);
    for (int k = 0; k < 3; ++k) o += Complex(v[k] * M_SQRT1_2) * sig[k];
    return o;
  };
  const auto& L = chsh_left_paulis();
  const auto& R = chsh_right_paulis();
  const Operator L1 = dir(L, s.l1), L2 = dir(L, s.l2), R1 = dir(R, s.r1), R2 = dir(R, s.r2);
  return Operator::identity(sp) - (L1 * R1 - L1 * R2 + L2 * R1 + L2 * R2);
}

inline double chsh_witness_value(const DensityMatrix& rho, const ChshSettings& s) {
  if (rho.space().n_modes() != 3) throw DimensionError("chsh_witness_value: expected the 3-pair-mode space");
  return expectation(chsh_witness_operator(s), rho).real();
}

// --------------------------------------------------------------------- CCNR

struct CcnrResult {
  Operator witness;
  double value = 0.0;
  std::vector<double> schmidt;  // operator-Schmidt coefficients, descending
};

namespace detail {

// Orthonormal Hermitian basis {P / sqrt(2^m)} of Pauli strings on m modes.
inline std::vector<Matrix> pauli_basis(int m) {
  std::array<Eigen::Matrix2cd, 4> p;
  p[0] << 1, 0, 0, 1;
  p[1] << 0, 1, 1, 0;
  p[2] << 0, Complex(0, -1), Complex(0, 1), 0;
  p[3] << 1, 0, 0, -1;
  const std::size_t count = std::size_t{1} << (2 * m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::size_t{1} << m));
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<Eigen::Matrix2cd> f(m);
    for (int q = 0; q < m; ++q) f[q] = p[(k >> (2 * q)) & 3U];
    out.push_back(scale * tensor_single_modes(f));
  }
  return out;
}

}  // namespace detail

/// Realignment witness across modes_a | rest. Tr(W rho) = 1 - sum of the
/// operator-Schmidt coefficients of rho.
inline CcnrResult ccnr_witness(const DensityMatrix& rho, std::vector<int> modes_a) {
  const FockSpace& sp = rho.space();
  detail::require_mode_subset(sp.n_modes(), modes_a, "ccnr_witness");
  std::sort(modes_a.begin(), modes_a.end());
  const std::vector<int> modes_b = detail::complement_modes(sp.n_modes(), modes_a);
  if (modes_a.empty() || modes_b.empty()) throw ValidationError("ccnr_witness: both sides need modes");

  const int ma = static_cast<int>(modes_a.size()), mb = static_cast<int>(modes_b.size());
  const Eigen::Index da = Eigen::Index{1} << ma, db = Eigen::Index{1} << mb;
  const auto ea = detail::pauli_basis(ma), eb = detail::pauli_basis(mb);

  // Realigned rho: R((a,a'),(b,b')) = rho((a,b),(a',b')).
  auto full = [&](Eigen::Index a, Eigen::Index b) {
    return static_cast<Eigen::Index>(detail::deposit_bits(static_cast<std::uint64_t>(a), modes_a) |
                                     detail::deposit_bits(static_cast<std::uint64_t>(b), modes_b));
  };
  Matrix R(da * da, db * db);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index a2 = 0; a2 < da; ++a2)
      for (Eigen::Index b = 0; b < db; ++b)
        for (Eigen::Index b2 = 0; b2 < db; ++b2)
          R(a * da + a2, b * db + b2) = rho.matrix()(full(a, b), full(a2, b2));

  // Coefficients in the Hermitian bases: M_kl = sum R((a,a'),(b,b')) E_k(a',a) F_l(b',b).
  Matrix va(da * da, static_cast<Eigen::Index>(ea.size()));
  for (std::size_t k = 0; k < ea.size(); ++k)
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index a2 = 0; a2 < da; ++a2) va(a * da + a2, static_cast<Eigen::Index>(k)) = ea[k](a2, a);
  Matrix vb(db * db, static_cast<Eigen::Index>(eb.size()));
  for (std::size_t k = 0; k < eb.size(); ++k)
    for (Eigen::Index b = 0; b < db; ++b)
      for (Eigen::Index b2 = 0; b2 < db; ++b2) vb(b * db + b2, static_cast<Eigen::Index>(k)) = eb[k](b2, b);
  const Eigen::MatrixXd M = (va.transpose() * R * vb).real();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-14 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);

  CcnrResult out{Operator::identity(sp), 1.0, {}};
  Matrix sum = Matrix::Zero(sp.dim(), sp.dim());
  for (Eigen::Index s = 0; s < sv.size(); ++s) {
    out.schmidt.push_back(sv(s));
    if (sv(s) <= cutoff) continue;
    Matrix ga = Matrix::Zero(da, da), gb = Matrix::Zero(db, db);
    for (std::size_t k = 0; k < ea.size(); ++k) ga += svd.matrixU()(static_cast<Eigen::Index>(k), s) * ea[k];
    for (std::size_t k = 0; k < eb.size(); ++k) gb += svd.matrixV()(static_cast<Eigen::Index>(k), s) * eb[k];
    // Place on the original mode positions: renumber both sides onto 0..n-1.
    sum += tensor_on_modes(ga, modes_a, gb, modes_b);
    out.value -= sv(s);
  }
  out.witness = Operator(sp, Matrix::Identity(sp.dim(), sp.dim()) - sum);
  return out;
}

/// Split into the lower and upper halves of the modes.
inline CcnrResult ccnr_witness(const DensityMatrix& rho) {
  const int n = rho.space().n_modes();
  if (n % 2 != 0) throw ValidationError("ccnr_witness: odd mode count has no even split");
  std::vector<int> a(n / 2);
  for (int k = 0; k < n / 2; ++k) a[k] = k;
  return ccnr_witness(rho, a);
}

// --------------------------------------------------------- block positivity

struct BlockPositivityResult {
  double min = std::numeric_limits<double>::infinity();
  Vector psi_a;  // achieving product factors
  Vector psi_b;
  int restarts = 0;
  int best_restart = -1;
};

namespace detail {

inline Vector min_eigvec(const Matrix& m, double& value) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  value = es.eigenvalues()(0);
  return es.eigenvectors().col(0);
}

}  // namespace detail

/// Minimum of <psi (x) phi| W |psi (x) phi> over product vectors across
/// modes_a | rest, by alternating minimization from several starts. Start 0
/// is the product basis vector with the smallest diagonal entry; the others
/// are random with seeds derived from `seed`. A local search: the result is
/// an upper estimate of the true minimum.
inline BlockPositivityResult block_positivity_min(const Operator& w, std::vector<int> modes_a, int restarts = 64,
                                                  std::uint64_t seed = 1, unsigned threads = 1) {
  if (!w.is_hermitian(1e-10)) throw ValidationError("block_positivity_min: W is not Hermitian");
  if (restarts < 1) throw ValidationError("block_positivity_min: restarts must be positive");
  const FockSpace& sp = w.space();
  detail::require_mode_subset(sp.n_modes(), modes_a, "block_positivity_min");
  std::sort(modes_a.begin(), modes_a.end());
  const std::vector<int> modes_b = detail::complement_modes(sp.n_modes(), modes_a);
  if (modes_a.empty() || modes_b.empty()) throw ValidationError("block_positivity_min: both sides need modes");

  const Eigen::Index da = Eigen::Index{1} << modes_a.size(), db = Eigen::Index{1} << modes_b.size();
  Matrix wp(da * db, da * db);
  {
    std::vector<Eigen::Index> full(static_cast<std::size_t>(da * db));
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index b = 0; b < db; ++b)
        full[static_cast<std::size_t>(a * db + b)] = static_cast<Eigen::Index>(
            detail::deposit_bits(static_cast<std::uint64_t>(a), modes_a) |
            detail::deposit_bits(static_cast<std::uint64_t>(b), modes_b));
    for (Eigen::Index x = 0; x < da * db; ++x)
      for (Eigen::Index y = 0; y < da * db; ++y)
        wp(x, y) = w.matrix()(full[static_cast<std::size_t>(x)], full[static_cast<std::size_t>(y)]);
  }

  auto reduce_a = [&](const Vector& phi) {
    Matrix m(da, da);
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index a2 = 0; a2 < da; ++a2)
        m(a, a2) = phi.dot(wp.block(a * db, a2 * db, db, db) * phi);
    return m;
  };
  auto reduce_b = [&](const Vector& psi) {
    Matrix m = Matrix::Zero(db, db);
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index a2 = 0; a2 < da; ++a2)
        m += std::conj(psi(a)) * psi(a2) * wp.block(a * db, a2 * db, db, db);
    return m;
  };

  struct Local {
    double value;
    Vector a, b;
  };
  std::vector<Local> results(static_cast<std::size_t>(restarts));

  parallel_for(static_cast<std::size_t>(restarts), threads, [&](std::size_t r) {
    Vector phi(db);
    if (r == 0) {
      Eigen::Index at = 0;
      wp.diagonal().real().minCoeff(&at);
      phi.setZero();
      phi(at % db) = 1.0;
    } else {
      std::mt19937_64 rng(derive_seed(seed, r));
      std::normal_distribution<double> g(0.0, 1.0);
      for (Eigen::Index k = 0; k < db; ++k) phi(k) = Complex(g(rng), g(rng));
      phi.normalize();
    }
    double value = std::numeric_limits<double>::infinity();
    Vector psi;
    for (int it = 0; it < 500; ++it) {
      double va = 0.0, vb = 0.0;
      psi = detail::min_eigvec(reduce_a(phi), va);
      phi = detail::min_eigvec(reduce_b(psi), vb);
      const bool done = value - vb < 1e-14;
      value = std::min(value, vb);
      if (done) break;
    }
    results[r] = {value, psi, phi};
  });

  BlockPositivityResult out;
  out.restarts = restarts;
  for (std::size_t r = 0; r < results.size(); ++r) {
    if (results[r].value < out.min) {
      out.min = results[r].value;
      out.psi_a = results[r].a;
      out.psi_b = results[r].b;
      out.best_restart = static_cast<int>(r);
    }
  }
  return out;
}

/// A block-positive W is weakly optimal when some product state reaches
/// Tr(W sigma) = 0.
inline bool weakly_optimal(const BlockPositivityResult& r, double tol = 1e-8) { return std::abs(r.min) <= tol; }

}  // namespace mzmwit
