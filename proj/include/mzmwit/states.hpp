#pragma once

// MZM paired states, ABS product states and hybrids of the two.
//
// An MZM state lives on k pair-modes whose Majoranas carry site labels
// lo..lo+2k-1. For a pairing ((a0,b0), (a1,b1), ...) the pair fermions are
// d_q = (gamma_{a_q} - i gamma_{b_q}) / 2, so i gamma_a gamma_b = 1 - 2 d^dag d,
// and the pair-occupation basis is
//
//   |n0 n1 ...> = d_0^dag^{n0} d_1^dag^{n1} ... |vac>,
//
// with |vac> the joint +1 eigenvector of every listed pair parity.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mzmwit/fock.hpp"

namespace mzmwit {

enum class Parity { Odd, Even };

inline std::string to_string(Parity p) { return p == Parity::Odd ? "odd" : "even"; }

inline Parity parse_parity(const std::string& s) {
  if (s == "odd") return Parity::Odd;
  if (s == "even") return Parity::Even;
  throw ValidationError("parity must be \"odd\" or \"even\", got \"" + s + "\"");
}

inline int parity_sign(Parity p) { return p == Parity::Odd ? -1 : 1; }

/// Perfect matching of the Majorana sites lo..lo+2k-1 into k ordered pairs.
/// The first site of each pair plays the role of gamma_i in d = (gamma_i - i gamma_j)/2.
class Pairing {
 public:
  using Pair = std::pair<int, int>;

  explicit Pairing(std::vector<Pair> pairs) : pairs_(std::move(pairs)) { validate(); }

  /// Pairs 1-5, 3-6, 2-4.
  static Pairing reference() { return Pairing({{1, 5}, {3, 6}, {2, 4}}); }

  const std::vector<Pair>& pairs() const noexcept { return pairs_; }
  int n_pairs() const noexcept { return static_cast<int>(pairs_.size()); }
  int first_site() const noexcept { return lo_; }
  int last_site() const noexcept { return lo_ + 2 * n_pairs() - 1; }

  bool contains_site(int s) const noexcept { return s >= lo_ && s <= last_site(); }

  /// Reference Majorana label (1-based) of site `s` within the block.
  int local_label(int s) const {
    if (!contains_site(s)) {
      throw IndexError("Pairing: site " + std::to_string(s) + " not in block");
    }
    return s - lo_ + 1;
  }

  /// Index of the pair containing both sites with orientation (+1 if listed
  /// as (a,b), -1 if listed as (b,a)), or {-1, 0} if not a listed pair.
  std::pair<int, int> find_pair(int a, int b) const {
    for (int q = 0; q < n_pairs(); ++q) {
      if (pairs_[q].first == a && pairs_[q].second == b) return {q, 1};
      if (pairs_[q].first == b && pairs_[q].second == a) return {q, -1};
    }
    return {-1, 0};
  }

  friend bool operator==(const Pairing& x, const Pairing& y) { return x.pairs_ == y.pairs_; }

 private:
  void validate() {
    if (pairs_.empty()) throw ValidationError("Pairing: no pairs");
    std::vector<int> seq;
    for (const auto& [a, b] : pairs_) {
      seq.push_back(a);
      seq.push_back(b);
    }
    std::vector<int> sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    lo_ = sorted.front();
    if (lo_ < 1) throw ValidationError("Pairing: site labels start at 1");
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted[k] != lo_ + static_cast<int>(k)) {
        throw ValidationError("Pairing: sites must form a perfect matching of a contiguous label range");
      }
    }
    // The pair parities multiply to the reference total parity only for an
    // even arrangement; odd ones would silently swap the sector meaning.
    int inversions = 0;
    for (std::size_t x = 0; x < seq.size(); ++x) {
      for (std::size_t y = x + 1; y < seq.size(); ++y) inversions += seq[x] > seq[y];
    }
    if (inversions % 2 != 0) {
      throw ValidationError(
          "Pairing: orientation has odd permutation sign; reverse one pair, e.g. (b,a) for (a,b)");
    }
  }

  std::vector<Pair> pairs_;
  int lo_ = 1;
};

/// Pair occupations labelling the coefficient slots of a sector. For three
/// pairs the slots are (A, B, C, D):
///   odd:  |010>, |001>, |111>, |100>
///   even: |110>, |101>, |011>, |000>
/// written as (n0 n1 n2). Other pair counts list the sector in ascending
/// occupation-bit order (bit q = n_q).
inline std::vector<std::uint32_t> sector_labels(int n_pairs, Parity parity) {
  if (n_pairs == 3) {
    auto bits = [](int n0, int n1, int n2) -> std::uint32_t { return n0 | (n1 << 1) | (n2 << 2); };
    if (parity == Parity::Odd) return {bits(0, 1, 0), bits(0, 0, 1), bits(1, 1, 1), bits(1, 0, 0)};
    return {bits(1, 1, 0), bits(1, 0, 1), bits(0, 1, 1), bits(0, 0, 0)};
  }
  std::vector<std::uint32_t> out;
  const int want = parity == Parity::Odd ? 1 : 0;
  for (std::uint32_t s = 0; s < (1U << n_pairs); ++s) {
    if (std::popcount(s) % 2 == want) out.push_back(s);
  }
  return out;
}

/// Pair-occupation basis for a pairing, expressed in the reference
/// representation of its block.
class MzmBasis {
 public:
  explicit MzmBasis(Pairing pairing)
      : pairing_(std::move(pairing)), space_(FockSpace::pair_modes(pairing_.n_pairs())) {
    const int k = pairing_.n_pairs();
    const auto d = space_.dim();
    const Complex i(0.0, 1.0);

    std::vector<Operator> dq;
    Matrix proj = Matrix::Identity(d, d);
    for (const auto& [a, b] : pairing_.pairs()) {
      const Operator ga = majorana_op(space_, pairing_.local_label(a));
      const Operator gb = majorana_op(space_, pairing_.local_label(b));
      dq.push_back(0.5 * (ga - i * gb));
      proj = proj * (0.5 * (Matrix::Identity(d, d) + parity_op(ga, gb).matrix()));
    }

    Eigen::Index best = 0;
    proj.diagonal().real().maxCoeff(&best);
    Vector vac = proj.col(best);
    vac /= vac.norm();
    vac *= phase_fix(vac);

    basis_ = Matrix(d, d);
    for (std::uint32_t s = 0; s < static_cast<std::uint32_t>(d); ++s) {
      Vector v = vac;
      for (int q = k - 1; q >= 0; --q) {
        if ((s >> q) & 1U) v = dq[q].adjoint().matrix() * v;
      }
      basis_.col(s) = v;
    }
  }

  const Pairing& pairing() const noexcept { return pairing_; }
  const FockSpace& space() const noexcept { return space_; }

  /// Column s is the pair-occupation state with n_q = bit q of s.
  const Matrix& vectors() const noexcept { return basis_; }

  Vector state_vector(Parity parity, const std::vector<Complex>& coeffs) const {
    const auto labels = sector_labels(pairing_.n_pairs(), parity);
    if (coeffs.size() != labels.size()) {
      throw ValidationError("MZM state: expected " + std::to_string(labels.size()) +
                            " coefficients, got " + std::to_string(coeffs.size()));
    }
    Vector psi = Vector::Zero(space_.dim());
    for (std::size_t k = 0; k < labels.size(); ++k) psi += coeffs[k] * basis_.col(labels[k]);
    return psi;
  }

 private:
  // Unit phase making the largest-magnitude component real and positive;
  // ties go to the lowest index.
  static Complex phase_fix(const Vector& v) {
    double best = -1.0;
    Eigen::Index at = 0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (std::abs(v(k)) > best + 1e-12) {
        best = std::abs(v(k));
        at = k;
      }
    }
    return std::conj(v(at)) / std::abs(v(at));
  }

  Pairing pairing_;
  FockSpace space_;
  Matrix basis_;
};

struct MzmState {
  Pairing pairing = Pairing::reference();
  Parity parity = Parity::Odd;
  std::vector<Complex> coeffs;

  bool is_real(double tol = 0.0) const {
    return std::all_of(coeffs.begin(), coeffs.end(),
                       [tol](Complex c) { return std::abs(c.imag()) <= tol; });
  }

  static MzmState real(Pairing p, Parity parity, std::vector<double> c) {
    MzmState s{std::move(p), parity, {}};
    for (double x : c) s.coeffs.emplace_back(x, 0.0);
    return s;
  }
};

inline void validate_coeffs(const std::vector<Complex>& coeffs) {
  double n2 = 0.0;
  for (Complex c : coeffs) n2 += std::norm(c);
  if (std::abs(n2 - 1.0) > 1e-12) {
    throw ValidationError("MZM state: coefficients not normalized (|c|^2 sum = " +
                          std::to_string(n2) + ")");
  }
}

inline DensityMatrix build_mzm_state(const MzmBasis& basis, Parity parity,
                                     const std::vector<Complex>& coeffs) {
  validate_coeffs(coeffs);
  const Vector psi = basis.state_vector(parity, coeffs);
  return DensityMatrix::from_trusted(basis.space(), psi * psi.adjoint());
}

inline DensityMatrix build_mzm_state(const MzmState& s) {
  return build_mzm_state(MzmBasis(s.pairing), s.parity, s.coeffs);
}

inline DensityMatrix build_mzm_state(const Pairing& p, const std::array<double, 4>& coeffs,
                                     Parity parity) {
  return build_mzm_state(MzmState::real(p, parity, {coeffs.begin(), coeffs.end()}));
}

/// Reorders the pairs (new pair q = old pair perm[q]) and remaps the
/// coefficients so the physical state is unchanged.
inline MzmState permute_pairs(const MzmState& s, const std::vector<int>& perm) {
  const int k = s.pairing.n_pairs();
  std::vector<int> check = perm;
  std::sort(check.begin(), check.end());
  for (int q = 0; q < k; ++q) {
    if (static_cast<int>(check.size()) != k || check[q] != q) {
      throw ValidationError("permute_pairs: not a permutation of the pair indices");
    }
  }
  std::vector<Pairing::Pair> pairs;
  for (int q = 0; q < k; ++q) pairs.push_back(s.pairing.pairs()[perm[q]]);
  MzmState out{Pairing(std::move(pairs)), s.parity, {}};

  const auto labels = sector_labels(k, s.parity);
  out.coeffs.assign(labels.size(), Complex(0.0));
  for (std::size_t slot = 0; slot < labels.size(); ++slot) {
    const std::uint32_t new_occ = labels[slot];
    std::uint32_t old_occ = 0;
    std::vector<int> order;  // old indices of occupied pairs, in new order
    for (int q = 0; q < k; ++q) {
      if ((new_occ >> q) & 1U) {
        old_occ |= 1U << perm[q];
        order.push_back(perm[q]);
      }
    }
    int inversions = 0;
    for (std::size_t x = 0; x < order.size(); ++x) {
      for (std::size_t y = x + 1; y < order.size(); ++y) inversions += order[x] > order[y];
    }
    const auto it = std::find(labels.begin(), labels.end(), old_occ);
    const Complex c = s.coeffs.at(static_cast<std::size_t>(it - labels.begin()));
    out.coeffs[slot] = (inversions % 2 == 0) ? c : -c;
  }
  return out;
}

/// Uniform on the unit sphere of the sector's coefficient space: the real
/// 3-sphere by default, or the complex one when `complex_coeffs` is set.
inline MzmState sample_mzm_uniform(Parity parity, std::mt19937_64& rng,
                                   bool complex_coeffs = false,
                                   const Pairing& pairing = Pairing::reference()) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = sector_labels(pairing.n_pairs(), parity).size();
  std::vector<Complex> c(n);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : c) {
      const double re = gauss(rng);
      const double im = complex_coeffs ? gauss(rng) : 0.0;
      x = Complex(re, im);
      n2 += std::norm(x);
    }
  } while (n2 < 1e-300);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& x : c) x *= inv;
  return MzmState{pairing, parity, std::move(c)};
}

/// Local quasiparticle on one site: alpha = |u| c + |v| c^dag, with the site
/// density matrix [[1 - occ, conj(coh)], [coh, occ]] in the (empty, occupied)
/// basis; coh = <c>.
struct AbsSiteParams {
  double u = 1.0;
  double v = 0.0;
  double occupation = 0.0;
  Complex coherence = 0.0;

  void validate() const {
    if (u < 0.0 || v < 0.0) throw ValidationError("AbsSiteParams: u and v must be nonnegative");
    if (std::abs(u * u + v * v - 1.0) > 1e-12) {
      throw ValidationError("AbsSiteParams: u^2 + v^2 must equal 1");
    }
    if (occupation < 0.0 || occupation > 1.0) {
      throw ValidationError("AbsSiteParams: occupation outside [0, 1]");
    }
    if (std::norm(coherence) > occupation * (1.0 - occupation) + 1e-12) {
      throw ValidationError("AbsSiteParams: site density matrix not positive");
    }
  }

  Eigen::Matrix2cd density() const {
    Eigen::Matrix2cd m;
    m << 1.0 - occupation, std::conj(coherence), coherence, occupation;
    return m;
  }
};

/// Random valid site: (u, v) on the quarter circle, a random 2x2 density
/// matrix (Bloch ball), optionally without single-site coherence.
inline AbsSiteParams sample_abs_site(std::mt19937_64& rng, bool with_coherence = true) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phi = unit(rng) * 0.5 * M_PI;
  AbsSiteParams s;
  s.u = std::cos(phi);
  s.v = std::sin(phi);
  // Uniform in the Bloch ball via rejection.
  double x, y, z;
  do {
    x = 2.0 * unit(rng) - 1.0;
    y = 2.0 * unit(rng) - 1.0;
    z = 2.0 * unit(rng) - 1.0;
  } while (x * x + y * y + z * z > 1.0);
  s.occupation = 0.5 * (1.0 - z);
  s.coherence = with_coherence ? Complex(0.5 * x, 0.5 * y) : Complex(0.0);
  return s;
}

/// Product state over sites first_site, first_site+1, ...; site s sits on
/// local mode s - first_site.
struct AbsState {
  std::vector<AbsSiteParams> sites;
  int first_site = 1;

  int n_sites() const noexcept { return static_cast<int>(sites.size()); }
  const AbsSiteParams& site(int label) const {
    const int k = label - first_site;
    if (k < 0 || k >= n_sites()) {
      throw IndexError("AbsState: site " + std::to_string(label) + " not present");
    }
    return sites[k];
  }
};

inline DensityMatrix build_abs_state(const AbsState& s) {
  if (s.sites.empty()) throw ValidationError("AbsState: no sites");
  std::vector<Eigen::Matrix2cd> factors;
  for (const auto& site : s.sites) {
    site.validate();
    factors.push_back(site.density());
  }
  return DensityMatrix::from_trusted(FockSpace::local_sites(s.n_sites()),
                                     tensor_single_modes(factors));
}

inline DensityMatrix build_abs_state(const std::vector<AbsSiteParams>& params) {
  return build_abs_state(AbsState{params, 1});
}

/// MZM block on a contiguous run of sites (its pairing's labels) and ABS
/// sites on the rest of 1..n_sites. The MZM pair-modes take the low modes,
/// ABS sites follow in ascending label order.
struct HybridState {
  MzmState mzm;
  std::vector<AbsSiteParams> abs_sites;  // ascending site label order
  int n_sites = 6;

  std::vector<int> abs_labels() const {
    std::vector<int> out;
    for (int s = 1; s <= n_sites; ++s) {
      if (!mzm.pairing.contains_site(s)) out.push_back(s);
    }
    return out;
  }

  int abs_mode_of(int label) const {
    const auto labels = abs_labels();
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
      throw IndexError("HybridState: site " + std::to_string(label) + " not in ABS block");
    }
    return mzm.pairing.n_pairs() + static_cast<int>(it - labels.begin());
  }

  const AbsSiteParams& abs_site(int label) const {
    return abs_sites.at(static_cast<std::size_t>(abs_mode_of(label) - mzm.pairing.n_pairs()));
  }

  FockSpace space() const {
    const int k = mzm.pairing.n_pairs();
    return FockSpace(k + static_cast<int>(abs_sites.size()), k);
  }

  void validate() const {
    if (mzm.pairing.last_site() > n_sites) {
      throw ValidationError("HybridState: MZM block exceeds the site range");
    }
    if (abs_labels().size() != abs_sites.size()) {
      throw ValidationError("HybridState: ABS site count does not match the complement of the MZM block");
    }
    if (abs_sites.empty()) throw ValidationError("HybridState: empty ABS block");
  }
};

inline DensityMatrix build_hybrid_state(const HybridState& h) {
  h.validate();
  const DensityMatrix rm = build_mzm_state(h.mzm);
  const DensityMatrix ra = build_abs_state(AbsState{h.abs_sites, 1});
  const int k = h.mzm.pairing.n_pairs();
  std::vector<int> mm(k), am(h.abs_sites.size());
  for (int q = 0; q < k; ++q) mm[q] = q;
  for (std::size_t q = 0; q < am.size(); ++q) am[q] = k + static_cast<int>(q);
  return DensityMatrix::from_trusted(h.space(), tensor_on_modes(rm.matrix(), mm, ra.matrix(), am));
}

/// Bipartition of the local-site modes of a space.
struct ModeCut {
  std::vector<int> side_a;  // local mode indices; side B is the other local modes

  /// Sites 1,3,5,... against 2,4,6,... on a pure local-site space.
  static ModeCut odd_even(int n_local_modes) {
    ModeCut c;
    for (int m = 0; m < n_local_modes; m += 2) c.side_a.push_back(m);
    return c;
  }
};

/// Entanglement elimination. Local-site modes lose every correlation across
/// the cut and with the pair-mode block: the output is the product of the
/// marginals on (pair modes), (side A locals), (side B locals). Pair modes
/// keep their internal state, and a state with no local modes is returned
/// unchanged.
inline DensityMatrix decohere_across_cut(const DensityMatrix& rho, const ModeCut& cut) {
  const FockSpace& sp = rho.space();
  const int k = sp.n_pair_modes();
  std::vector<int> locals;
  for (int m = k; m < sp.n_modes(); ++m) locals.push_back(m);

  for (int m : cut.side_a) {
    if (m < k || m >= sp.n_modes()) {
      throw ValidationError("decohere_across_cut: cut side A must list local-site modes");
    }
  }
  detail::require_mode_subset(sp.n_modes(), cut.side_a, "decohere_across_cut");
  if (locals.empty()) {
    if (!cut.side_a.empty()) throw ValidationError("decohere_across_cut: no local modes to cut");
    return rho;
  }
  std::vector<int> side_a = cut.side_a;
  std::sort(side_a.begin(), side_a.end());
  std::vector<int> side_b;
  for (int m : locals) {
    if (!std::binary_search(side_a.begin(), side_a.end(), m)) side_b.push_back(m);
  }

  std::vector<std::vector<int>> blocks;
  if (k > 0) {
    std::vector<int> pm(k);
    for (int q = 0; q < k; ++q) pm[q] = q;
    blocks.push_back(pm);
  }
  if (!side_a.empty()) blocks.push_back(side_a);
  if (!side_b.empty()) blocks.push_back(side_b);
  if (blocks.size() == 1) return rho;

  Matrix acc = partial_trace(rho, blocks[0]).matrix();
  std::vector<int> acc_modes = blocks[0];
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const Matrix next = partial_trace(rho, blocks[b]).matrix();
    // Renumber onto 0..n-1 of the running subspace, then relabel at the end.
    std::vector<int> joined = acc_modes;
    joined.insert(joined.end(), blocks[b].begin(), blocks[b].end());
    std::vector<int> sorted = joined;
    std::sort(sorted.begin(), sorted.end());
    auto pos = [&](int m) {
      return static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), m) - sorted.begin());
    };
    std::vector<int> ma, mb;
    for (int m : acc_modes) ma.push_back(pos(m));
    for (int m : blocks[b]) mb.push_back(pos(m));
    acc = tensor_on_modes(acc, ma, next, mb);
    acc_modes = sorted;
  }
  return DensityMatrix::from_trusted(sp, std::move(acc));
}

}  // namespace mzmwit
