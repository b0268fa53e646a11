#pragma once

// Detection protocol: entanglement elimination, poisoning, paired
// measurements, witness evaluation and the repeat-until-negative loop, plus
// Monte Carlo and quadrature estimates of the negative fraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "mzmwit/fock.hpp"
#include "mzmwit/parallel.hpp"
#include "mzmwit/states.hpp"
#include "mzmwit/tunneling.hpp"
#include "mzmwit/witness.hpp"

namespace mzmwit {

/// Detection requires a value below -kDetectionThreshold; values in
/// [-kDetectionThreshold, 0) are marginal and do not count.
inline constexpr double kDetectionThreshold = 1e-10;

inline bool is_detection(double value) { return value < -kDetectionThreshold; }

struct NoiseSpec {
  double p = 0.0;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("NoiseSpec: p must lie in [0, 1]");
  }
};

namespace detail {

// One Majorana per site: both Majoranas of every pair-mode, and c + c^dag
// of every local-site mode.
inline std::vector<Matrix> site_majoranas_uncached(const FockSpace& sp) {
  std::vector<Matrix> out;
  for (int l = 1; l <= 2 * sp.n_pair_modes(); ++l) out.push_back(majorana_op(sp, l).matrix());
  for (int m = sp.n_pair_modes(); m < sp.n_modes(); ++m) {
    const Operator c = annihilation_op(sp, m);
    out.push_back((c + c.adjoint()).matrix());
  }
  return out;
}

inline const std::vector<Matrix>& site_majoranas(const FockSpace& sp) {
  static const std::vector<Matrix> mzm3 = site_majoranas_uncached(FockSpace::pair_modes(3));
  static const std::vector<Matrix> abs6 = site_majoranas_uncached(FockSpace::local_sites(6));
  if (sp.n_modes() == 3 && sp.n_pair_modes() == 3) return mzm3;
  if (sp.n_modes() == 6 && sp.n_pair_modes() == 0) return abs6;
  thread_local std::vector<Matrix> other;
  other = site_majoranas_uncached(sp);
  return other;
}

}  // namespace detail

/// E(rho) = (1 - p) rho + (p / n) sum_i gamma_i rho gamma_i, one Majorana
/// gamma_i per site (n = 6 for the six-site layouts).
inline DensityMatrix apply_poisoning(const DensityMatrix& rho, double p) {
  NoiseSpec{p}.validate();
  if (p == 0.0) return rho;
  const auto& g = detail::site_majoranas(rho.space());
  Matrix acc = Matrix::Zero(rho.space().dim(), rho.space().dim());
  for (const Matrix& gi : g) acc.noalias() += gi * rho.matrix() * gi;
  Matrix out = (1.0 - p) * rho.matrix() + (p / static_cast<double>(g.size())) * acc;
  return DensityMatrix::from_trusted(rho.space(), std::move(out));
}

struct RandomMzmSource {
  Parity parity = Parity::Odd;
  bool complex_coeffs = false;
};

using PreparedState = std::variant<MzmState, AbsState, HybridState>;
using StateSource = std::variant<MzmState, AbsState, HybridState, RandomMzmSource>;

struct ProtocolConfig {
  WitnessParams witness = WitnessParams::canonical_odd();
  TunnelCouplings couplings = TunnelCouplings::uniform();
  StateSource source = RandomMzmSource{};
  NoiseSpec noise{};
  int max_rounds = 1;
  int samples = 1;
  std::uint64_t seed = 42;
  int shots = 0;  // 0: exact expectations; otherwise copies per measured observable

  void validate() const {
    noise.validate();
    if (max_rounds < 1) throw ValidationError("ProtocolConfig: max_rounds must be at least 1");
    if (samples < 1) throw ValidationError("ProtocolConfig: samples must be at least 1");
    if (shots < 0) throw ValidationError("ProtocolConfig: shots must be nonnegative");
  }
};

struct DetectionRecord {
  int rounds_used = 0;
  bool detected = false;
  std::vector<double> witness_values;
  WitnessReport last_report;

  std::string verdict() const { return detected ? "mzm-detected" : "inconclusive"; }
};

/// Mean of `shots` projective outcomes of `op` on rho.
inline double sample_expectation(const Operator& op, const DensityMatrix& rho, int shots, std::mt19937_64& rng) {
  detail::require_compatible(op.space(), rho.space(), "sample_expectation");
  if (shots < 1) throw ValidationError("sample_expectation: shots must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(op.matrix());
  std::vector<double> probs(static_cast<std::size_t>(es.eigenvalues().size()));
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const Vector v = es.eigenvectors().col(k);
    probs[static_cast<std::size_t>(k)] = std::max(0.0, v.dot(rho.matrix() * v).real());
  }
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  double sum = 0.0;
  for (int s = 0; s < shots; ++s) sum += es.eigenvalues()(static_cast<Eigen::Index>(pick(rng)));
  return sum / shots;
}

namespace detail {

inline WitnessReport resample_pairs(WitnessReport r, const std::vector<Operator>& ops, const DensityMatrix& rho,
                                    int shots, std::mt19937_64& rng) {
  double sum = 0.0;
  for (std::size_t k = 0; k < r.per_pair.size(); ++k) {
    auto& d = r.per_pair[k];
    if (d.a != 0.0) d.d = sample_expectation(ops[k], rho, shots, rng);
    sum += d.a * d.d;
  }
  r.value = 1.0 - sum;
  return r;
}

inline ModeCut hybrid_cut(const HybridState& h) {
  ModeCut cut;
  for (int s : h.abs_labels()) {
    if (s % 2 == 1) cut.side_a.push_back(h.abs_mode_of(s));
  }
  return cut;
}

}  // namespace detail

/// One pass of the protocol on a prepared state: elimination, poisoning,
/// then the witness matching the state's space. `rng` is needed only in
/// finite-shot mode.
inline WitnessReport run_single_shot(const ProtocolConfig& config, const PreparedState& state,
                                     std::mt19937_64* rng = nullptr) {
  config.validate();
  if (config.shots > 0 && rng == nullptr) throw ValidationError("run_single_shot: finite-shot mode needs a generator");

  if (const auto* m = std::get_if<MzmState>(&state)) {
    if (m->pairing.n_pairs() != 3 || m->pairing.first_site() != 1) {
      throw DimensionError("run_single_shot: MZM states must pair all six sites");
    }
    const DensityMatrix rho = apply_poisoning(decohere_across_cut(build_mzm_state(*m), ModeCut{}), config.noise.p);
    WitnessReport r = mzm_witness_value(rho, config.witness);
    if (config.shots > 0) r = detail::resample_pairs(std::move(r), crossing_pair_parities(), rho, config.shots, *rng);
    return r;
  }
  if (const auto* a = std::get_if<AbsState>(&state)) {
    if (a->n_sites() != 6 || a->first_site != 1) throw DimensionError("run_single_shot: ABS states need sites 1..6");
    const DensityMatrix rho =
        apply_poisoning(decohere_across_cut(build_abs_state(*a), ModeCut::odd_even(6)), config.noise.p);
    WitnessReport r = abs_witness_value(rho, config.witness, config.couplings, a->sites);
    if (config.shots > 0) {
      std::vector<Operator> ops;
      for (const auto& [i, j] : WitnessParams::kCrossingPairs) {
        ops.push_back(config.witness.get(i, j) == 0.0
                          ? Operator::zero(rho.space())
                          : effective_b_operator(config.couplings, {a->sites[i - 1], a->sites[j - 1]}, {i, j},
                                                 rho.space()));
      }
      r = detail::resample_pairs(std::move(r), ops, rho, config.shots, *rng);
    }
    return r;
  }
  const auto& h = std::get<HybridState>(state);
  const DensityMatrix rho =
      apply_poisoning(decohere_across_cut(build_hybrid_state(h), detail::hybrid_cut(h)), config.noise.p);
  WitnessReport r = hybrid_witness_value(rho, h, config.witness, config.couplings);
  if (config.shots > 0) {
    r.value = sample_expectation(hybrid_witness_operator(h, config.witness, config.couplings), rho, config.shots, *rng);
  }
  return r;
}

/// Repeat loop: fresh state each round until a detection or max_rounds.
/// Round r draws from a generator seeded by derive_seed(seed, r).
inline DetectionRecord run_repeat_protocol(const ProtocolConfig& config) {
  config.validate();
  DetectionRecord rec;
  for (int round = 0; round < config.max_rounds; ++round) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(round)));
    PreparedState state = std::visit(
        [&](const auto& src) -> PreparedState {
          using T = std::decay_t<decltype(src)>;
          if constexpr (std::is_same_v<T, RandomMzmSource>) {
            return sample_mzm_uniform(src.parity, rng, src.complex_coeffs);
          } else {
            return src;
          }
        },
        config.source);
    rec.last_report = run_single_shot(config, state, &rng);
    rec.witness_values.push_back(rec.last_report.value);
    rec.rounds_used = round + 1;
    if (is_detection(rec.last_report.value)) {
      rec.detected = true;
      break;
    }
  }
  return rec;
}

struct RateResult {
  double rate = 0.0;
  double stderr_ = 0.0;
  std::int64_t samples = 0;
  std::int64_t detections = 0;
  std::int64_t marginal = 0;
  std::uint64_t seed = 0;
};

struct RateOptions {
  unsigned threads = 1;
  bool complex_coeffs = false;
};

/// Fraction of uniformly drawn MZM states whose single-shot witness value
/// is a detection. Sample k uses a generator seeded by derive_seed(seed, k).
inline RateResult monte_carlo_rate(const WitnessParams& witness, Parity parity, double p, std::int64_t samples,
                                   std::uint64_t seed, RateOptions opt = {}) {
  NoiseSpec{p}.validate();
  if (samples < 100) throw ValidationError("monte_carlo_rate: samples must be at least 100");
  const MzmBasis basis(Pairing::reference());
  // 0: nonnegative, 1: detection, 2: marginal
  std::vector<unsigned char> flag(static_cast<std::size_t>(samples), 0);
  parallel_for(static_cast<std::size_t>(samples), opt.threads, [&](std::size_t k) {
    std::mt19937_64 rng(derive_seed(seed, k));
    const MzmState s = sample_mzm_uniform(parity, rng, opt.complex_coeffs);
    const DensityMatrix rho = apply_poisoning(build_mzm_state(basis, s.parity, s.coeffs), p);
    const double v = mzm_witness_value(rho, witness).value;
    flag[k] = is_detection(v) ? 1 : (v < 0.0 ? 2 : 0);
  });
  RateResult r;
  r.samples = samples;
  r.seed = seed;
  for (unsigned char f : flag) {
    r.detections += f == 1;
    r.marginal += f == 2;
  }
  r.rate = static_cast<double>(r.detections) / static_cast<double>(samples);
  r.stderr_ = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(samples));
  return r;
}

struct SweepRow {
  double p = 0.0;
  RateResult result;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  bool monotone = true;                 // non-increasing within 3 sigma
  std::vector<std::size_t> violations;  // index i where rows[i+1] exceeds rows[i]
};

/// Every grid point reuses the same seed, hence the same sampled states.
inline SweepReport poisoning_sweep(const WitnessParams& witness, Parity parity, const std::vector<double>& p_grid,
                                   std::int64_t samples, std::uint64_t seed, RateOptions opt = {}) {
  if (p_grid.empty()) throw ValidationError("poisoning_sweep: empty grid");
  SweepReport rep;
  for (double p : p_grid) rep.rows.push_back({p, monte_carlo_rate(witness, parity, p, samples, seed, opt)});
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i].result;
    const auto& b = rep.rows[i + 1].result;
    const double sigma = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
    if (b.rate > a.rate + 3.0 * sigma) {
      rep.monotone = false;
      rep.violations.push_back(i);
    }
  }
  return rep;
}

struct AnalyticResult {
  double value = 0.0;
  std::string method;  // "quadrature" or "monte-carlo"
  double stderr_ = 0.0;
};

namespace detail {

/// (1/4) * integral over phi in [0, pi] of sin(phi) [K0 + K1 cos(phi) + K2 sin(phi) < 0].
inline double negative_sin_measure(double k0, double k1, double k2) {
  const double r = std::hypot(k1, k2);
  if (k0 <= -r) return 0.5;  // negative everywhere (up to a null set)
  if (k0 >= r) return 0.0;
  const double delta = std::atan2(k2, k1);
  const double th = std::acos(-k0 / r);
  double total = 0.0;
  for (int shift = -1; shift <= 1; ++shift) {
    const double lo = std::max(0.0, delta + th + 2.0 * M_PI * shift);
    const double hi = std::min(M_PI, delta + 2.0 * M_PI - th + 2.0 * M_PI * shift);
    if (lo < hi) total += std::cos(lo) - std::cos(hi);
  }
  return 0.25 * total;
}

}  // namespace detail

/// Volume fraction of the real coefficient sphere on which the closed-form
/// witness value is negative. With A = sin b sin psi, B = cos b sin a,
/// C = sin b cos psi, D = cos b cos a the value is K0 + K1 cos 2b + K2 sin 2b,
/// so the b-integral is done exactly and (a, psi) on a periodic midpoint
/// grid of grid x grid points. Parameters outside the closed form's support
/// fall back to Monte Carlo.
inline AnalyticResult analytic_negative_fraction(const WitnessParams& witness, Parity parity, int grid = 1024,
                                                 std::int64_t mc_samples = 100000, std::uint64_t mc_seed = 1) {
  if (!witness.in_surviving_support()) {
    const RateResult mc = monte_carlo_rate(witness, parity, 0.0, mc_samples, mc_seed);
    return {mc.rate, "monte-carlo", mc.stderr_};
  }
  if (grid < 8) throw ValidationError("analytic_negative_fraction: grid too coarse");
  const Eigen::Matrix4d q = closed_form_matrix(witness, parity);
  enum { A = 0, B = 1, C = 2, D = 3 };
  const double h = 2.0 * M_PI / grid;
  std::vector<double> sa(grid), ca(grid);
  for (int k = 0; k < grid; ++k) {
    sa[k] = std::sin((k + 0.5) * h);
    ca[k] = std::cos((k + 0.5) * h);
  }
  double acc = 0.0;
  for (int ip = 0; ip < grid; ++ip) {
    const double s = sa[ip], c = ca[ip];  // psi
    const double q_ac = q(A, A) * s * s + q(C, C) * c * c + 2.0 * q(A, C) * s * c;
    double row = 0.0;
    for (int ia = 0; ia < grid; ++ia) {
      const double sb = sa[ia], cb = ca[ia];  // alpha
      const double q_bd = q(B, B) * sb * sb + q(D, D) * cb * cb + 2.0 * q(B, D) * sb * cb;
      const double q_x = q(A, B) * s * sb + q(A, D) * s * cb + q(C, B) * c * sb + q(C, D) * c * cb;
      // 1 - [sin^2 b q_ac + cos^2 b q_bd + 2 sin b cos b q_x]
      const double k0 = 1.0 - 0.5 * (q_ac + q_bd);
      const double k1 = 0.5 * (q_ac - q_bd);
      const double k2 = -q_x;
      row += detail::negative_sin_measure(k0, k1, k2);
    }
    acc += row;
  }
  return {acc * h * h / (2.0 * M_PI * M_PI), "quadrature", 0.0};
}

}  // namespace mzmwit
