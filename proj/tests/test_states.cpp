#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mzmwit/states.hpp"

using namespace mzmwit;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double pp(const DensityMatrix& rho, int a, int b) { return expectation(pair_parity(rho.space(), a, b), rho).real(); }

AbsState random_abs(std::mt19937_64& rng, int n = 6) {
  AbsState s;
  for (int k = 0; k < n; ++k) s.sites.push_back(sample_abs_site(rng));
  return s;
}

}  // namespace

TEST(Pairing, Validation) {
  EXPECT_NO_THROW(Pairing::reference());
  EXPECT_THROW(Pairing({{1, 5}, {3, 6}, {2, 2}}), ValidationError);
  EXPECT_THROW(Pairing({{1, 5}, {3, 6}, {2, 7}}), ValidationError);
  // Odd orientation (5-1 instead of 1-5) is rejected; the sector labels would flip.
  EXPECT_THROW(Pairing({{5, 1}, {3, 6}, {2, 4}}), ValidationError);
  EXPECT_NO_THROW(Pairing({{5, 1}, {6, 3}, {2, 4}}));
}

TEST(MzmState, OddBasisTermPairParities) {
  const DensityMatrix rho = build_mzm_state(Pairing::reference(), {1, 0, 0, 0}, Parity::Odd);
  EXPECT_NEAR(pp(rho, 1, 5), 1.0, 1e-12);
  EXPECT_NEAR(pp(rho, 3, 6), -1.0, 1e-12);
  EXPECT_NEAR(pp(rho, 2, 4), 1.0, 1e-12);
}

TEST(MzmState, EvenVacuumTermPairParities) {
  const DensityMatrix rho = build_mzm_state(Pairing::reference(), {0, 0, 0, 1}, Parity::Even);
  EXPECT_NEAR(pp(rho, 1, 5), 1.0, 1e-12);
  EXPECT_NEAR(pp(rho, 3, 6), 1.0, 1e-12);
  EXPECT_NEAR(pp(rho, 2, 4), 1.0, 1e-12);
}

TEST(MzmState, AllSlotsFollowLabelPattern) {
  // odd: |010>, |001>, |111>, |100>; even: |110>, |101>, |011>, |000>
  const int odd[4][3] = {{0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {1, 0, 0}};
  const int even[4][3] = {{1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {0, 0, 0}};
  const int pairs[3][2] = {{1, 5}, {3, 6}, {2, 4}};
  for (int slot = 0; slot < 4; ++slot) {
    std::array<double, 4> c{0, 0, 0, 0};
    c[slot] = 1.0;
    const DensityMatrix ro = build_mzm_state(Pairing::reference(), c, Parity::Odd);
    const DensityMatrix re = build_mzm_state(Pairing::reference(), c, Parity::Even);
    for (int q = 0; q < 3; ++q) {
      EXPECT_NEAR(pp(ro, pairs[q][0], pairs[q][1]), 1 - 2 * odd[slot][q], 1e-12);
      EXPECT_NEAR(pp(re, pairs[q][0], pairs[q][1]), 1 - 2 * even[slot][q], 1e-12);
    }
  }
}

TEST(MzmState, UniformSuperpositionIsOddAndPure) {
  const DensityMatrix rho = build_mzm_state(Pairing::reference(), {0.5, 0.5, 0.5, 0.5}, Parity::Odd);
  EXPECT_NEAR(expectation(total_parity_op(rho.space()), rho).real(), -1.0, 1e-12);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
  EXPECT_NEAR((rho.matrix() * rho.matrix()).trace().real(), 1.0, 1e-12);
}

TEST(MzmState, RejectsUnnormalized) {
  EXPECT_THROW(build_mzm_state(Pairing::reference(), {1, 1, 0, 0}, Parity::Odd), ValidationError);
}

TEST(MzmState, SectorInvariantOnRandomStates) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 200; ++k) {
    for (Parity par : {Parity::Odd, Parity::Even}) {
      const DensityMatrix rho = build_mzm_state(sample_mzm_uniform(par, rng));
      const Operator tot = total_parity_op(rho.space());
      EXPECT_LT(max_abs(tot.matrix() * rho.matrix() - rho.matrix() * tot.matrix()), 1e-12);
      EXPECT_NEAR(expectation(tot, rho).real(), parity_sign(par), 1e-12);
    }
  }
}

TEST(MzmState, PermutingPairsKeepsDensityMatrix) {
  std::mt19937_64 rng(23);
  const std::vector<std::vector<int>> perms = {{0, 1, 2}, {1, 0, 2}, {2, 1, 0}, {0, 2, 1}, {1, 2, 0}, {2, 0, 1}};
  for (int k = 0; k < 50; ++k) {
    for (Parity par : {Parity::Odd, Parity::Even}) {
      const MzmState s = sample_mzm_uniform(par, rng);
      const DensityMatrix rho = build_mzm_state(s);
      for (const auto& perm : perms) {
        const DensityMatrix r2 = build_mzm_state(permute_pairs(s, perm));
        EXPECT_LT(max_abs(rho.matrix() - r2.matrix()), 1e-12);
      }
    }
  }
}

TEST(MzmState, AlternativePairingLivesInSameSector) {
  const Pairing p({{1, 2}, {3, 4}, {5, 6}});
  const DensityMatrix rho = build_mzm_state(p, {0.5, 0.5, 0.5, 0.5}, Parity::Even);
  EXPECT_NEAR(expectation(total_parity_op(rho.space()), rho).real(), 1.0, 1e-12);
}

TEST(Sampler, MeanAndSecondMoment) {
  std::mt19937_64 rng(42);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = sample_mzm_uniform(Parity::Odd, rng).coeffs[0].real();
    sum += a;
    sum2 += a * a;
  }
  const double mean = sum / n;
  EXPECT_LT(std::abs(mean), 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(sum2 / n, 0.25, 0.0025);

  // Independent oracle: rejection sampling from the 4-cube, projected to the sphere.
  std::mt19937_64 rng2(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double osum2 = 0.0;
  int accepted = 0;
  while (accepted < n) {
    double x[4], r2 = 0.0;
    for (double& v : x) {
      v = u(rng2);
      r2 += v * v;
    }
    if (r2 > 1.0 || r2 < 1e-12) continue;
    osum2 += x[0] * x[0] / r2;
    ++accepted;
  }
  EXPECT_NEAR(osum2 / n, 0.25, 0.0025);
  EXPECT_NEAR(sum2 / n, osum2 / n, 0.005);
}

TEST(Sampler, SingleCoordinateKolmogorovSmirnov) {
  std::mt19937_64 rng(2024);
  const int n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = sample_mzm_uniform(Parity::Even, rng).coeffs[2].real();
  std::sort(xs.begin(), xs.end());
  auto cdf = [](double u) { return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / M_PI; };
  double ks = 0.0;
  for (int k = 0; k < n; ++k) {
    const double f = cdf(xs[k]);
    ks = std::max({ks, std::abs(f - static_cast<double>(k) / n), std::abs(f - static_cast<double>(k + 1) / n)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(Sampler, DeterministicForSeed) {
  std::mt19937_64 a(42), b(42);
  for (int k = 0; k < 100; ++k) {
    const auto x = sample_mzm_uniform(Parity::Odd, a), y = sample_mzm_uniform(Parity::Odd, b);
    EXPECT_EQ(x.coeffs, y.coeffs);
  }
}

TEST(Sampler, ComplexModeIsNormalized) {
  std::mt19937_64 rng(1);
  const MzmState s = sample_mzm_uniform(Parity::Odd, rng, true);
  EXPECT_FALSE(s.is_real());
  EXPECT_NO_THROW(validate_coeffs(s.coeffs));
  EXPECT_NEAR(build_mzm_state(s).trace().real(), 1.0, 1e-12);
}

TEST(AbsStateBuild, EmptySites) {
  const DensityMatrix rho = build_abs_state(std::vector<AbsSiteParams>(6));
  EXPECT_NEAR(rho.matrix()(0, 0).real(), 1.0, 1e-15);
  EXPECT_NEAR(rho.matrix().cwiseAbs().sum(), 1.0, 1e-15);
}

TEST(AbsStateBuild, SiteSixOccupied) {
  std::vector<AbsSiteParams> s(6);
  s[5].occupation = 1.0;
  const DensityMatrix rho = build_abs_state(s);
  // |000001> in site order 1..6 is mode 5 occupied: index 32.
  EXPECT_NEAR(rho.matrix()(32, 32).real(), 1.0, 1e-15);
  EXPECT_NEAR(expectation(number_op(rho.space(), 5), rho).real(), 1.0, 1e-15);
}

TEST(AbsStateBuild, PartialTraceRetensorRoundTrip) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const DensityMatrix rho = build_abs_state(random_abs(rng));
    const DensityMatrix a = partial_trace(rho, {0, 1, 2});
    const DensityMatrix b = partial_trace(rho, {3, 4, 5});
    EXPECT_LT(max_abs(tensor_on_modes(a.matrix(), {0, 1, 2}, b.matrix(), {3, 4, 5}) - rho.matrix()), 1e-12);
    const DensityMatrix odd = partial_trace(rho, {0, 2, 4});
    const DensityMatrix even = partial_trace(rho, {1, 3, 5});
    EXPECT_LT(max_abs(tensor_on_modes(odd.matrix(), {0, 2, 4}, even.matrix(), {1, 3, 5}) - rho.matrix()), 1e-12);
    EXPECT_GT(rho.min_eigenvalue(), -1e-10);
  }
}

TEST(AbsStateBuild, InvalidSite) {
  std::vector<AbsSiteParams> s(6);
  s[0].u = 0.5;
  EXPECT_THROW(build_abs_state(s), ValidationError);
  s[0].u = 1.0;
  s[0].occupation = 0.5;
  s[0].coherence = 0.6;
  EXPECT_THROW(build_abs_state(s), ValidationError);
}

TEST(Hybrid, DimensionBookkeeping) {
  HybridState h;
  h.mzm = MzmState::real(Pairing({{1, 4}, {2, 3}}), Parity::Odd, {1.0, 0.0});
  h.abs_sites = {AbsSiteParams{}, AbsSiteParams{}};
  const DensityMatrix rho = build_hybrid_state(h);
  EXPECT_EQ(rho.space().dim(), 16);
  EXPECT_EQ(rho.space().n_pair_modes(), 2);
}

TEST(Hybrid, IsTensorProductOfParts) {
  std::mt19937_64 rng(8);
  HybridState h;
  h.mzm = sample_mzm_uniform(Parity::Even, rng, false, Pairing({{1, 4}, {2, 3}}));
  h.abs_sites = {sample_abs_site(rng), sample_abs_site(rng)};
  const DensityMatrix rho = build_hybrid_state(h);
  const DensityMatrix rm = build_mzm_state(h.mzm);
  const DensityMatrix ra = build_abs_state(AbsState{h.abs_sites, 1});
  EXPECT_LT(max_abs(partial_trace(rho, {0, 1}).matrix() - rm.matrix()), 1e-12);
  EXPECT_LT(max_abs(partial_trace(rho, {2, 3}).matrix() - ra.matrix()), 1e-12);
}

TEST(Hybrid, RejectsOverlap) {
  HybridState h;
  h.mzm = MzmState::real(Pairing({{1, 4}, {2, 3}}), Parity::Odd, {1.0, 0.0});
  h.abs_sites = {AbsSiteParams{}, AbsSiteParams{}, AbsSiteParams{}};  // would overlap the MZM block
  EXPECT_THROW(build_hybrid_state(h), ValidationError);
}

TEST(Decohere, ProductStateIsFixedPoint) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const DensityMatrix rho = build_abs_state(random_abs(rng));
    const DensityMatrix out = decohere_across_cut(rho, ModeCut::odd_even(6));
    EXPECT_LT(max_abs(out.matrix() - rho.matrix()), 1e-12);
  }
}

TEST(Decohere, EntangledPairLosesCrossCutCoherence) {
  const FockSpace sp(2);
  Vector psi = Vector::Zero(4);
  psi(0) = psi(3) = M_SQRT1_2;
  const DensityMatrix out = decohere_across_cut(DensityMatrix::pure(sp, psi), ModeCut{{0}});
  // Blocks coupling different occupations of mode 0 carry no mode-1 correlation:
  // the output is the product of marginals, here I/4.
  EXPECT_LT(max_abs(out.matrix() - 0.25 * Matrix::Identity(4, 4)), 1e-12);
  EXPECT_EQ(out.matrix()(0, 3), Complex(0.0));
  EXPECT_EQ(out.matrix()(3, 0), Complex(0.0));
}

TEST(Decohere, MzmStateBitIdentical) {
  std::mt19937_64 rng(6);
  const DensityMatrix rho = build_mzm_state(sample_mzm_uniform(Parity::Odd, rng));
  const DensityMatrix out = decohere_across_cut(rho, ModeCut{});
  EXPECT_TRUE((out.matrix().array() == rho.matrix().array()).all());
}

TEST(Decohere, InvalidCut) {
  const DensityMatrix rho = DensityMatrix::maximally_mixed(FockSpace(2));
  EXPECT_THROW(decohere_across_cut(rho, ModeCut{{2}}), ValidationError);
  EXPECT_THROW(decohere_across_cut(rho, ModeCut{{0, 0}}), ValidationError);
  const DensityMatrix mzm = build_mzm_state(Pairing::reference(), {1, 0, 0, 0}, Parity::Odd);
  EXPECT_THROW(decohere_across_cut(mzm, ModeCut{{0}}), ValidationError);
}

TEST(Decohere, IdempotentOnRandomMixedStates) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  Matrix a(16, 16);
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index j = 0; j < 16; ++j) a(i, j) = Complex(g(rng), g(rng));
  Matrix r = a * a.adjoint();
  r /= r.trace().real();
  const DensityMatrix rho(FockSpace(4), r);
  const DensityMatrix once = decohere_across_cut(rho, ModeCut{{0, 2}});
  const DensityMatrix twice = decohere_across_cut(once, ModeCut{{0, 2}});
  EXPECT_LT(max_abs(once.matrix() - twice.matrix()), 1e-12);
  EXPECT_NEAR(once.trace().real(), 1.0, 1e-12);
  EXPECT_GT(once.min_eigenvalue(), -1e-10);
}
