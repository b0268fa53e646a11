#pragma once

// Dense operator algebra on small fermionic Fock spaces.
//
// Basis states are occupation bitstrings with mode 0 in the least
// significant bit. Annihilation operators use the Jordan-Wigner sign string
// over the lower modes:
//
//   c_k |n> = (-1)^(n_0 + ... + n_{k-1}) |n - e_k>   if n_k = 1
//
// Majorana labels are 1-based: gamma_{2k+1} = c_k + c_k^dag and
// gamma_{2k+2} = -i (c_k^dag - c_k), so labels (1,2) live on mode 0,
// (3,4) on mode 1 and (5,6) on mode 2.

#include <algorithm>
#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mzmwit/errors.hpp"

namespace mzmwit {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPositivityTol = 1e-10;
inline constexpr int kMaxModes = 12;

/// Fock space of `n_modes` fermionic modes. The first `n_pair_modes` modes
/// are Majorana-pair modes (topological pairing), the rest are local sites.
/// The split is descriptive only; dimension compatibility ignores it.
class FockSpace {
 public:
  explicit FockSpace(int n_modes, int n_pair_modes = 0)
      : n_modes_(n_modes), n_pair_modes_(n_pair_modes) {
    if (n_modes < 1 || n_modes > kMaxModes) {
      throw ValidationError("FockSpace: n_modes must be in [1, " +
                            std::to_string(kMaxModes) + "], got " +
                            std::to_string(n_modes));
    }
    if (n_pair_modes < 0 || n_pair_modes > n_modes) {
      throw ValidationError("FockSpace: n_pair_modes out of range");
    }
  }

  static FockSpace local_sites(int n) { return FockSpace(n, 0); }
  static FockSpace pair_modes(int n) { return FockSpace(n, n); }

  int n_modes() const noexcept { return n_modes_; }
  int n_pair_modes() const noexcept { return n_pair_modes_; }
  int n_local_modes() const noexcept { return n_modes_ - n_pair_modes_; }
  Eigen::Index dim() const noexcept { return Eigen::Index{1} << n_modes_; }

  bool compatible(const FockSpace& other) const noexcept {
    return n_modes_ == other.n_modes_;
  }

 private:
  int n_modes_;
  int n_pair_modes_;
};

namespace detail {

inline void require_compatible(const FockSpace& a, const FockSpace& b,
                               const char* where) {
  if (!a.compatible(b)) {
    throw DimensionError(std::string(where) + ": Fock spaces differ (" +
                         std::to_string(a.n_modes()) + " vs " +
                         std::to_string(b.n_modes()) + " modes)");
  }
}

inline void require_square(const FockSpace& space, const Matrix& m,
                           const char* where) {
  if (m.rows() != space.dim() || m.cols() != space.dim()) {
    throw DimensionError(std::string(where) + ": matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", space dimension is " +
                         std::to_string(space.dim()));
  }
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Linear operator on a Fock space, stored densely.
class Operator {
 public:
  Operator(FockSpace space, Matrix matrix)
      : space_(space), matrix_(std::move(matrix)) {
    detail::require_square(space_, matrix_, "Operator");
  }

  static Operator identity(const FockSpace& space) {
    return Operator(space, Matrix::Identity(space.dim(), space.dim()));
  }
  static Operator zero(const FockSpace& space) {
    return Operator(space, Matrix::Zero(space.dim(), space.dim()));
  }

  const FockSpace& space() const noexcept { return space_; }
  const Matrix& matrix() const noexcept { return matrix_; }

  Operator adjoint() const { return Operator(space_, matrix_.adjoint()); }

  bool is_hermitian(double tol = kHermitianTol) const {
    return detail::max_abs(matrix_ - matrix_.adjoint()) <= tol;
  }

  Operator& operator+=(const Operator& rhs) {
    detail::require_compatible(space_, rhs.space_, "Operator +=");
    matrix_ += rhs.matrix_;
    return *this;
  }
  Operator& operator-=(const Operator& rhs) {
    detail::require_compatible(space_, rhs.space_, "Operator -=");
    matrix_ -= rhs.matrix_;
    return *this;
  }
  Operator& operator*=(Complex s) {
    matrix_ *= s;
    return *this;
  }

  friend Operator operator+(Operator lhs, const Operator& rhs) { return lhs += rhs; }
  friend Operator operator-(Operator lhs, const Operator& rhs) { return lhs -= rhs; }
  friend Operator operator*(Operator lhs, Complex s) { return lhs *= s; }
  friend Operator operator*(Complex s, Operator rhs) { return rhs *= s; }
  friend Operator operator*(const Operator& lhs, const Operator& rhs) {
    detail::require_compatible(lhs.space_, rhs.space_, "Operator *");
    return Operator(lhs.space_, lhs.matrix_ * rhs.matrix_);
  }

 private:
  FockSpace space_;
  Matrix matrix_;
};

inline Operator anticommutator(const Operator& a, const Operator& b) {
  return a * b + b * a;
}

inline Operator commutator(const Operator& a, const Operator& b) {
  return a * b - b * a;
}

/// Unit-trace, Hermitian, positive semidefinite operator.
class DensityMatrix {
 public:
  /// Validates trace (1e-10), Hermiticity (1e-12) and positivity (-1e-10).
  DensityMatrix(FockSpace space, Matrix matrix)
      : space_(space), matrix_(std::move(matrix)) {
    detail::require_square(space_, matrix_, "DensityMatrix");
    validate();
  }

  /// Skips validation. For results of maps already known to preserve the
  /// density-matrix invariants (channels, tensor products, marginals).
  static DensityMatrix from_trusted(FockSpace space, Matrix matrix) {
    return DensityMatrix(space, std::move(matrix), Trusted{});
  }

  static DensityMatrix pure(const FockSpace& space, const Vector& psi) {
    if (psi.size() != space.dim()) {
      throw DimensionError("DensityMatrix::pure: vector size mismatch");
    }
    const double norm = psi.norm();
    if (std::abs(norm - 1.0) > 1e-10) {
      throw ValidationError("DensityMatrix::pure: state is not normalized");
    }
    return from_trusted(space, psi * psi.adjoint());
  }

  static DensityMatrix basis_state(const FockSpace& space, std::uint64_t occupations) {
    if (occupations >= static_cast<std::uint64_t>(space.dim())) {
      throw IndexError("DensityMatrix::basis_state: occupation out of range");
    }
    Matrix m = Matrix::Zero(space.dim(), space.dim());
    m(static_cast<Eigen::Index>(occupations), static_cast<Eigen::Index>(occupations)) = 1.0;
    return from_trusted(space, std::move(m));
  }

  static DensityMatrix maximally_mixed(const FockSpace& space) {
    const auto d = space.dim();
    return from_trusted(space, Matrix::Identity(d, d) / static_cast<double>(d));
  }

  const FockSpace& space() const noexcept { return space_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  Complex trace() const { return matrix_.trace(); }

  /// Smallest eigenvalue; a cheap positivity diagnostic.
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  struct Trusted {};
  DensityMatrix(FockSpace space, Matrix matrix, Trusted)
      : space_(space), matrix_(std::move(matrix)) {
    detail::require_square(space_, matrix_, "DensityMatrix");
  }

  void validate() const {
    if (std::abs(matrix_.trace() - Complex(1.0, 0.0)) > kPositivityTol) {
      throw ValidationError("DensityMatrix: trace differs from 1");
    }
    if (detail::max_abs(matrix_ - matrix_.adjoint()) > kHermitianTol) {
      throw ValidationError("DensityMatrix: not Hermitian");
    }
    if (min_eigenvalue() < -kPositivityTol) {
      throw ValidationError("DensityMatrix: negative eigenvalue");
    }
  }

  FockSpace space_;
  Matrix matrix_;
};

/// c_mode with the Jordan-Wigner string over lower modes.
inline Operator annihilation_op(const FockSpace& space, int mode) {
  if (mode < 0 || mode >= space.n_modes()) {
    throw IndexError("annihilation_op: mode " + std::to_string(mode) +
                     " outside [0, " + std::to_string(space.n_modes()) + ")");
  }
  const auto d = space.dim();
  const std::uint64_t bit = std::uint64_t{1} << mode;
  const std::uint64_t lower = bit - 1;
  Matrix m = Matrix::Zero(d, d);
  for (std::uint64_t s = 0; s < static_cast<std::uint64_t>(d); ++s) {
    if ((s & bit) == 0) continue;
    const double sign = (std::popcount(s & lower) % 2 == 0) ? 1.0 : -1.0;
    m(static_cast<Eigen::Index>(s ^ bit), static_cast<Eigen::Index>(s)) = sign;
  }
  return Operator(space, std::move(m));
}

inline Operator creation_op(const FockSpace& space, int mode) {
  return annihilation_op(space, mode).adjoint();
}

inline Operator number_op(const FockSpace& space, int mode) {
  return creation_op(space, mode) * annihilation_op(space, mode);
}

/// [gamma_1, ..., gamma_{2N}] in the reference mode assignment; index k of
/// the result holds Majorana label k + 1.
inline std::vector<Operator> majorana_ops(const FockSpace& space) {
  std::vector<Operator> out;
  out.reserve(2 * static_cast<std::size_t>(space.n_modes()));
  const Complex i(0.0, 1.0);
  for (int k = 0; k < space.n_modes(); ++k) {
    const Operator c = annihilation_op(space, k);
    const Operator cd = c.adjoint();
    out.push_back(cd + c);
    out.push_back(-i * (cd - c));
  }
  return out;
}

/// Single Majorana by 1-based label.
inline Operator majorana_op(const FockSpace& space, int label) {
  if (label < 1 || label > 2 * space.n_modes()) {
    throw IndexError("majorana_op: label " + std::to_string(label) + " out of range");
  }
  const int mode = (label - 1) / 2;
  const Operator c = annihilation_op(space, mode);
  const Operator cd = c.adjoint();
  if ((label - 1) % 2 == 0) return cd + c;
  return Complex(0.0, -1.0) * (cd - c);
}

/// P = i gamma_a gamma_b. Hermitian with spectrum {+1, -1} when a != b.
inline Operator parity_op(const Operator& gamma_a, const Operator& gamma_b) {
  detail::require_compatible(gamma_a.space(), gamma_b.space(), "parity_op");
  return Complex(0.0, 1.0) * (gamma_a * gamma_b);
}

/// Pair parity i gamma_a gamma_b by Majorana labels.
inline Operator pair_parity(const FockSpace& space, int label_a, int label_b) {
  if (label_a == label_b) {
    throw ValidationError("pair_parity: labels must differ");
  }
  return parity_op(majorana_op(space, label_a), majorana_op(space, label_b));
}

/// (-1)^(total occupation), diagonal in the occupation basis.
inline Operator total_parity_op(const FockSpace& space) {
  const auto d = space.dim();
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index s = 0; s < d; ++s) {
    m(s, s) = (std::popcount(static_cast<std::uint64_t>(s)) % 2 == 0) ? 1.0 : -1.0;
  }
  return Operator(space, std::move(m));
}

/// Tr(op * rho).
inline Complex expectation(const Operator& op, const DensityMatrix& rho) {
  detail::require_compatible(op.space(), rho.space(), "expectation");
  // Tr(A B) = sum_ij A_ij B_ji without forming the product.
  return op.matrix().cwiseProduct(rho.matrix().transpose()).sum();
}

namespace detail {

// Scatter the bits of `packed` into the positions listed in `modes`.
inline std::uint64_t deposit_bits(std::uint64_t packed, const std::vector<int>& modes) {
  std::uint64_t out = 0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if ((packed >> k) & 1U) out |= std::uint64_t{1} << modes[k];
  }
  return out;
}

inline std::vector<int> complement_modes(int n_modes, const std::vector<int>& modes) {
  std::vector<int> rest;
  for (int m = 0; m < n_modes; ++m) {
    if (std::find(modes.begin(), modes.end(), m) == modes.end()) rest.push_back(m);
  }
  return rest;
}

inline void require_mode_subset(int n_modes, const std::vector<int>& modes,
                                const char* where) {
  std::vector<int> sorted = modes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError(std::string(where) + ": repeated mode");
  }
  for (int m : sorted) {
    if (m < 0 || m >= n_modes) {
      throw IndexError(std::string(where) + ": mode " + std::to_string(m) +
                       " out of range");
    }
  }
}

}  // namespace detail

/// Reduced state on `keep_modes` (qubit-picture partial trace). Kept modes
/// are renumbered in ascending order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep_modes) {
  const int n = rho.space().n_modes();
  if (keep_modes.empty()) {
    throw ValidationError("partial_trace: keep_modes is empty");
  }
  detail::require_mode_subset(n, keep_modes, "partial_trace");
  std::sort(keep_modes.begin(), keep_modes.end());
  const std::vector<int> traced = detail::complement_modes(n, keep_modes);

  const int k = static_cast<int>(keep_modes.size());
  const std::uint64_t dk = std::uint64_t{1} << k;
  const std::uint64_t dt = std::uint64_t{1} << traced.size();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  const Matrix& m = rho.matrix();
  for (std::uint64_t a = 0; a < dk; ++a) {
    const std::uint64_t fa = detail::deposit_bits(a, keep_modes);
    for (std::uint64_t b = 0; b < dk; ++b) {
      const std::uint64_t fb = detail::deposit_bits(b, keep_modes);
      Complex acc = 0.0;
      for (std::uint64_t t = 0; t < dt; ++t) {
        const std::uint64_t ft = detail::deposit_bits(t, traced);
        acc += m(static_cast<Eigen::Index>(fa | ft), static_cast<Eigen::Index>(fb | ft));
      }
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  const int kept_pairs = static_cast<int>(std::count_if(
      keep_modes.begin(), keep_modes.end(),
      [&](int mode) { return mode < rho.space().n_pair_modes(); }));
  return DensityMatrix::from_trusted(FockSpace(k, kept_pairs), std::move(out));
}

/// Places `a` on `modes_a` and `b` on `modes_b` of a space with
/// |modes_a| + |modes_b| modes (qubit-picture tensor product).
inline Matrix tensor_on_modes(const Matrix& a, const std::vector<int>& modes_a,
                              const Matrix& b, const std::vector<int>& modes_b) {
  const int n = static_cast<int>(modes_a.size() + modes_b.size());
  std::vector<int> all = modes_a;
  all.insert(all.end(), modes_b.begin(), modes_b.end());
  detail::require_mode_subset(n, all, "tensor_on_modes");
  if (a.rows() != (Eigen::Index{1} << modes_a.size()) ||
      b.rows() != (Eigen::Index{1} << modes_b.size())) {
    throw DimensionError("tensor_on_modes: factor dimension mismatch");
  }
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix out(d, d);
  for (Eigen::Index x = 0; x < d; ++x) {
    std::uint64_t xa = 0, xb = 0;
    for (std::size_t k = 0; k < modes_a.size(); ++k) xa |= ((x >> modes_a[k]) & 1U) << k;
    for (std::size_t k = 0; k < modes_b.size(); ++k) xb |= ((x >> modes_b[k]) & 1U) << k;
    for (Eigen::Index y = 0; y < d; ++y) {
      std::uint64_t ya = 0, yb = 0;
      for (std::size_t k = 0; k < modes_a.size(); ++k) ya |= ((y >> modes_a[k]) & 1U) << k;
      for (std::size_t k = 0; k < modes_b.size(); ++k) yb |= ((y >> modes_b[k]) & 1U) << k;
      out(x, y) = a(static_cast<Eigen::Index>(xa), static_cast<Eigen::Index>(ya)) *
                  b(static_cast<Eigen::Index>(xb), static_cast<Eigen::Index>(yb));
    }
  }
  return out;
}

/// Tensor product of single-mode 2x2 matrices; factors[k] acts on mode k.
inline Matrix tensor_single_modes(const std::vector<Eigen::Matrix2cd>& factors) {
  Matrix out = Matrix::Ones(1, 1);
  // Higher modes are more significant, so each new factor goes on the left.
  for (const auto& f : factors) {
    Matrix next(out.rows() * 2, out.cols() * 2);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        next.block(r * out.rows(), c * out.cols(), out.rows(), out.cols()) = f(r, c) * out;
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace mzmwit
