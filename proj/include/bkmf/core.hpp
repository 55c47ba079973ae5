#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "bkmf/errors.hpp"

namespace bkmf {

using Complex = std::complex<double>;
// All dense matrices are complex double, column-major (Eigen default).
using Cmat = Eigen::MatrixXcd;
using Cvec = Eigen::VectorXcd;
using Index = Eigen::Index;

// An n x s block of column vectors. Alias rather than a wrapper: blocks flow
// directly into Eigen expressions everywhere.
using BlockVector = Cmat;

// Relative deflation threshold used by rank decisions throughout.
inline constexpr double kDeflationTol = 1e-12;

// Matrix polynomial with s x s coefficients, P(z) = sum_i coeffs[i] z^i.
// Coefficient arithmetic is exact convolution in the degree; no trimming of
// tiny leading blocks is ever performed implicitly.
struct MatrixPolynomial {
  Index s = 0;
  std::vector<Cmat> coeffs;  // coeffs[i] is the degree-i coefficient

  MatrixPolynomial() = default;
  MatrixPolynomial(Index s_, int degree) : s(s_) {
    coeffs.assign(degree + 1, Cmat::Zero(s_, s_));
  }
  static MatrixPolynomial constant(const Cmat& c) {
    MatrixPolynomial p;
    p.s = c.rows();
    p.coeffs = {c};
    return p;
  }
  static MatrixPolynomial identity(Index s) { return constant(Cmat::Identity(s, s)); }

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }

  // Horner evaluation at a scalar point.
  Cmat eval(Complex z) const {
    Cmat y = coeffs.back();
    for (int i = degree() - 1; i >= 0; --i) y = z * y + coeffs[i];
    return y;
  }
  // Derivative P'(z), again by Horner.
  Cmat eval_derivative(Complex z) const {
    if (degree() == 0) return Cmat::Zero(s, s);
    Cmat y = double(degree()) * coeffs.back();
    for (int i = degree() - 1; i >= 1; --i) y = z * y + double(i) * coeffs[i];
    return y;
  }

  MatrixPolynomial operator+(const MatrixPolynomial& o) const {
    MatrixPolynomial r(s, std::max(degree(), o.degree()));
    for (int i = 0; i <= degree(); ++i) r.coeffs[i] += coeffs[i];
    for (int i = 0; i <= o.degree(); ++i) r.coeffs[i] += o.coeffs[i];
    return r;
  }
  MatrixPolynomial operator-(const MatrixPolynomial& o) const {
    MatrixPolynomial r(s, std::max(degree(), o.degree()));
    for (int i = 0; i <= degree(); ++i) r.coeffs[i] += coeffs[i];
    for (int i = 0; i <= o.degree(); ++i) r.coeffs[i] -= o.coeffs[i];
    return r;
  }
  // Right-multiply every coefficient: P(z) * C.
  MatrixPolynomial right_mul(const Cmat& c) const {
    MatrixPolynomial r = *this;
    for (auto& a : r.coeffs) a = a * c;
    return r;
  }
  MatrixPolynomial left_mul(const Cmat& c) const {
    MatrixPolynomial r = *this;
    for (auto& a : r.coeffs) a = c * a;
    return r;
  }
  // P(z) * (z*c1 + c0) with s x s blocks c1, c0 (degree raises by one).
  MatrixPolynomial mul_linear(const Cmat& c1, const Cmat& c0) const {
    MatrixPolynomial r(s, degree() + 1);
    for (int i = 0; i <= degree(); ++i) {
      r.coeffs[i + 1] += coeffs[i] * c1;
      r.coeffs[i] += coeffs[i] * c0;
    }
    return r;
  }
  // P(z) * (z - sigma).
  MatrixPolynomial mul_monomial(Complex sigma) const {
    return mul_linear(Cmat::Identity(s, s), -sigma * Cmat::Identity(s, s));
  }
};

// Thin rank-revealing QR of an n x s block (n >= s).
struct ThinQr {
  Cmat Q;    // n x s, orthonormal columns
  Cmat R;    // s x s upper triangular with real nonnegative diagonal, Q*R = V
  int rank;  // numerical column rank of V w.r.t. kDeflationTol * ||V||_F
};
ThinQr thin_block_qr(const Cmat& V);

// Y = Q(A) o B = sum_i A^i * B * Q_i, evaluated Horner-style with one
// application of A per degree. `apply` maps an n x s block X to A*X.
Cmat circ_apply(const MatrixPolynomial& Q,
                const std::function<Cmat(const Cmat&)>& apply, const Cmat& B);
Cmat circ_apply(const MatrixPolynomial& Q, const Cmat& A, const Cmat& B);

// Unitary reduction of (N, W) to block Hessenberg form: Q* N Q = H with
// s x s blocks (zero below the first block subdiagonal, subdiagonal blocks
// upper triangular) and Q* W = E_1 M with M s x s upper triangular.
struct BlockHessenberg {
  Cmat Q;  // js x js unitary
  Cmat H;  // js x js block upper Hessenberg
  Cmat M;  // s x s upper triangular
  // Index (1-based, counting from 2) of the first subdiagonal block that is
  // singular to tolerance, if any. Such a pair is uncontrollable; the
  // characteristic-polynomial routines refuse it.
  std::optional<int> singular_subdiagonal;
};
BlockHessenberg block_hessenberg_reduce(const Cmat& N, const Cmat& W);

// X - U (Z*U)^{-1} Z* X. Throws AssumptionsViolated when Z*U is singular to
// working precision (condition number above 1e12).
Cmat oblique_project(const Cmat& U, const Cmat& Z, const Cmat& X);

// Condition number (2-norm) of Z*U; the Petrov-Galerkin machinery reports it
// so callers can tell how trustworthy the oblique projection is.
double zu_condition(const Cmat& U, const Cmat& Z);

// Helpers shared across modules.
Cmat unit_block(Index jblocks, Index s, Index which);  // E_which, js x s
double spectral_norm(const Cmat& A);
double condition_number(const Cmat& A);  // sigma_max / sigma_min

// Dense solve of (z I - A) Y = rhs with an LU pivot-ratio singularity check;
// throws ZIsRitzValue when z is an eigenvalue of A to working precision.
Cmat shifted_solve_checked(const Cmat& A, Complex z, const Cmat& rhs);

// Execution policy for the embarrassingly parallel bound-evaluation grids.
// `parallel` uses OpenMP when compiled in and degrades to serial otherwise;
// `serial` is the reference implementation the parallel path is tested against.
enum class ExecPolicy { parallel, serial };

}  // namespace bkmf
