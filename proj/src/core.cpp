#include "bkmf/core.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace bkmf {

Cmat unit_block(Index jblocks, Index s, Index which) {
  Cmat e = Cmat::Zero(jblocks * s, s);
  e.block((which - 1) * s, 0, s, s) = Cmat::Identity(s, s);
  return e;
}

// BDCSVD rather than JacobiSVD: these run on projected matrices whose size
// grows with the step count, where one-sided Jacobi is an order of magnitude
// slower. Tiny inputs fall back to Jacobi (BDCSVD does the same internally).
double spectral_norm(const Cmat& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() <= 8 && A.cols() <= 8) return Eigen::JacobiSVD<Cmat>(A).singularValues()(0);
  return Eigen::BDCSVD<Cmat>(A).singularValues()(0);
}

double condition_number(const Cmat& A) {
  Eigen::BDCSVD<Cmat> svd(A);
  const auto& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

ThinQr thin_block_qr(const Cmat& V) {
  const Index n = V.rows(), s = V.cols();
  if (n < s) throw AssumptionsViolated("thin_block_qr: block is wider than tall");

  // Rank decision from a column-pivoted factorization; the returned factors
  // come from an unpivoted one so that R stays upper triangular.
  const double normV = V.norm();
  int rank = 0;
  if (normV > 0.0) {
    Eigen::ColPivHouseholderQR<Cmat> piv(V);
    const Cmat& pR = piv.matrixR();
    const double tol = kDeflationTol * normV;
    for (Index i = 0; i < s; ++i)
      if (std::abs(pR(i, i)) > tol) ++rank;
  }

  Eigen::HouseholderQR<Cmat> qr(V);
  Cmat Q = qr.householderQ() * Cmat::Identity(n, s);
  Cmat R = qr.matrixQR().topRows(s).triangularView<Eigen::Upper>();

  // Normalize phases so the diagonal of R is real and nonnegative; this makes
  // the factorization (and everything downstream) deterministic.
  for (Index i = 0; i < s; ++i) {
    Complex d = R(i, i);
    if (d != 0.0 && (d.imag() != 0.0 || d.real() < 0.0)) {
      Complex phase = d / std::abs(d);
      R.row(i) *= std::conj(phase);
      Q.col(i) *= phase;
    }
  }
  return {std::move(Q), std::move(R), rank};
}

Cmat circ_apply(const MatrixPolynomial& Q,
                const std::function<Cmat(const Cmat&)>& apply, const Cmat& B) {
  if (Q.s != B.cols())
    throw AssumptionsViolated("circ_apply: coefficient size does not match block width");
  Cmat Y = B * Q.coeffs.back();
  for (int i = Q.degree() - 1; i >= 0; --i) Y = apply(Y) + B * Q.coeffs[i];
  return Y;
}

Cmat circ_apply(const MatrixPolynomial& Q, const Cmat& A, const Cmat& B) {
  return circ_apply(Q, [&A](const Cmat& X) -> Cmat { return A * X; }, B);
}

namespace {

// Complex Householder reflector P = I - tau v v* with P* x = beta e_1,
// following the LAPACK zlarfg conventions (v(0) = 1 implied, stored in full).
struct Reflector {
  Cvec v;
  Complex tau;
  Complex beta;
};

Reflector make_reflector(const Cvec& x) {
  const Index m = x.size();
  Reflector r;
  r.v = Cvec::Zero(m);
  r.v(0) = 1.0;
  Complex alpha = x(0);
  double xnorm = m > 1 ? x.tail(m - 1).norm() : 0.0;
  if (xnorm == 0.0 && alpha.imag() == 0.0) {
    r.tau = 0.0;
    r.beta = alpha;
    return r;
  }
  double anorm = std::hypot(std::abs(alpha), xnorm);
  Complex phase = (alpha == 0.0) ? Complex(1.0) : alpha / std::abs(alpha);
  Complex beta = -phase * anorm;
  r.tau = (beta - alpha) / beta;
  Complex scale = 1.0 / (alpha - beta);
  if (m > 1) r.v.tail(m - 1) = scale * x.tail(m - 1);
  r.beta = beta;
  return r;
}

// A <- (I - conj(tau) v v*) A, acting on rows [lo, lo+len) of A.
void apply_left(Cmat& A, const Reflector& r, Index lo) {
  const Index len = r.v.size();
  if (r.tau == 0.0) return;
  Eigen::RowVectorXcd w = r.v.adjoint() * A.middleRows(lo, len);
  A.middleRows(lo, len).noalias() -= std::conj(r.tau) * r.v * w;
}

// A <- A (I - tau v v*), acting on columns [lo, lo+len) of A.
void apply_right(Cmat& A, const Reflector& r, Index lo) {
  const Index len = r.v.size();
  if (r.tau == 0.0) return;
  Cvec w = A.middleCols(lo, len) * r.v;
  A.middleCols(lo, len).noalias() -= r.tau * w * r.v.adjoint();
}

}  // namespace

BlockHessenberg block_hessenberg_reduce(const Cmat& N, const Cmat& W) {
  const Index js = N.rows(), s = W.cols();
  if (N.cols() != js || W.rows() != js || js % s != 0)
    throw AssumptionsViolated("block_hessenberg_reduce: shape mismatch");
  const Index j = js / s;

  BlockHessenberg out;
  out.Q = Cmat::Identity(js, js);
  out.H = N;
  Cmat Wk = W;

  auto push = [&](const Cvec& x, Index lo) {
    Reflector r = make_reflector(x);
    apply_left(out.H, r, lo);
    apply_right(out.H, r, lo);
    apply_left(Wk, r, lo);
    apply_right(out.Q, r, lo);
    return r.beta;
  };

  // First rotate W onto E_1 M.
  for (Index c = 0; c < s; ++c) {
    Index lo = c;
    Cvec x = Wk.col(c).segment(lo, js - lo);
    push(x, lo);
  }
  out.M = Wk.topRows(s).triangularView<Eigen::Upper>();

  // Then clear everything below the first block subdiagonal of H, one column
  // at a time; subdiagonal blocks come out upper triangular.
  for (Index bi = 0; bi < j - 1; ++bi) {
    for (Index c = bi * s; c < (bi + 1) * s; ++c) {
      Index lo = (bi + 1) * s + (c - bi * s);
      if (js - lo < 2) continue;  // nothing below to eliminate
      Cvec x = out.H.col(c).segment(lo, js - lo);
      push(x, lo);
    }
  }

  // Zero out roundoff below the block subdiagonal so the structure is exact.
  for (Index bc = 0; bc < j; ++bc) {
    Index top = std::min((bc + 2) * s, js);
    if (top < js) out.H.block(top, bc * s, js - top, s).setZero();
  }

  // Report the first singular subdiagonal block (uncontrollable pair).
  const double tol = kDeflationTol * std::max(N.norm(), 1e-300);
  for (Index bi = 1; bi < j; ++bi) {
    Cmat gamma = out.H.block(bi * s, (bi - 1) * s, s, s);
    Eigen::JacobiSVD<Cmat> svd(gamma);
    if (svd.singularValues()(s - 1) <= tol) {
      out.singular_subdiagonal = static_cast<int>(bi + 1);
      break;
    }
  }
  return out;
}

Cmat shifted_solve_checked(const Cmat& A, Complex z, const Cmat& rhs) {
  Cmat shifted = -A;
  shifted.diagonal().array() += z;
  Eigen::PartialPivLU<Cmat> lu(shifted);
  const auto& u = lu.matrixLU().diagonal();
  double big = 0.0, small = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < u.size(); ++i) {
    big = std::max(big, std::abs(u(i)));
    small = std::min(small, std::abs(u(i)));
  }
  if (!(small > big * 1e-14)) throw ZIsRitzValue(z);
  return lu.solve(rhs);
}

double zu_condition(const Cmat& U, const Cmat& Z) {
  return condition_number(Z.adjoint() * U);
}

Cmat oblique_project(const Cmat& U, const Cmat& Z, const Cmat& X) {
  if (U.rows() != Z.rows() || U.cols() != Z.cols() || U.rows() != X.rows())
    throw AssumptionsViolated("oblique_project: shape mismatch");
  Cmat C = Z.adjoint() * U;
  if (condition_number(C) > 1e12)
    throw AssumptionsViolated("oblique_project: Z*U is singular to working precision");
  Cmat Y = C.partialPivLu().solve(Z.adjoint() * X);
  return X - U * Y;
}

}  // namespace bkmf
