#include "bkmf/charpoly.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <limits>

namespace bkmf {

namespace {

// Largest block norm strictly below the first block subdiagonal; used to
// verify Hessenberg structure before running a recurrence that ignores that
// part of the matrix.
double below_subdiagonal_norm(const Cmat& H, Index s) {
  const Index j = H.rows() / s;
  double worst = 0.0;
  for (Index bi = 0; bi + 2 < j; ++bi)
    worst = std::max(worst,
                     H.block((bi + 2) * s, bi * s, (j - bi - 2) * s, s).norm());
  return worst;
}

void require_hessenberg(const Cmat& H, Index s) {
  if (H.rows() != H.cols() || H.rows() % s != 0)
    throw AssumptionsViolated("matrix is not square with block size " +
                              std::to_string(s));
  if (below_subdiagonal_norm(H, s) > 1e-12 * std::max(1.0, H.norm()))
    throw AssumptionsViolated("matrix is not block upper Hessenberg");
}

Cmat checked_inverse(const Cmat& G, int subdiag_index) {
  if (condition_number(G) > 1e12) throw SingularSubdiagonal(subdiag_index);
  return G.inverse();
}

// (z*c1 + c0) * P, the left-multiplication analogue of mul_linear.
MatrixPolynomial left_mul_linear(const MatrixPolynomial& p, const Cmat& c1,
                                 const Cmat& c0) {
  MatrixPolynomial r(p.s, p.degree() + 1);
  for (int i = 0; i <= p.degree(); ++i) {
    r.coeffs[i + 1] += c1 * p.coeffs[i];
    r.coeffs[i] += c0 * p.coeffs[i];
  }
  return r;
}

}  // namespace

MatrixPolynomial charpoly_hessenberg_natural(const Cmat& H, Index s) {
  require_hessenberg(H, s);
  const Index j = H.rows() / s;
  auto blk = [&](Index r, Index c) { return H.block((r - 1) * s, (c - 1) * s, s, s); };

  // Forward elimination: Q[0] = I and Q[i] has Q[i](H) o E_1 = E_{i+1} Gamma_{i+1}
  // (zero for i = j). cinv[h] is the inverse of the trailing subdiagonal factor
  // of Q[h], i.e. Gamma_{h+1}^{-1}, with cinv[0] = I.
  std::vector<MatrixPolynomial> Q;
  Q.push_back(MatrixPolynomial::identity(s));
  std::vector<Cmat> cinv{Cmat::Identity(s, s)};
  for (Index i = 1; i < j; ++i)
    cinv.push_back(checked_inverse(blk(i + 1, i), static_cast<int>(i + 1)));

  for (Index i = 1; i <= j; ++i) {
    MatrixPolynomial next =
        Q[i - 1].mul_linear(cinv[i - 1], -cinv[i - 1] * blk(i, i));
    for (Index h = 1; h < i; ++h)
      next = next - Q[h - 1].right_mul(cinv[h - 1] * blk(h, i));
    Q.push_back(std::move(next));
  }
  return Q[j];
}

MatrixPolynomial charpoly_hessenberg(const Cmat& H, const Cmat& M) {
  const Index s = M.rows();
  if (M.cols() != s || condition_number(M) > 1e12)
    throw AssumptionsViolated("starting-block factor M is not invertible");
  MatrixPolynomial nat = charpoly_hessenberg_natural(H, s);
  const Index j = H.rows() / s;
  // Right factor Gamma_j ... Gamma_2 turns the natural leading coefficient
  // Gamma_2^{-1} ... Gamma_j^{-1} into the identity.
  Cmat lc_inv = Cmat::Identity(s, s);
  for (Index i = j; i >= 2; --i) lc_inv = lc_inv * H.block((i - 1) * s, (i - 2) * s, s, s);
  return nat.left_mul(M.inverse()).right_mul(lc_inv * M);
}

RationalCharPoly charpoly_rational(const Cmat& H, const Cmat& K,
                                   const std::vector<Complex>& sigmas) {
  const Index js = H.rows();
  const Index j = static_cast<Index>(sigmas.size()) + 1;
  if (js % j != 0 || K.rows() != js || K.cols() != js || H.cols() != js)
    throw AssumptionsViolated("pencil dimensions do not match the pole count");
  const Index s = js / j;
  require_hessenberg(H, s);
  require_hessenberg(K, s);
  auto hblk = [&](Index r, Index c) { return H.block((r - 1) * s, (c - 1) * s, s, s); };
  auto kblk = [&](Index r, Index c) { return K.block((r - 1) * s, (c - 1) * s, s, s); };

  // The subdiagonal of the pencil z K - H must factor as (z - sigma_i) * K_{i+1,i};
  // that is exactly the statement that step i of the decomposition used the
  // finite pole sigma_i.
  const double scale = std::max(1.0, H.norm() + K.norm());
  for (Index i = 1; i < j; ++i) {
    if ((hblk(i + 1, i) - sigmas[i - 1] * kblk(i + 1, i)).norm() >
        1e-10 * scale * std::max(1.0, std::abs(sigmas[i - 1])))
      throw AssumptionsViolated(
          "pencil subdiagonal is inconsistent with the supplied poles");
  }

  // Back-substitution through the block rows of (z K - H) y(z) = E_1, cleared
  // of denominators: Theta_j = I and
  //   Theta_{i-1}(z) = -Gamma_i^{-1} sum_{h=i}^{j} L_{i,h}(z)
  //                     prod_{t=i}^{h-1} (z - sigma_t) Theta_h(z),
  // with L_{i,h}(z) = z K_{i,h} - H_{i,h} and Gamma_i = K_{i,i-1}. Block row 1
  // then assembles the natural characteristic polynomial.
  std::vector<MatrixPolynomial> theta(j + 1);
  theta[j] = MatrixPolynomial::identity(s);
  auto row_sum = [&](Index i) {
    MatrixPolynomial acc(s, 0);
    for (Index h = i; h <= j; ++h) {
      MatrixPolynomial term = theta[h];
      for (Index t = i; t < h; ++t) term = term.mul_monomial(sigmas[t - 1]);
      term = left_mul_linear(term, kblk(i, h), -hblk(i, h));
      acc = acc + term;
    }
    return acc;
  };
  for (Index i = j; i >= 2; --i) {
    Cmat ginv = checked_inverse(kblk(i, i - 1), static_cast<int>(i));
    theta[i - 1] = row_sum(i).left_mul(-ginv);
  }

  RationalCharPoly out;
  out.P = row_sum(1);
  out.sigmas = sigmas;
  // Leading coefficient straight from the defining identity rather than from
  // the recurrence, so the two can be cross-checked against each other.
  Cmat kinv_e1 = K.partialPivLu().solve(unit_block(j, s, 1));
  out.leading_inv = kinv_e1.bottomRows(s);
  if (condition_number(out.leading_inv) > 1e12)
    throw AssumptionsViolated("E_j^T K^{-1} E_1 is singular to working precision");
  out.leading = out.leading_inv.inverse();
  return out;
}

Cmat block_clenshaw_apply(const Cmat& N, const Cmat& W,
                          const std::function<Cmat(const Cmat&)>& apply,
                          const Cmat& B, bool monic) {
  const Index s = W.cols();
  BlockHessenberg red = block_hessenberg_reduce(N, W);
  if (red.singular_subdiagonal) throw UncontrollablePair(*red.singular_subdiagonal);
  if (condition_number(red.M) > 1e12)
    throw UncontrollablePair(1);  // W itself was rank deficient
  const Index j = N.rows() / s;
  auto blk = [&](Index r, Index c) {
    return red.H.block((r - 1) * s, (c - 1) * s, s, s);
  };

  std::vector<Cmat> cinv{Cmat::Identity(s, s)};
  for (Index i = 1; i < j; ++i) cinv.push_back(Cmat(blk(i + 1, i).inverse()));

  // Mirrors the coefficient recurrence of charpoly_hessenberg_natural, acting
  // on n x s blocks: T[i] = Q[i](A) o (B M^{-1}), one application of A per step.
  std::vector<Cmat> T;
  T.push_back(B * red.M.inverse());
  for (Index i = 1; i <= j; ++i) {
    Cmat next = apply(T[i - 1] * cinv[i - 1]) - T[i - 1] * (cinv[i - 1] * blk(i, i));
    for (Index h = 1; h < i; ++h) next -= T[h - 1] * (cinv[h - 1] * blk(h, i));
    T.push_back(std::move(next));
  }
  if (!monic) return T[j];

  Cmat lc_inv = Cmat::Identity(s, s);
  for (Index i = j; i >= 2; --i) lc_inv = lc_inv * blk(i, i - 1);
  return T[j] * (lc_inv * red.M);
}

Cmat block_clenshaw_apply(const Cmat& N, const Cmat& W, const Cmat& A, const Cmat& B,
                          bool monic) {
  return block_clenshaw_apply(
      N, W, [&](const Cmat& X) -> Cmat { return A * X; }, B, monic);
}

Cmat lambda_inverse_keldysh(const Cmat& Aproj, const std::vector<Cmat>& gammas,
                            const Cmat& R_B, Complex z) {
  const Index s = R_B.rows();
  const Index j = Aproj.rows() / s;
  if (static_cast<Index>(gammas.size()) != j - 1)
    throw AssumptionsViolated("expected j-1 subdiagonal blocks");
  Cmat y = shifted_solve_checked(Aproj, z, unit_block(j, s, 1) * R_B);
  Cmat g = y.bottomRows(s);
  // Chain Gamma_j^{-1}, ..., Gamma_2^{-1} applied innermost-first.
  for (Index i = j; i >= 2; --i)
    g = gammas[i - 2].partialPivLu().solve(g);
  return R_B.partialPivLu().solve(g);
}

Cmat lambda_inverse_keldysh_rational(const Cmat& Aproj, const Cmat& K,
                                     const Cmat& leading, const Cmat& R_B,
                                     const std::vector<Complex>& sigmas, Complex z) {
  const Index s = R_B.rows();
  const Index j = Aproj.rows() / s;
  Complex phi = 1.0;
  for (Complex sig : sigmas) phi *= (z - sig);
  if (phi == 0.0)
    throw AssumptionsViolated(
        "the resolvent form of Lambda^{-1} is indeterminate at a pole");
  Cmat y = shifted_solve_checked(Aproj, z, unit_block(j, s, 1) * R_B);
  Cmat g = K.partialPivLu().solve(y).bottomRows(s);
  return R_B.partialPivLu().solve(Cmat(leading * g)) / phi;
}

namespace {

// Shared tail of triplet extraction: eigendecompose the realization, check
// simplicity through the conditioning of the eigenvector basis, and build the
// left vectors w_m^* = e_m^* X^{-1} E_1 T.
struct EigContext {
  Eigen::ComplexEigenSolver<Cmat> es;
  Cmat Xinv;
};

EigContext diagonalize_checked(const Cmat& N) {
  EigContext ctx;
  ctx.es.compute(N, /*computeEigenvectors=*/true);
  if (ctx.es.info() != Eigen::Success)
    throw SimpleEigsRequired("projected eigendecomposition did not converge");
  const Cmat& X = ctx.es.eigenvectors();
  if (condition_number(X) > 1e12)
    throw SimpleEigsRequired(
        "projected matrix is too close to defective for triplet extraction");
  ctx.Xinv = X.partialPivLu().inverse();
  return ctx;
}

}  // namespace

EigenTriplets eigen_triplets(const Cmat& Aproj, const Cmat& R_B) {
  const Index s = R_B.rows();
  const Index js = Aproj.rows();
  const Index j = js / s;

  // Work on a block Hessenberg realization of the pair (Aproj, E_1 R_B).
  Cmat Hh, T;
  if (below_subdiagonal_norm(Aproj, s) <= 1e-13 * std::max(1.0, Aproj.norm())) {
    Hh = Aproj;
    T = R_B;
  } else {
    BlockHessenberg red = block_hessenberg_reduce(Aproj, unit_block(j, s, 1) * R_B);
    if (red.singular_subdiagonal) throw UncontrollablePair(*red.singular_subdiagonal);
    Hh = red.H;
    T = red.M;
  }

  EigContext ctx = diagonalize_checked(Hh);
  const Cmat& X = ctx.es.eigenvectors();

  EigenTriplets out;
  out.theta.assign(ctx.es.eigenvalues().data(), ctx.es.eigenvalues().data() + js);
  // Partial fractions of Lambda^{-1}(z) = T^{-1} Gamma_2^{-1}...Gamma_j^{-1}
  //   E_j^* (z I - Hh)^{-1} E_1 T give the right vectors from the last block
  // row of X and the left vectors from the first block column of X^{-1}.
  Cmat chain_bot = X.bottomRows(s);
  for (Index i = j; i >= 2; --i)
    chain_bot = Hh.block((i - 1) * s, (i - 2) * s, s, s).partialPivLu().solve(chain_bot);
  out.V = T.partialPivLu().solve(chain_bot);
  out.W = (ctx.Xinv.leftCols(s) * T).adjoint();
  out.V_nat = R_B.partialPivLu().solve(Cmat(X.bottomRows(s)));
  // leading_nat maps natural right vectors to monic ones; with it the natural
  // polynomial satisfies Lambda_nat(A) o B = (residual direction) * R_B.
  Cmat chain = Cmat::Identity(s, s);
  for (Index i = j; i >= 2; --i)
    chain = Hh.block((i - 1) * s, (i - 2) * s, s, s).partialPivLu().solve(chain);
  out.leading_nat = T.partialPivLu().solve(chain) * R_B;
  return out;
}

EigenTriplets eigen_triplets_pencil(const Cmat& Htilde, const Cmat& K, const Cmat& R_B,
                                    const std::vector<Complex>& sigmas) {
  const Index s = R_B.rows();
  const Index js = Htilde.rows();
  const Index j = js / s;
  if (static_cast<Index>(sigmas.size()) != j - 1)
    throw AssumptionsViolated("expected j-1 interior poles for the pencil");

  // N = Htilde K^{-1}, formed through transposed solves.
  Cmat N = K.transpose().partialPivLu().solve(Htilde.transpose()).transpose();
  EigContext ctx = diagonalize_checked(N);
  const Cmat& X = ctx.es.eigenvectors();

  EigenTriplets out;
  out.theta.assign(ctx.es.eigenvalues().data(), ctx.es.eigenvalues().data() + js);
  out.W = (ctx.Xinv.leftCols(s) * R_B).adjoint();

  Cmat kinv_e1 = K.partialPivLu().solve(unit_block(j, s, 1));
  Cmat leading_inv = kinv_e1.bottomRows(s);  // E_j^T K^{-1} E_1
  if (condition_number(leading_inv) > 1e12)
    throw AssumptionsViolated("E_j^T K^{-1} E_1 is singular to working precision");
  Cmat leading = leading_inv.inverse();

  // Residues of Lambda^{-1}(z) = R_B^{-1} leading phi(z)^{-1}
  //   E_j^T K^{-1} (z I - N)^{-1} E_1 R_B at the Ritz values.
  Cmat Yb = K.partialPivLu().solve(X).bottomRows(s);
  Cmat Vn(s, js), Vm(s, js);
  for (Index m = 0; m < js; ++m) {
    Complex phi = 1.0;
    for (Complex sig : sigmas) phi *= (out.theta[m] - sig);
    if (std::abs(phi) == 0.0)
      throw AssumptionsViolated("a Ritz value coincides with a pole of the space");
    Vn.col(m) = Yb.col(m) / phi;
    Vm.col(m) = leading * Vn.col(m);
  }
  out.V_nat = R_B.partialPivLu().solve(Vn);
  out.V = R_B.partialPivLu().solve(Vm);
  out.leading_nat = R_B.partialPivLu().solve(leading) * R_B;
  return out;
}

}  // namespace bkmf
