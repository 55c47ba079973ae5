#pragma once

#include <vector>

#include "bkmf/core.hpp"
#include "bkmf/operators.hpp"

namespace bkmf {

// Monic (w.r.t. E_1 M) annihilating polynomial of degree j for a block upper
// Hessenberg H (js x js, s x s blocks, invertible subdiagonal blocks):
// Lambda(H) o (E_1 M) = 0 with leading coefficient I_s. M must be invertible;
// pass the identity to work w.r.t. E_1.
MatrixPolynomial charpoly_hessenberg(const Cmat& H, const Cmat& M);

// The same in the "natural" normalization produced by the elimination
// recurrence (leading coefficient Gamma_2^{-1} ... Gamma_j^{-1}), w.r.t. E_1.
MatrixPolynomial charpoly_hessenberg_natural(const Cmat& H, Index s);

// Annihilating polynomial data for the pencil z K - H of a rational
// decomposition whose interior poles sigma_1..sigma_{j-1} are all finite.
// P is the natural-normalization characteristic polynomial w.r.t. E_1 of
// H K^{-1}; its leading coefficient is leading = (E_j^T K^{-1} E_1)^{-1}.
struct RationalCharPoly {
  MatrixPolynomial P;
  Cmat leading;      // (E_j^T K^{-1} E_1)^{-1}
  Cmat leading_inv;  // E_j^T K^{-1} E_1
  std::vector<Complex> sigmas;
};
RationalCharPoly charpoly_rational(const Cmat& H, const Cmat& K,
                                   const std::vector<Complex>& sigmas);

// P(N) o B for the degree-j annihilating polynomial of the pair (N, W),
// without ever forming the coefficients: Hessenberg-reduce (N, W), then run
// the coupled recurrence directly on n x s blocks (one application of A per
// degree). With monic=true the result is for the monic (w.r.t. E_1 M)
// normalization, otherwise for the natural one.
Cmat block_clenshaw_apply(const Cmat& N, const Cmat& W,
                          const std::function<Cmat(const Cmat&)>& apply,
                          const Cmat& B, bool monic = true);
Cmat block_clenshaw_apply(const Cmat& N, const Cmat& W, const Cmat& A, const Cmat& B,
                          bool monic = true);

// Inverse of the monic (w.r.t. E_1 R_B) characteristic polynomial at z,
// evaluated through the projected resolvent:
//   Lambda(z)^{-1} = R_B^{-1} Gamma_2^{-1} ... Gamma_j^{-1} E_j^* (z I - Aproj)^{-1} E_1 R_B.
// gammas = [Gamma_2, ..., Gamma_j]. Throws ZIsRitzValue at Ritz values.
Cmat lambda_inverse_keldysh(const Cmat& Aproj, const std::vector<Cmat>& gammas,
                            const Cmat& R_B, Complex z);

// Rational analogue: the Gamma chain is replaced by the leading coefficient
// of the pencil recurrence and the resolvent picks up K^{-1} and the scalar
// denominator phi(z) = prod (z - sigma_i):
//   Lambda(z)^{-1} = R_B^{-1} leading phi(z)^{-1} E_j^T K^{-1} (z I - Aproj)^{-1} E_1 R_B.
Cmat lambda_inverse_keldysh_rational(const Cmat& Aproj, const Cmat& K,
                                     const Cmat& leading, const Cmat& R_B,
                                     const std::vector<Complex>& sigmas, Complex z);

// Eigenvalue triplets (theta_i, v_i, w_i) of the characteristic polynomial
// w.r.t. E_1 R_B, with w_i^* Lambda'(theta_i) v_i = 1 by construction (the
// vectors come from the exact partial-fraction expansion of Lambda^{-1}).
// V/W hold the triplets for the monic normalization; V_nat holds the right
// vectors for the natural normalization (V = leading_nat * V_nat columnwise),
// which is what the error representation pairs with the cached residual
// direction. Throws SimpleEigsRequired when the projected eigenvector basis
// is numerically singular (condition number above 1e12).
struct EigenTriplets {
  std::vector<Complex> theta;
  Cmat V;            // s x js, monic-normalized right vectors
  Cmat W;            // s x js, left vectors (shared by both normalizations)
  Cmat V_nat;        // s x js, natural-normalized right vectors
  Cmat leading_nat;  // s x s leading coefficient of the natural form
  bool scaled = true;
};

// Polynomial case: Aproj block upper Hessenberg w.r.t. blocks of size
// s = R_B.rows() (it is reduced first when it is not).
EigenTriplets eigen_triplets(const Cmat& Aproj, const Cmat& R_B);
// Rational case: pencil (z K - Htilde) with H_{i+1,i} = sigma_i K_{i+1,i};
// sigmas are the j-1 interior poles.
EigenTriplets eigen_triplets_pencil(const Cmat& Htilde, const Cmat& K, const Cmat& R_B,
                                    const std::vector<Complex>& sigmas);

}  // namespace bkmf
