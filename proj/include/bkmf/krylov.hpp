#pragma once

#include <vector>

#include "bkmf/core.hpp"
#include "bkmf/operators.hpp"
#include "bkmf/poles.hpp"

namespace bkmf {

// Block Arnoldi decomposition A U_j = U_{j+1} Hbar after j steps:
// U is n x (j+1)s with block-orthonormal columns, Hbar is (j+1)s x js block
// upper Hessenberg with invertible subdiagonal blocks, B = U_1 R_B.
struct BlockArnoldiDecomp {
  Cmat U;
  Cmat Hbar;
  Cmat R_B;
  Index s = 0;
  Index j = 0;

  Cmat H() const { return Hbar.topRows(j * s); }
  Cmat block(Index bi) const { return U.middleCols((bi - 1) * s, s); }  // U_bi
  // Gamma_i = Hbar block (i, i-1), i in [2, j+1].
  Cmat gamma(Index i) const { return Hbar.block((i - 1) * s, (i - 2) * s, s, s); }
  Cmat basis_j() const { return U.leftCols(j * s); }

  // Leading sub-decomposition after jsub <= j steps (bit-identical to running
  // the builder for jsub steps only).
  BlockArnoldiDecomp truncated(Index jsub) const;
};

// Block rational Arnoldi decomposition A U_{j+1} Kbar = U_{j+1} Hbar with a
// pole attached to each step. A trailing infinite pole makes the last block
// row of Kbar zero, which downstream consumers (projection, residuals) rely on.
struct BlockRationalDecomp {
  Cmat U;
  Cmat Hbar;
  Cmat Kbar;
  std::vector<Pole> poles;  // one per step
  Cmat R_B;
  Index s = 0;
  Index j = 0;

  Cmat H() const { return Hbar.topRows(j * s); }
  Cmat K() const { return Kbar.topRows(j * s); }
  Cmat block(Index bi) const { return U.middleCols((bi - 1) * s, s); }
  Cmat gamma_last() const { return Hbar.block(j * s, (j - 1) * s, s, s); }
  Cmat basis_j() const { return U.leftCols(j * s); }
  bool last_pole_infinite() const { return !poles.empty() && poles.back().infinite; }
  // Finite poles of the first j-1 steps (the denominator roots of the space).
  std::vector<Complex> finite_sigmas() const;
  bool interior_all_finite() const;
};

// Incremental builders. Both orthogonalize by block classical Gram-Schmidt
// run twice (full reorthogonalization) and throw BreakdownOrDeflation with
// the 1-based index of the basis block that came out rank-deficient.
class BlockArnoldi {
 public:
  BlockArnoldi(LinearOperator op, const Cmat& B);
  void step();
  Index steps() const { return j_; }
  BlockArnoldiDecomp decomp() const;

 private:
  LinearOperator op_;
  Cmat U_, Hbar_, R_B_;
  Index n_ = 0, s_ = 0, j_ = 0;
};

class RationalBlockArnoldi {
 public:
  RationalBlockArnoldi(LinearOperator op, const Cmat& B);
  void step(Pole pole);
  Index steps() const { return j_; }
  BlockRationalDecomp decomp() const;

 private:
  LinearOperator op_;
  Cmat U_, Hbar_, Kbar_, R_B_;
  std::vector<Pole> poles_;
  Index n_ = 0, s_ = 0, j_ = 0;
};

// One-shot convenience wrappers.
BlockArnoldiDecomp block_arnoldi(const LinearOperator& op, const Cmat& B, Index steps);
// Rejects pole lists whose last entry is finite.
BlockRationalDecomp rational_block_arnoldi(const LinearOperator& op, const Cmat& B,
                                           const std::vector<Pole>& poles);

// Compression of A onto the basis pair (U_j, Z_j). Galerkin overloads read the
// projected matrix straight off the decomposition; the oblique overloads add
// the last-block-column correction, so no extra applications of A happen.
struct ProjectedPair {
  Cmat Aproj;    // js x js
  Cmat Htilde;   // pencil numerator: equals Aproj for polynomial decompositions
  double zu_cond = 1.0;
  bool galerkin = true;
};
ProjectedPair projected_matrix(const BlockArnoldiDecomp& d);
ProjectedPair projected_matrix(const BlockArnoldiDecomp& d, const Cmat& Z);
ProjectedPair projected_matrix(const BlockRationalDecomp& d);
ProjectedPair projected_matrix(const BlockRationalDecomp& d, const Cmat& Z);

// Test basis for Petrov-Galerkin: the first j blocks of a (rational) block
// Arnoldi basis built from op (the caller passes A^T or A^* as it prefers).
Cmat dual_basis(const LinearOperator& op, const Cmat& C, Index steps);
Cmat dual_basis(const LinearOperator& op, const Cmat& C, const std::vector<Pole>& poles);

}  // namespace bkmf
