#pragma once

#include <functional>
#include <memory>

#include "bkmf/core.hpp"

namespace bkmf {

// Matrix-free contract: everything the Krylov builders need from A. A block
// argument is always n x s. `solve_shifted` computes (sigma*I - A)^{-1} X and
// may be absent for operators that only support polynomial spaces.
struct LinearOperator {
  Index n = 0;
  std::function<Cmat(const Cmat&)> apply;
  std::function<Cmat(Complex, const Cmat&)> solve_shifted;  // optional

  bool can_solve() const { return static_cast<bool>(solve_shifted); }
};

// Dense adapter. Shifted solves factorize (sigma*I - A) once per distinct
// shift and cache the factorization.
LinearOperator dense_operator(Cmat A);

// Adjoint (A*) of a dense matrix, for dual bases; also provides solves.
LinearOperator dense_adjoint_operator(Cmat A);

// Transpose (A^T) of a dense matrix.
LinearOperator dense_transpose_operator(Cmat A);

// diag(d).
LinearOperator diagonal_operator(Cvec d);

// scale * tridiag(off, diag, off) of size n (symmetric, matrix-free apply and
// Thomas solves). Used for the 1-D Laplacian and the large Clenshaw timing.
LinearOperator tridiagonal_operator(Index n, double diag, double off, double scale);

// 2-D Laplacian-like operator A = scale * (I (x) T + T (x) I) + shift * I on an
// n x n grid, T = tridiag(-1, 2, -1). Applies and shifted solves run through
// the (precomputed) eigendecomposition of T, so both cost O(n^3) per block
// column instead of dense O(n^4).
struct Laplacian2D {
  Index grid = 0;            // n; operator dimension is n^2
  double scale = 0, shift = 0;
  Eigen::MatrixXd V;         // eigenvectors of T (orthogonal)
  Eigen::VectorXd lam;       // eigenvalues of T
  LinearOperator op() const;
  double eig_min() const;    // smallest eigenvalue of the full operator
  double eig_max() const;
  // Exact f(A)B through the tensor eigenbasis.
  Cmat matfun(const std::function<Complex(Complex)>& f, const Cmat& B) const;
};
Laplacian2D make_laplacian2d(Index grid, double scale, double shift);

}  // namespace bkmf
