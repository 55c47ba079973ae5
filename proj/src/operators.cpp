#include "bkmf/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <map>

namespace bkmf {

namespace {

// Shared cache of LU factorizations keyed by shift. Complex keys get an
// arbitrary-but-strict ordering.
struct ShiftKey {
  double re, im;
  bool operator<(const ShiftKey& o) const {
    if (re != o.re) return re < o.re;
    return im < o.im;
  }
};

struct DenseSolveCache {
  Cmat A;
  std::map<ShiftKey, Eigen::PartialPivLU<Cmat>> lus;
  std::map<ShiftKey, double> rcond;  // min |pivot| proxy, for singularity checks

  Cmat solve(Complex sigma, const Cmat& X) {
    ShiftKey key{sigma.real(), sigma.imag()};
    auto it = lus.find(key);
    if (it == lus.end()) {
      Cmat S = -A;
      S.diagonal().array() += sigma;
      Eigen::PartialPivLU<Cmat> lu(S);
      double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
      for (Index i = 0; i < S.rows(); ++i) {
        double p = std::abs(lu.matrixLU()(i, i));
        mn = std::min(mn, p);
        mx = std::max(mx, p);
      }
      if (mx == 0.0 || mn <= 1e-14 * mx) throw ShiftedSolveFailed(sigma);
      it = lus.emplace(key, std::move(lu)).first;
    }
    return it->second.solve(X);
  }
};

}  // namespace

LinearOperator dense_operator(Cmat A) {
  auto cache = std::make_shared<DenseSolveCache>();
  cache->A = std::move(A);
  LinearOperator op;
  op.n = cache->A.rows();
  op.apply = [cache](const Cmat& X) -> Cmat { return cache->A * X; };
  op.solve_shifted = [cache](Complex sigma, const Cmat& X) -> Cmat {
    return cache->solve(sigma, X);
  };
  return op;
}

LinearOperator dense_adjoint_operator(Cmat A) { return dense_operator(A.adjoint()); }

LinearOperator dense_transpose_operator(Cmat A) { return dense_operator(A.transpose()); }

LinearOperator diagonal_operator(Cvec d) {
  auto dd = std::make_shared<Cvec>(std::move(d));
  LinearOperator op;
  op.n = dd->size();
  op.apply = [dd](const Cmat& X) -> Cmat { return dd->asDiagonal() * X; };
  op.solve_shifted = [dd](Complex sigma, const Cmat& X) -> Cmat {
    Cvec w(dd->size());
    for (Index i = 0; i < dd->size(); ++i) {
      Complex den = sigma - (*dd)(i);
      if (std::abs(den) <= 1e-14 * (1.0 + std::abs(sigma))) throw ShiftedSolveFailed(sigma);
      w(i) = 1.0 / den;
    }
    return w.asDiagonal() * X;
  };
  return op;
}

LinearOperator tridiagonal_operator(Index n, double diag, double off, double scale) {
  LinearOperator op;
  op.n = n;
  double d = scale * diag, e = scale * off;
  op.apply = [n, d, e](const Cmat& X) -> Cmat {
    Cmat Y(n, X.cols());
    for (Index c = 0; c < X.cols(); ++c) {
      Y(0, c) = d * X(0, c) + (n > 1 ? e * X(1, c) : Complex(0));
      for (Index i = 1; i + 1 < n; ++i)
        Y(i, c) = e * X(i - 1, c) + d * X(i, c) + e * X(i + 1, c);
      if (n > 1) Y(n - 1, c) = e * X(n - 2, c) + d * X(n - 1, c);
    }
    return Y;
  };
  // Thomas algorithm on (sigma - d) I - e ... : tridiag(-e, sigma - d, -e).
  op.solve_shifted = [n, d, e](Complex sigma, const Cmat& X) -> Cmat {
    Cvec c(n);  // modified superdiagonal
    Cmat Y(n, X.cols());
    Complex b0 = sigma - d;
    if (std::abs(b0) <= 1e-300) throw ShiftedSolveFailed(sigma);
    c(0) = -e / b0;
    Cmat D = X;  // modified right-hand side, processed in place
    D.row(0) /= b0;
    for (Index i = 1; i < n; ++i) {
      Complex den = (sigma - d) - (-e) * c(i - 1);
      if (std::abs(den) <= 1e-14 * (std::abs(sigma) + std::abs(d) + std::abs(e)))
        throw ShiftedSolveFailed(sigma);
      c(i) = -e / den;
      D.row(i) = (D.row(i) - (-e) * D.row(i - 1)) / den;
    }
    Y.row(n - 1) = D.row(n - 1);
    for (Index i = n - 2; i >= 0; --i) Y.row(i) = D.row(i) - c(i) * Y.row(i + 1);
    return Y;
  };
  return op;
}

Laplacian2D make_laplacian2d(Index grid, double scale, double shift) {
  Laplacian2D L;
  L.grid = grid;
  L.scale = scale;
  L.shift = shift;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(grid, grid);
  for (Index i = 0; i < grid; ++i) {
    T(i, i) = 2.0;
    if (i + 1 < grid) {
      T(i, i + 1) = -1.0;
      T(i + 1, i) = -1.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  L.V = es.eigenvectors();
  L.lam = es.eigenvalues();
  return L;
}

double Laplacian2D::eig_min() const {
  return scale * 2.0 * lam(0) + shift;
}
double Laplacian2D::eig_max() const {
  return scale * 2.0 * lam(lam.size() - 1) + shift;
}

namespace {

// Map each column through the tensor eigenbasis: y = (V (x) V) g(diag) (V (x) V)^T x.
Cmat lap2d_transform(const Laplacian2D& L,
                     const std::function<Complex(double)>& g, const Cmat& X) {
  const Index n = L.grid, N = n * n;
  if (X.rows() != N) throw AssumptionsViolated("laplacian2d: block has wrong height");
  Cmat Y(N, X.cols());
  Eigen::MatrixXcd M(n, n), W(n, n);
  for (Index c = 0; c < X.cols(); ++c) {
    M = Eigen::Map<const Eigen::MatrixXcd>(X.col(c).data(), n, n);
    W = L.V.transpose() * M * L.V;
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < n; ++p)
        W(p, q) *= g(L.scale * (L.lam(p) + L.lam(q)) + L.shift);
    M = L.V * W * L.V.transpose();
    Y.col(c) = Eigen::Map<const Cvec>(M.data(), N);
  }
  return Y;
}

}  // namespace

LinearOperator Laplacian2D::op() const {
  Laplacian2D L = *this;  // capture by value: cheap (n x n doubles)
  LinearOperator op;
  op.n = grid * grid;
  op.apply = [L](const Cmat& X) -> Cmat {
    const Index n = L.grid;
    Cmat Y(n * n, X.cols());
    Eigen::MatrixXcd M(n, n), R(n, n);
    for (Index c = 0; c < X.cols(); ++c) {
      // (I (x) T + T (x) I) vec(M) = vec(T M + M T): the 5-point stencil.
      M = Eigen::Map<const Eigen::MatrixXcd>(X.col(c).data(), n, n);
      R = (4.0 * L.scale + L.shift) * M;
      R.topRows(n - 1) -= L.scale * M.bottomRows(n - 1);
      R.bottomRows(n - 1) -= L.scale * M.topRows(n - 1);
      R.leftCols(n - 1) -= L.scale * M.rightCols(n - 1);
      R.rightCols(n - 1) -= L.scale * M.leftCols(n - 1);
      Y.col(c) = Eigen::Map<const Cvec>(R.data(), n * n);
    }
    return Y;
  };
  op.solve_shifted = [L](Complex sigma, const Cmat& X) -> Cmat {
    const Index n = L.grid;
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < n; ++p) {
        double lam_pq = L.scale * (L.lam(p) + L.lam(q)) + L.shift;
        if (std::abs(sigma - lam_pq) <= 1e-14 * (1.0 + std::abs(sigma)))
          throw ShiftedSolveFailed(sigma);
      }
    return lap2d_transform(
        L, [&](double lam_pq) -> Complex { return 1.0 / (sigma - lam_pq); }, X);
  };
  return op;
}

Cmat Laplacian2D::matfun(const std::function<Complex(Complex)>& f, const Cmat& B) const {
  return lap2d_transform(*this, [&](double lam_pq) { return f(Complex(lam_pq)); }, B);
}

}  // namespace bkmf
