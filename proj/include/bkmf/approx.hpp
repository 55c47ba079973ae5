#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bkmf/charpoly.hpp"
#include "bkmf/core.hpp"
#include "bkmf/krylov.hpp"
#include "bkmf/scalar_function.hpp"

namespace bkmf {

// Sampling region for the grid maxima inside the a posteriori bounds. The
// region must enclose the spectrum of A for the bounds to be valid.
struct SpectralRegion {
  enum class Kind { real_interval, sector, explicit_list };
  Kind kind = Kind::real_interval;

  // real_interval: [a, b] sampled at n_points >= 2 equispaced points.
  double a = 0.0, b = 0.0;
  int n_points = 100;
  // sector: rho * exp(i theta), rho log-spaced in [rho_min, rho_max] (n_rho
  // points), theta equispaced in [theta_min, theta_max] (n_theta points).
  double rho_min = 0.0, rho_max = 0.0, theta_min = 0.0, theta_max = 0.0;
  int n_rho = 50, n_theta = 50;
  // explicit_list: user-supplied points (e.g. the exact spectrum).
  std::vector<Complex> list;

  static SpectralRegion real_interval(double a, double b, int n_points = 100);
  static SpectralRegion sector(double rho_min, double rho_max, double theta_min,
                               double theta_max, int n_rho = 50, int n_theta = 50);
  static SpectralRegion explicit_list(std::vector<Complex> points);

  std::vector<Complex> points() const;  // throws RegionInvalid
};

// Structural knowledge about A used when declaring kappa_eig.
enum class StructureHint { general, normal, hermitian };

// kappa_eig(A) = ||X||_2 ||X^{-1}||_2 for an eigenvector matrix X of A;
// returns 1 immediately for matrices flagged normal or Hermitian.
double kappa_eig(const Cmat& A, StructureHint hint = StructureHint::general);

// Dense eigendata of A, for the exact-error oracles and the eigendata paths
// of the error formulas: A = X diag(lambda) X^{-1}.
struct SpectralData {
  Cvec lambda;
  Cmat X;
  Cmat Xinv;
  double kappa = 1.0;

  static SpectralData dense(const Cmat& A);            // general diagonalizable
  static SpectralData hermitian_dense(const Cmat& A);  // unitary X, kappa = 1
  static SpectralData diagonal(const Cvec& d);
};

// f(A) B through the eigendata.
Cmat matfun_exact(const SpectralData& A, const ScalarFunction& f, const Cmat& B);

// One matrix-function approximation state: a compressed pair (decomposition +
// projected matrix) plus every cached quantity the residual/error machinery
// reuses, in particular the residual direction Pi_{U,Z} U_{j+1} Gamma_{j+1} R_B.
class ApproxState {
 public:
  // Polynomial decompositions.
  static ApproxState galerkin(const BlockArnoldiDecomp& d, double kappa_eig);
  static ApproxState petrov(const BlockArnoldiDecomp& d, const Cmat& Z,
                            double kappa_eig);
  // Rational decompositions; the last pole must be infinite.
  static ApproxState galerkin(const BlockRationalDecomp& d, double kappa_eig);
  static ApproxState petrov(const BlockRationalDecomp& d, const Cmat& Z,
                            double kappa_eig);

  Index n() const { return n_; }
  Index s() const { return s_; }
  Index j() const { return j_; }
  bool rational() const { return rational_; }
  bool is_galerkin() const { return galerkin_; }
  double kappa() const { return kappa_eig_; }
  const Cmat& projected() const { return Aproj_; }
  const Cmat& pencil_K() const { return K_; }
  const Cmat& pencil_H() const { return Htilde_; }
  const Cmat& basis() const { return U_; }
  Cmat basis_j() const { return U_.leftCols(j_ * s_); }
  const Cmat& rb() const { return R_B_; }
  const std::vector<Complex>& sigmas() const { return sigmas_; }
  // Pi_{U,Z} U_{j+1} Gamma_{j+1} R_B: every residual and error expression is a
  // right-multiple of this n x s block.
  const Cmat& residual_direction() const { return dir_; }
  double zu_cond() const { return zu_cond_; }

  // Scalar prefactor phi(z) = prod_i (z - sigma_i) of the rational space (1
  // for polynomial decompositions) and its derivative.
  Complex phi(Complex z) const;
  Complex phi_derivative(Complex z) const;

  // X_{B,j}(z) = U_j (z I - Aproj)^{-1} E_1 R_B. Throws ZIsRitzValue.
  BlockVector pg_shifted_solve(Complex z) const;

  // Residual through the projected resolvent:
  //   Pi U_{j+1} Gamma_{j+1} E_j^* [K^{-1}] (z I - Aproj)^{-1} E_1 R_B.
  BlockVector residual_formula(Complex z) const;

  // Residual through the characteristic polynomial:
  //   direction * phi(z) * Lambda(z)^{-1},
  // with Lambda^{-1} evaluated by lambda_inverse_keldysh (polynomial case) or
  // by Horner evaluation of the pencil recurrence polynomial (rational case,
  // exactly zero at the poles).
  BlockVector residual_charpoly_form(Complex z) const;

  // F_j = U_j f(Aproj) E_1 R_B via the projected eigendecomposition; cached
  // per function name. Throws DiagonalizableRequired.
  BlockVector matfun_approx(const ScalarFunction& f) const;

  // Exact error f(A)B - F_j as a sum over characteristic-polynomial triplets;
  // g = phi * f is applied through A's eigendata, with the divided-difference
  // limit g'(theta) once an eigenvalue is within 1e-8 of a Ritz value.
  BlockVector error_formula_keldysh(const ScalarFunction& f,
                                    const SpectralData& A) const;
  // Same sum realized with one shifted solve per Ritz value plus a single
  // application of g(A) supplied by the caller. Throws ThetaHitsSpectrum when
  // a solve hits the spectrum.
  BlockVector error_formula_keldysh(const ScalarFunction& f, const LinearOperator& op,
                                    const std::function<Cmat(const Cmat&)>& apply_g) const;

  // Exact error as a sum over A's eigenpairs, with the inner s x s factor
  // evaluated through the projected eigendecomposition.
  BlockVector error_formula_spectral(const ScalarFunction& f,
                                     const SpectralData& A) const;

  // A posteriori bounds: grid maximum over the region of the 2-norm of a
  // small kernel, scaled by kappa_eig and a Frobenius prefactor. bound_L runs
  // over characteristic-polynomial triplets (may be numerically unstable in
  // the rational case once the error saturates); bound_M needs only the
  // projected eigendata and is the recommended stopping criterion.
  double bound_L(const ScalarFunction& f, const SpectralRegion& region,
                 ExecPolicy policy = ExecPolicy::parallel) const;
  double bound_M(const ScalarFunction& f, const SpectralRegion& region,
                 ExecPolicy policy = ExecPolicy::parallel) const;

  // Lazily computed shared objects (also useful to tests and experiments).
  const EigenTriplets& triplets() const;
  const RationalCharPoly& rational_charpoly() const;  // rational states only
  struct ProjEig {
    Cvec mu;
    Cmat S;
    Cmat Sinv;
    double cond = 1.0;
  };
  const ProjEig& projected_eig() const;

 private:
  ApproxState() = default;
  void finish_setup(const Cmat& dir_core);

  bool rational_ = false, galerkin_ = true;
  Index n_ = 0, s_ = 0, j_ = 0;
  Cmat U_, Aproj_, Htilde_, K_, R_B_;
  std::vector<Cmat> gammas_;  // Gamma_2..Gamma_j of the polynomial recurrence
  Cmat gamma_last_;
  std::vector<Complex> sigmas_;
  Cmat dir_;       // Pi U_{j+1} Gamma_{j+1} R_B
  Cmat dir_core_;  // Pi U_{j+1} Gamma_{j+1}
  double kappa_eig_ = 1.0;
  double zu_cond_ = 1.0;

  mutable std::optional<EigenTriplets> triplets_;
  mutable std::optional<RationalCharPoly> ratpoly_;
  mutable std::optional<ProjEig> peig_;
  mutable std::optional<std::pair<std::string, Cmat>> fj_cache_;

  ScalarFunction with_phi(const ScalarFunction& f) const;  // g = phi * f
  void require_all_finite_poles() const;
};

// Literal residual B - (z I - A) X; the reference oracle for the formula paths.
Cmat residual_direct(const std::function<Cmat(const Cmat&)>& apply_A, const Cmat& B,
                     const Cmat& X, Complex z);
Cmat residual_direct(const Cmat& A, const Cmat& B, const Cmat& X, Complex z);
Cmat residual_direct(const LinearOperator& op, const Cmat& B, const Cmat& X, Complex z);

// Maximum of a pure per-point kernel over grid points, parallelized over the
// grid when the policy asks for it.
double grid_max(const std::vector<Complex>& points,
                const std::function<double(Complex)>& kernel, ExecPolicy policy);

}  // namespace bkmf
