#include "bkmf/approx.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bkmf {

SpectralRegion SpectralRegion::real_interval(double a, double b, int n_points) {
  SpectralRegion r;
  r.kind = Kind::real_interval;
  r.a = a;
  r.b = b;
  r.n_points = n_points;
  return r;
}

SpectralRegion SpectralRegion::sector(double rho_min, double rho_max, double theta_min,
                                      double theta_max, int n_rho, int n_theta) {
  SpectralRegion r;
  r.kind = Kind::sector;
  r.rho_min = rho_min;
  r.rho_max = rho_max;
  r.theta_min = theta_min;
  r.theta_max = theta_max;
  r.n_rho = n_rho;
  r.n_theta = n_theta;
  return r;
}

SpectralRegion SpectralRegion::explicit_list(std::vector<Complex> points) {
  SpectralRegion r;
  r.kind = Kind::explicit_list;
  r.list = std::move(points);
  return r;
}

std::vector<Complex> SpectralRegion::points() const {
  std::vector<Complex> pts;
  switch (kind) {
    case Kind::real_interval: {
      if (!(b >= a) || n_points < 2)
        throw RegionInvalid("real interval needs b >= a and at least 2 points");
      pts.reserve(n_points);
      for (int i = 0; i < n_points; ++i)
        pts.emplace_back(a + (b - a) * double(i) / double(n_points - 1), 0.0);
      break;
    }
    case Kind::sector: {
      if (!(rho_min > 0.0) || !(rho_max >= rho_min) || !(theta_max >= theta_min) ||
          n_rho < 1 || n_theta < 1)
        throw RegionInvalid("sector needs 0 < rho_min <= rho_max, ordered angles");
      pts.reserve(static_cast<size_t>(n_rho) * n_theta);
      const double lr0 = std::log(rho_min), lr1 = std::log(rho_max);
      for (int i = 0; i < n_rho; ++i) {
        double rho = std::exp(n_rho == 1 ? lr0 : lr0 + (lr1 - lr0) * i / double(n_rho - 1));
        for (int k = 0; k < n_theta; ++k) {
          double th = n_theta == 1 ? theta_min
                                   : theta_min + (theta_max - theta_min) * k /
                                                     double(n_theta - 1);
          pts.push_back(rho * std::exp(Complex(0.0, th)));
        }
      }
      break;
    }
    case Kind::explicit_list: {
      if (list.empty()) throw RegionInvalid("explicit point list is empty");
      pts = list;
      break;
    }
  }
  return pts;
}

double kappa_eig(const Cmat& A, StructureHint hint) {
  if (hint != StructureHint::general) return 1.0;
  Eigen::ComplexEigenSolver<Cmat> es(A, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw DiagonalizableRequired("eigendecomposition did not converge");
  double kappa = condition_number(es.eigenvectors());
  if (!std::isfinite(kappa))
    throw DiagonalizableRequired("eigenvector matrix is singular");
  return kappa;
}

SpectralData SpectralData::dense(const Cmat& A) {
  Eigen::ComplexEigenSolver<Cmat> es(A, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw DiagonalizableRequired("eigendecomposition did not converge");
  SpectralData sd;
  sd.lambda = es.eigenvalues();
  sd.X = es.eigenvectors();
  sd.kappa = condition_number(sd.X);
  if (sd.kappa > 1e12)
    throw DiagonalizableRequired("eigenvector matrix condition exceeds 1e12");
  sd.Xinv = sd.X.partialPivLu().inverse();
  return sd;
}

SpectralData SpectralData::hermitian_dense(const Cmat& A) {
  Eigen::SelfAdjointEigenSolver<Cmat> es(A);
  if (es.info() != Eigen::Success)
    throw DiagonalizableRequired("eigendecomposition did not converge");
  SpectralData sd;
  sd.lambda = es.eigenvalues().cast<Complex>();
  sd.X = es.eigenvectors();
  sd.Xinv = sd.X.adjoint();
  sd.kappa = 1.0;
  return sd;
}

SpectralData SpectralData::diagonal(const Cvec& d) {
  SpectralData sd;
  sd.lambda = d;
  sd.X = Cmat::Identity(d.size(), d.size());
  sd.Xinv = sd.X;
  sd.kappa = 1.0;
  return sd;
}

Cmat matfun_exact(const SpectralData& A, const ScalarFunction& f, const Cmat& B) {
  Cvec fl(A.lambda.size());
  for (Index i = 0; i < fl.size(); ++i) fl(i) = f(A.lambda(i));
  return A.X * (fl.asDiagonal() * (A.Xinv * B));
}

Cmat residual_direct(const std::function<Cmat(const Cmat&)>& apply_A, const Cmat& B,
                     const Cmat& X, Complex z) {
  return B - z * X + apply_A(X);
}

Cmat residual_direct(const Cmat& A, const Cmat& B, const Cmat& X, Complex z) {
  return B - z * X + A * X;
}

Cmat residual_direct(const LinearOperator& op, const Cmat& B, const Cmat& X,
                     Complex z) {
  return B - z * X + op.apply(X);
}

double grid_max(const std::vector<Complex>& points,
                const std::function<double(Complex)>& kernel, ExecPolicy policy) {
  if (points.empty()) throw RegionInvalid("grid is empty");
  double best = 0.0;
#ifdef _OPENMP
  if (policy == ExecPolicy::parallel) {
    const auto count = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for reduction(max : best) schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i)
      best = std::max(best, kernel(points[static_cast<size_t>(i)]));
    return best;
  }
#else
  (void)policy;
#endif
  for (Complex z : points) best = std::max(best, kernel(z));
  return best;
}

// ---------------------------------------------------------------------------
// ApproxState construction

ApproxState ApproxState::galerkin(const BlockArnoldiDecomp& d, double kappa_eig) {
  ApproxState st;
  st.rational_ = false;
  st.galerkin_ = true;
  st.n_ = d.U.rows();
  st.s_ = d.s;
  st.j_ = d.j;
  st.U_ = d.U;
  st.R_B_ = d.R_B;
  st.Aproj_ = projected_matrix(d).Aproj;
  st.Htilde_ = st.Aproj_;
  st.gamma_last_ = d.gamma(d.j + 1);
  for (Index i = 2; i <= d.j; ++i) st.gammas_.push_back(d.gamma(i));
  st.kappa_eig_ = kappa_eig;
  st.finish_setup(d.block(d.j + 1) * st.gamma_last_);
  return st;
}

ApproxState ApproxState::petrov(const BlockArnoldiDecomp& d, const Cmat& Z,
                                double kappa_eig) {
  ApproxState st;
  st.rational_ = false;
  st.galerkin_ = false;
  st.n_ = d.U.rows();
  st.s_ = d.s;
  st.j_ = d.j;
  st.U_ = d.U;
  st.R_B_ = d.R_B;
  ProjectedPair pp = projected_matrix(d, Z);
  st.Aproj_ = pp.Aproj;
  st.Htilde_ = pp.Htilde;
  st.zu_cond_ = pp.zu_cond;
  st.gamma_last_ = d.gamma(d.j + 1);
  for (Index i = 2; i <= d.j; ++i) st.gammas_.push_back(d.gamma(i));
  st.kappa_eig_ = kappa_eig;
  st.finish_setup(oblique_project(d.basis_j(), Z, d.block(d.j + 1) * st.gamma_last_));
  return st;
}

ApproxState ApproxState::galerkin(const BlockRationalDecomp& d, double kappa_eig) {
  if (!d.last_pole_infinite())
    throw AssumptionsViolated("rational approximation state needs a trailing "
                              "infinite pole");
  ApproxState st;
  st.rational_ = true;
  st.galerkin_ = true;
  st.n_ = d.U.rows();
  st.s_ = d.s;
  st.j_ = d.j;
  st.U_ = d.U;
  st.R_B_ = d.R_B;
  st.K_ = d.K();
  ProjectedPair pp = projected_matrix(d);
  st.Aproj_ = pp.Aproj;
  st.Htilde_ = pp.Htilde;
  st.sigmas_ = d.finite_sigmas();
  st.gamma_last_ = d.gamma_last();
  st.kappa_eig_ = kappa_eig;
  st.finish_setup(d.block(d.j + 1) * st.gamma_last_);
  return st;
}

ApproxState ApproxState::petrov(const BlockRationalDecomp& d, const Cmat& Z,
                                double kappa_eig) {
  if (!d.last_pole_infinite())
    throw AssumptionsViolated("rational approximation state needs a trailing "
                              "infinite pole");
  ApproxState st;
  st.rational_ = true;
  st.galerkin_ = false;
  st.n_ = d.U.rows();
  st.s_ = d.s;
  st.j_ = d.j;
  st.U_ = d.U;
  st.R_B_ = d.R_B;
  st.K_ = d.K();
  ProjectedPair pp = projected_matrix(d, Z);
  st.Aproj_ = pp.Aproj;
  st.Htilde_ = pp.Htilde;
  st.zu_cond_ = pp.zu_cond;
  st.sigmas_ = d.finite_sigmas();
  st.gamma_last_ = d.gamma_last();
  st.kappa_eig_ = kappa_eig;
  st.finish_setup(oblique_project(d.basis_j(), Z, d.block(d.j + 1) * st.gamma_last_));
  return st;
}

void ApproxState::finish_setup(const Cmat& dir_core) {
  dir_core_ = dir_core;
  dir_ = dir_core_ * R_B_;
  if (kappa_eig_ < 1.0)
    throw AssumptionsViolated("kappa_eig must be at least 1");
}

void ApproxState::require_all_finite_poles() const {
  if (rational_ && static_cast<Index>(sigmas_.size()) != j_ - 1)
    throw InfinitePoleUnsupported(
        "characteristic-polynomial machinery needs all interior poles finite");
}

// ---------------------------------------------------------------------------
// Scalar prefactor of the rational space

Complex ApproxState::phi(Complex z) const {
  Complex p = 1.0;
  for (Complex s : sigmas_) p *= (z - s);
  return p;
}

Complex ApproxState::phi_derivative(Complex z) const {
  Complex d = 0.0;
  for (size_t t = 0; t < sigmas_.size(); ++t) {
    Complex term = 1.0;
    for (size_t u = 0; u < sigmas_.size(); ++u)
      if (u != t) term *= (z - sigmas_[u]);
    d += term;
  }
  return d;
}

ScalarFunction ApproxState::with_phi(const ScalarFunction& f) const {
  if (sigmas_.empty()) return f;
  const ApproxState* self = this;
  ScalarFunction g;
  g.name = "phi*" + f.name;
  g.f = [self, f](Complex z) { return self->phi(z) * f.f(z); };
  g.df = [self, f](Complex z) {
    return self->phi_derivative(z) * f.f(z) + self->phi(z) * f.df(z);
  };
  return g;
}

// ---------------------------------------------------------------------------
// Residual maps

BlockVector ApproxState::pg_shifted_solve(Complex z) const {
  Cmat e1rb = unit_block(j_, s_, 1) * R_B_;
  return basis_j() * shifted_solve_checked(Aproj_, z, e1rb);
}

BlockVector ApproxState::residual_formula(Complex z) const {
  Cmat core = shifted_solve_checked(Aproj_, z, unit_block(j_, s_, 1) * R_B_);
  if (rational_) core = K_.partialPivLu().solve(core);
  return dir_core_ * core.bottomRows(s_);
}

BlockVector ApproxState::residual_charpoly_form(Complex z) const {
  if (!rational_) {
    Cmat lm_inv = lambda_inverse_keldysh(Aproj_, gammas_, R_B_, z);
    // Natural normalization: Lambda_nat(z)^{-1} = leading_nat^{-1} Lambda_m(z)^{-1}
    // with leading_nat = R_B^{-1} Gamma_2^{-1}...Gamma_j^{-1} R_B.
    Cmat chain = Cmat::Identity(s_, s_);
    for (auto it = gammas_.rbegin(); it != gammas_.rend(); ++it)
      chain = it->partialPivLu().solve(chain);
    Cmat lead_nat = R_B_.partialPivLu().solve(chain * R_B_);
    return dir_ * lead_nat.partialPivLu().solve(lm_inv);
  }
  // Rational case: Horner evaluation of the pencil-recurrence polynomial keeps
  // the residual exactly zero at the poles (phi(sigma_i) = 0 multiplies a
  // finite matrix).
  const RationalCharPoly& rp = rational_charpoly();
  Cmat pz = rp.P.eval(z);
  Eigen::PartialPivLU<Cmat> lu(pz);
  const auto& u = lu.matrixLU().diagonal();
  double big = 0.0, small = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < u.size(); ++i) {
    big = std::max(big, std::abs(u(i)));
    small = std::min(small, std::abs(u(i)));
  }
  if (!(small > big * 1e-14)) throw ZIsRitzValue(z);
  Cmat lam_inv = R_B_.partialPivLu().solve(Cmat(lu.solve(R_B_)));
  return phi(z) * (dir_ * lam_inv);
}

// ---------------------------------------------------------------------------
// Matrix-function approximation and lazily shared objects

const ApproxState::ProjEig& ApproxState::projected_eig() const {
  if (!peig_) {
    Eigen::ComplexEigenSolver<Cmat> es(Aproj_, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
      throw DiagonalizableRequired("projected eigendecomposition did not converge");
    ProjEig pe;
    pe.mu = es.eigenvalues();
    pe.S = es.eigenvectors();
    pe.cond = condition_number(pe.S);
    if (pe.cond > 1e12)
      throw DiagonalizableRequired(
          "projected matrix is not numerically diagonalizable");
    pe.Sinv = pe.S.partialPivLu().inverse();
    peig_ = std::move(pe);
  }
  return *peig_;
}

const EigenTriplets& ApproxState::triplets() const {
  if (!triplets_) {
    require_all_finite_poles();
    triplets_ = rational_ ? eigen_triplets_pencil(Htilde_, K_, R_B_, sigmas_)
                          : eigen_triplets(Aproj_, R_B_);
  }
  return *triplets_;
}

const RationalCharPoly& ApproxState::rational_charpoly() const {
  if (!rational_) throw AssumptionsViolated("state is not rational");
  if (!ratpoly_) {
    require_all_finite_poles();
    ratpoly_ = charpoly_rational(Htilde_, K_, sigmas_);
  }
  return *ratpoly_;
}

BlockVector ApproxState::matfun_approx(const ScalarFunction& f) const {
  if (fj_cache_ && fj_cache_->first == f.name) return fj_cache_->second;
  const ProjEig& pe = projected_eig();
  Cvec fmu(pe.mu.size());
  for (Index i = 0; i < fmu.size(); ++i) fmu(i) = f(pe.mu(i));
  Cmat e1rb = unit_block(j_, s_, 1) * R_B_;
  Cmat fj = basis_j() * (pe.S * (fmu.asDiagonal() * (pe.Sinv * e1rb)));
  fj_cache_ = {f.name, fj};
  return fj;
}

// ---------------------------------------------------------------------------
// Exact error formulas

BlockVector ApproxState::error_formula_keldysh(const ScalarFunction& f,
                                               const SpectralData& A) const {
  const EigenTriplets& tr = triplets();
  ScalarFunction g = with_phi(f);
  const Index js = j_ * s_;

  Cmat dv = dir_ * tr.V_nat;  // column i: direction * v_i
  Cmat Y = A.Xinv * dv;
  for (Index i = 0; i < js; ++i)
    for (Index h = 0; h < Y.rows(); ++h)
      Y(h, i) *= g.divided_difference(A.lambda(h), tr.theta[i]);
  return A.X * (Y * tr.W.adjoint());
}

BlockVector ApproxState::error_formula_keldysh(
    const ScalarFunction& f, const LinearOperator& op,
    const std::function<Cmat(const Cmat&)>& apply_g) const {
  const EigenTriplets& tr = triplets();
  if (!op.can_solve())
    throw AssumptionsViolated("operator cannot solve shifted systems");
  ScalarFunction g = with_phi(f);
  const Index js = j_ * s_;

  Cmat dv = dir_ * tr.V_nat;
  Cmat T(n_, js);
  for (Index i = 0; i < js; ++i) {
    try {
      // (A - theta I)^{-1} x = -(theta I - A)^{-1} x
      T.col(i) = -op.solve_shifted(tr.theta[i], dv.col(i));
    } catch (const ShiftedSolveFailed&) {
      throw ThetaHitsSpectrum(tr.theta[i]);
    }
  }
  Cvec gtheta(js);
  for (Index i = 0; i < js; ++i) gtheta(i) = g(tr.theta[i]);
  Cmat p1 = T * tr.W.adjoint();
  Cmat p2 = T * (gtheta.asDiagonal() * tr.W.adjoint());
  return apply_g(p1) - p2;
}

BlockVector ApproxState::error_formula_spectral(const ScalarFunction& f,
                                                const SpectralData& A) const {
  const ProjEig& pe = projected_eig();
  const Index js = j_ * s_;

  Cmat G1 = rational_ ? Cmat(K_.partialPivLu().solve(pe.S).bottomRows(s_))
                      : Cmat(pe.S.bottomRows(s_));
  Cmat G2 = pe.Sinv.leftCols(s_) * R_B_;

  Cmat dn = A.Xinv * dir_core_;  // row h: y_h^* Pi U_{j+1} Gamma_{j+1}
  Cmat T(dn.rows(), s_);
  Cvec dd(js);
  for (Index h = 0; h < dn.rows(); ++h) {
    for (Index k = 0; k < js; ++k)
      dd(k) = f.divided_difference(pe.mu(k), A.lambda(h));
    T.row(h) = dn.row(h) * (G1 * (dd.asDiagonal() * G2));
  }
  return A.X * T;
}

// ---------------------------------------------------------------------------
// A posteriori bounds

double ApproxState::bound_L(const ScalarFunction& f, const SpectralRegion& region,
                            ExecPolicy policy) const {
  const EigenTriplets& tr = triplets();
  ScalarFunction g = with_phi(f);
  const Index js = j_ * s_;
  Cvec gtheta(js);
  for (Index i = 0; i < js; ++i) gtheta(i) = g(tr.theta[i]);
  Cmat wadj = tr.W.adjoint();

  auto kernel = [&](Complex lam) -> double {
    Complex glam = g(lam);
    Cvec dd(js);
    for (Index i = 0; i < js; ++i) {
      const Complex th = tr.theta[i];
      const double scale = 1.0 + std::max(std::abs(lam), std::abs(th));
      dd(i) = (std::abs(lam - th) < 1e-8 * scale) ? g.df(0.5 * (lam + th))
                                                  : (glam - gtheta(i)) / (lam - th);
    }
    return spectral_norm(tr.V_nat * (dd.asDiagonal() * wadj));
  };
  return kappa_eig_ * dir_.norm() * grid_max(region.points(), kernel, policy);
}

double ApproxState::bound_M(const ScalarFunction& f, const SpectralRegion& region,
                            ExecPolicy policy) const {
  const ProjEig& pe = projected_eig();
  const Index js = j_ * s_;
  Cmat G1 = rational_ ? Cmat(K_.partialPivLu().solve(pe.S).bottomRows(s_))
                      : Cmat(pe.S.bottomRows(s_));
  Cmat G2 = pe.Sinv.leftCols(s_) * R_B_;
  Cvec fmu(js);
  for (Index i = 0; i < js; ++i) fmu(i) = f(pe.mu(i));

  auto kernel = [&](Complex lam) -> double {
    Complex flam = f(lam);
    Cvec dd(js);
    for (Index k = 0; k < js; ++k) {
      const Complex mu = pe.mu(k);
      const double scale = 1.0 + std::max(std::abs(lam), std::abs(mu));
      dd(k) = (std::abs(lam - mu) < 1e-8 * scale) ? f.df(0.5 * (lam + mu))
                                                  : (fmu(k) - flam) / (mu - lam);
    }
    return spectral_norm(G1 * (dd.asDiagonal() * G2));
  };
  // In the Galerkin case ||Pi U_{j+1} Gamma_{j+1}||_F collapses to
  // ||Gamma_{j+1}||_F because the basis extension is orthonormal.
  const double prefactor = galerkin_ ? gamma_last_.norm() : dir_core_.norm();
  return kappa_eig_ * prefactor * grid_max(region.points(), kernel, policy);
}

}  // namespace bkmf
