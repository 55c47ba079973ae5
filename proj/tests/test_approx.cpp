#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <random>
#include <vector>

#include "bkmf/approx.hpp"
#include "bkmf/operators.hpp"

using namespace bkmf;

namespace {

std::mt19937_64 eng(90210);

Cmat random_mat(Index r, Index c) {
  std::normal_distribution<double> g;
  Cmat m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = Complex(g(eng), g(eng));
  return m;
}

double rel(const Cmat& a, const Cmat& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

// All four approximation states on one shifted dense matrix (spectrum in the
// right half plane, so z^{-1/2} is analytic on it).
struct Fixture {
  Cmat A, B;
  LinearOperator op;
  SpectralData sd;
  std::vector<Pole> poles;
  std::vector<ApproxState> states;
  std::vector<const char*> labels;

  Fixture(Index n, Index s, Index j) {
    A = random_mat(n, n) + 2.2 * std::sqrt(double(n)) * Cmat::Identity(n, n);
    B = random_mat(n, s);
    op = dense_operator(A);
    sd = SpectralData::dense(A);
    const double kap = kappa_eig(A);

    const Cmat C = random_mat(n, s);
    const BlockArnoldiDecomp dp = block_arnoldi(op, B, j);
    states.push_back(ApproxState::galerkin(dp, kap));
    labels.push_back("polynomial Galerkin");
    states.push_back(
        ApproxState::petrov(dp, dual_basis(dense_adjoint_operator(A), C, j), kap));
    labels.push_back("polynomial Petrov");

    poles.clear();
    for (Index i = 0; i + 1 < j; ++i)
      poles.push_back(Pole::at(Complex(1.5 + double(i), 2.0 - 1.5 * double(i))));
    poles.push_back(Pole::inf());
    const BlockRationalDecomp dr = rational_block_arnoldi(op, B, poles);
    states.push_back(ApproxState::galerkin(dr, kap));
    labels.push_back("rational Galerkin");
    states.push_back(
        ApproxState::petrov(dr, dual_basis(dense_adjoint_operator(A), C, poles), kap));
    labels.push_back("rational Petrov");
  }

  // g(A) X = (phi * f)(A) X through the eigendata, for the operator form of
  // the error representation.
  std::function<Cmat(const Cmat&)> apply_g(const ApproxState& st,
                                           const ScalarFunction& f) const {
    return [this, &st, f](const Cmat& X) -> Cmat {
      ScalarFunction g = ScalarFunction::custom(
          [&st, f](Complex z) { return st.phi(z) * f(z); }, "phi*f");
      return matfun_exact(sd, g, X);
    };
  }
};

Complex random_z() {
  std::normal_distribution<double> g;
  return Complex(g(eng), g(eng)) * 3.0;
}

}  // namespace

TEST_CASE("the three residual paths agree for every state") {
  Fixture fx(24, 3, 3);
  for (size_t k = 0; k < fx.states.size(); ++k) {
    const ApproxState& st = fx.states[k];
    CAPTURE(fx.labels[k]);
    for (int t = 0; t < 5; ++t) {
      const Complex z = random_z();
      const BlockVector X = st.pg_shifted_solve(z);
      const Cmat r_direct = residual_direct(fx.A, fx.B, X, z);
      const Cmat r_formula = st.residual_formula(z);
      const Cmat r_char = st.residual_charpoly_form(z);
      const double scale = std::max(1e-300, r_direct.norm());
      CHECK((r_formula - r_direct).norm() / scale < 1e-9);
      CHECK((r_char - r_direct).norm() / scale < 1e-9);
      CHECK((r_char - r_formula).norm() / scale < 1e-9);
    }
    // the three residual_direct overloads are interchangeable
    const Complex z(7.0, 1.0);
    const BlockVector X = st.pg_shifted_solve(z);
    const Cmat r1 = residual_direct(fx.A, fx.B, X, z);
    const Cmat r2 = residual_direct(fx.op, fx.B, X, z);
    const Cmat r3 = residual_direct(
        [&](const Cmat& Y) -> Cmat { return fx.A * Y; }, fx.B, X, z);
    CHECK((r1 - r2).norm() == 0.0);
    CHECK((r1 - r3).norm() == 0.0);
  }
}

TEST_CASE("rational residuals vanish at the poles of the space") {
  Fixture fx(24, 2, 4);
  for (size_t k = 2; k < 4; ++k) {
    const ApproxState& st = fx.states[k];
    CAPTURE(fx.labels[k]);
    for (const Complex sigma : st.sigmas()) {
      // literal residual of the shifted system at the pole
      const BlockVector X = st.pg_shifted_solve(sigma);
      CHECK(residual_direct(fx.A, fx.B, X, sigma).norm() < 1e-10 * fx.B.norm());
      // the characteristic-polynomial form is exactly zero there
      CHECK(st.residual_charpoly_form(sigma).norm() == 0.0);
    }
  }
}

TEST_CASE("error representations reproduce the true error") {
  Fixture fx(24, 2, 4);
  const std::vector<ScalarFunction> fns = {ScalarFunction::exponential(0.3),
                                           ScalarFunction::inverse_sqrt()};
  for (size_t k = 0; k < fx.states.size(); ++k) {
    const ApproxState& st = fx.states[k];
    CAPTURE(fx.labels[k]);
    for (const ScalarFunction& f : fns) {
      CAPTURE(f.name);
      const Cmat truth = matfun_exact(fx.sd, f, fx.B) - st.matfun_approx(f);
      REQUIRE(truth.norm() > 1e-12);  // the test is vacuous if j already converged
      CHECK(rel(st.error_formula_keldysh(f, fx.sd), truth) < 1e-7);
      CHECK(rel(st.error_formula_keldysh(f, fx.op, fx.apply_g(st, f)), truth) < 1e-7);
      CHECK(rel(st.error_formula_spectral(f, fx.sd), truth) < 1e-7);
    }
  }
}

TEST_CASE("both bounds dominate the true error on the exact spectrum") {
  Fixture fx(24, 2, 4);
  std::vector<Complex> eigs(fx.sd.lambda.data(), fx.sd.lambda.data() + fx.sd.lambda.size());
  const SpectralRegion region = SpectralRegion::explicit_list(eigs);
  const std::vector<ScalarFunction> fns = {ScalarFunction::exponential(0.3),
                                           ScalarFunction::inverse_sqrt()};
  for (size_t k = 0; k < fx.states.size(); ++k) {
    const ApproxState& st = fx.states[k];
    CAPTURE(fx.labels[k]);
    for (const ScalarFunction& f : fns) {
      CAPTURE(f.name);
      const double err =
          (matfun_exact(fx.sd, f, fx.B) - st.matfun_approx(f)).norm();
      CHECK(st.bound_L(f, region) >= err * (1.0 - 1e-10));
      CHECK(st.bound_M(f, region) >= err * (1.0 - 1e-10));
    }
  }
}

TEST_CASE("Hermitian case: interval region, unit kappa, tight bounds") {
  const Index n = 40, s = 2, j = 6;
  Cmat G = random_mat(n, n);
  Cmat A = 0.5 * (G + G.adjoint()) + 3.0 * std::sqrt(double(n)) * Cmat::Identity(n, n);
  const Cmat B = random_mat(n, s);
  const SpectralData sd = SpectralData::hermitian_dense(A);
  CHECK(sd.kappa == 1.0);
  CHECK(kappa_eig(A, StructureHint::hermitian) == 1.0);
  CHECK(kappa_eig(A) < 1.0 + 1e-8);

  const double lo = sd.lambda.real().minCoeff(), hi = sd.lambda.real().maxCoeff();
  const double pad = 0.05 * (hi - lo);
  const SpectralRegion region = SpectralRegion::real_interval(lo - pad, hi + pad, 400);

  const ApproxState st =
      ApproxState::galerkin(block_arnoldi(dense_operator(A), B, j), 1.0);
  const ScalarFunction f = ScalarFunction::exponential(0.15);
  const double err = (matfun_exact(sd, f, B) - st.matfun_approx(f)).norm();
  const double bM = st.bound_M(f, region);
  const double bL = st.bound_L(f, region);
  CHECK(bM >= err * (1.0 - 1e-10));
  CHECK(bL >= err * (1.0 - 1e-10));
  // the enlarged-interval bound should stay within a couple of orders
  CHECK(bM < 1e3 * err);
}

TEST_CASE("bound evaluation is identical under both execution policies") {
  Fixture fx(20, 2, 3);
  const ApproxState& st = fx.states[0];
  const SpectralRegion region = SpectralRegion::sector(1.0, 30.0, -1.2, 1.2, 24, 17);
  const ScalarFunction f = ScalarFunction::exponential(0.05);
  CHECK(st.bound_M(f, region, ExecPolicy::serial) ==
        st.bound_M(f, region, ExecPolicy::parallel));
  CHECK(st.bound_L(f, region, ExecPolicy::serial) ==
        st.bound_L(f, region, ExecPolicy::parallel));

  const std::vector<Complex> pts = region.points();
  const auto kernel = [](Complex z) { return std::abs(std::sin(z)) + std::abs(z); };
  CHECK(grid_max(pts, kernel, ExecPolicy::serial) ==
        grid_max(pts, kernel, ExecPolicy::parallel));
}

TEST_CASE("resolvent matrix function equals the projected shifted solve") {
  Fixture fx(22, 2, 4);
  const Complex p(9.0, 3.0);
  for (size_t k = 0; k < fx.states.size(); ++k) {
    const ApproxState& st = fx.states[k];
    CAPTURE(fx.labels[k]);
    CHECK(rel(st.matfun_approx(ScalarFunction::resolvent_at(p)),
              st.pg_shifted_solve(p)) < 1e-10);
  }
}

TEST_CASE("projected shifted solve rejects Ritz values") {
  Fixture fx(20, 2, 3);
  const ApproxState& st = fx.states[0];
  Eigen::ComplexEigenSolver<Cmat> es(st.projected(), false);
  CHECK_THROWS_AS(st.pg_shifted_solve(es.eigenvalues()(0)), ZIsRitzValue);
}

TEST_CASE("spectral regions validate their parameters") {
  CHECK_THROWS_AS(SpectralRegion::real_interval(2.0, 1.0).points(), RegionInvalid);
  CHECK_THROWS_AS(SpectralRegion::real_interval(0.0, 1.0, 1).points(), RegionInvalid);
  CHECK_THROWS_AS(SpectralRegion::sector(-1.0, 2.0, 0.0, 1.0).points(), RegionInvalid);
  CHECK_THROWS_AS(SpectralRegion::sector(2.0, 1.0, 0.0, 1.0).points(), RegionInvalid);
  CHECK_THROWS_AS(SpectralRegion::explicit_list({}).points(), RegionInvalid);

  CHECK(SpectralRegion::real_interval(0.0, 1.0, 11).points().size() == 11);
  const auto pts = SpectralRegion::real_interval(-1.0, 3.0, 5).points();
  CHECK(pts.front() == Complex(-1.0, 0.0));
  CHECK(pts.back() == Complex(3.0, 0.0));
  CHECK(SpectralRegion::sector(0.1, 10.0, -0.5, 0.5, 7, 9).points().size() == 7 * 9);
  const auto one = SpectralRegion::explicit_list({Complex(2.0, 1.0)}).points();
  CHECK(one.size() == 1);
  CHECK(one[0] == Complex(2.0, 1.0));
}

TEST_CASE("exact matrix functions through eigendata are trustworthy") {
  const Index n = 16;
  // inverse: compare against a direct solve
  Cmat A = random_mat(n, n) + 7.0 * Cmat::Identity(n, n);
  const Cmat B = random_mat(n, 3);
  const SpectralData sd = SpectralData::dense(A);
  CHECK(rel(matfun_exact(sd, ScalarFunction::inverse(), B),
            Cmat(A.partialPivLu().solve(B))) < 1e-10);

  // exponential: compare against the Taylor series for a small-norm matrix
  Cmat S = 0.02 * random_mat(n, n);
  const SpectralData sds = SpectralData::dense(S);
  Cmat series = B;
  Cmat term = B;
  for (int k = 1; k <= 25; ++k) {
    term = (S * term) / double(k);
    series += term;
  }
  CHECK(rel(matfun_exact(sds, ScalarFunction::exponential(), B), series) < 1e-12);

  // diagonal eigendata
  Cvec d = random_mat(5, 1).col(0);
  const SpectralData sdd = SpectralData::diagonal(d);
  Cmat expd = Cmat::Zero(5, 5);
  for (Index i = 0; i < 5; ++i) expd(i, i) = std::exp(d(i));
  CHECK(rel(matfun_exact(sdd, ScalarFunction::exponential(), Cmat(Cmat::Identity(5, 5))),
            expd) < 1e-13);
}

TEST_CASE("phi carries the pole structure of the state") {
  Fixture fx(20, 2, 4);
  const ApproxState& poly = fx.states[0];
  const ApproxState& rat = fx.states[2];
  const Complex z(1.3, -0.4);
  CHECK(poly.phi(z) == Complex(1.0, 0.0));
  CHECK(poly.phi_derivative(z) == Complex(0.0, 0.0));
  Complex expect(1.0, 0.0);
  for (Complex sig : rat.sigmas()) expect *= (z - sig);
  CHECK(std::abs(rat.phi(z) - expect) < 1e-14 * std::abs(expect));
  // derivative by a central difference
  const double h = 1e-6;
  const Complex fd = (rat.phi(z + h) - rat.phi(z - h)) / (2.0 * h);
  CHECK(std::abs(rat.phi_derivative(z) - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
}
