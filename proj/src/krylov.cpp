#include "bkmf/krylov.hpp"

#include <Eigen/LU>

namespace bkmf {

BlockArnoldiDecomp BlockArnoldiDecomp::truncated(Index jsub) const {
  if (jsub < 1 || jsub > j)
    throw AssumptionsViolated("truncated: step count out of range");
  BlockArnoldiDecomp d;
  d.U = U.leftCols((jsub + 1) * s);
  d.Hbar = Hbar.topLeftCorner((jsub + 1) * s, jsub * s);
  d.R_B = R_B;
  d.s = s;
  d.j = jsub;
  return d;
}

std::vector<Complex> BlockRationalDecomp::finite_sigmas() const {
  std::vector<Complex> out;
  for (Index i = 0; i + 1 < j; ++i)
    if (!poles[i].infinite) out.push_back(poles[i].value);
  return out;
}

bool BlockRationalDecomp::interior_all_finite() const {
  for (Index i = 0; i + 1 < j; ++i)
    if (poles[i].infinite) return false;
  return true;
}

namespace {

// Classical block Gram-Schmidt against the built basis, run twice; returns
// the accumulated coefficients (basis_cols x s) and leaves W orthogonal.
Cmat cgs2(const Cmat& basis, Cmat& W) {
  Cmat c1 = basis.adjoint() * W;
  W.noalias() -= basis * c1;
  Cmat c2 = basis.adjoint() * W;
  W.noalias() -= basis * c2;
  return c1 + c2;
}

}  // namespace

BlockArnoldi::BlockArnoldi(LinearOperator op, const Cmat& B) : op_(std::move(op)) {
  n_ = B.rows();
  s_ = B.cols();
  if (op_.n != n_) throw AssumptionsViolated("block_arnoldi: operator/block size mismatch");
  ThinQr qr = thin_block_qr(B);
  if (qr.rank < s_) throw BreakdownOrDeflation(1, qr.rank);
  U_ = qr.Q;
  R_B_ = qr.R;
  Hbar_ = Cmat(s_, 0);
}

void BlockArnoldi::step() {
  const Index cols = (j_ + 1) * s_;
  Cmat W = op_.apply(U_.rightCols(s_));
  Cmat coeff = cgs2(U_, W);
  ThinQr qr = thin_block_qr(W);
  if (qr.rank < s_) throw BreakdownOrDeflation(static_cast<int>(j_) + 2, qr.rank);

  U_.conservativeResize(Eigen::NoChange, cols + s_);
  U_.rightCols(s_) = qr.Q;
  Hbar_.conservativeResize(cols + s_, cols);
  Hbar_.rightCols(s_).setZero();
  Hbar_.bottomRows(s_).setZero();
  Hbar_.block(0, j_ * s_, cols, s_) = coeff;
  Hbar_.block(cols, j_ * s_, s_, s_) = qr.R;
  ++j_;
}

BlockArnoldiDecomp BlockArnoldi::decomp() const {
  if (j_ < 1) throw AssumptionsViolated("block_arnoldi: no steps taken yet");
  BlockArnoldiDecomp d;
  d.U = U_;
  d.Hbar = Hbar_;
  d.R_B = R_B_;
  d.s = s_;
  d.j = j_;
  return d;
}

BlockArnoldiDecomp block_arnoldi(const LinearOperator& op, const Cmat& B, Index steps) {
  BlockArnoldi b(op, B);
  for (Index i = 0; i < steps; ++i) b.step();
  return b.decomp();
}

RationalBlockArnoldi::RationalBlockArnoldi(LinearOperator op, const Cmat& B)
    : op_(std::move(op)) {
  n_ = B.rows();
  s_ = B.cols();
  if (op_.n != n_)
    throw AssumptionsViolated("rational_block_arnoldi: operator/block size mismatch");
  ThinQr qr = thin_block_qr(B);
  if (qr.rank < s_) throw BreakdownOrDeflation(1, qr.rank);
  U_ = qr.Q;
  R_B_ = qr.R;
  Hbar_ = Cmat(s_, 0);
  Kbar_ = Cmat(s_, 0);
}

void RationalBlockArnoldi::step(Pole pole) {
  const Index cols = (j_ + 1) * s_;
  Cmat W;
  if (pole.infinite) {
    W = op_.apply(U_.rightCols(s_));
  } else {
    if (!op_.can_solve())
      throw AssumptionsViolated("rational_block_arnoldi: operator has no shifted solve");
    W = op_.solve_shifted(pole.value, U_.rightCols(s_));
  }
  Cmat coeff = cgs2(U_, W);
  ThinQr qr = thin_block_qr(W);
  if (qr.rank < s_) throw BreakdownOrDeflation(static_cast<int>(j_) + 2, qr.rank);

  U_.conservativeResize(Eigen::NoChange, cols + s_);
  U_.rightCols(s_) = qr.Q;
  Hbar_.conservativeResize(cols + s_, cols);
  Kbar_.conservativeResize(cols + s_, cols);
  Hbar_.rightCols(s_).setZero();
  Hbar_.bottomRows(s_).setZero();
  Kbar_.rightCols(s_).setZero();
  Kbar_.bottomRows(s_).setZero();

  // chat stacks the Gram-Schmidt coefficients over the new QR factor: the
  // orthogonalized step satisfies  W_raw = U_{1..j+1} chat.
  auto set_col = [&](Cmat& dst, const Cmat& top, const Cmat& bottom) {
    dst.block(0, j_ * s_, cols, s_) = top;
    dst.block(cols, j_ * s_, s_, s_) = bottom;
  };
  if (pole.infinite) {
    // A U_last = U chat  ->  Kbar column is E_last, Hbar column is chat.
    Cmat e_top = Cmat::Zero(cols, s_);
    e_top.block(j_ * s_, 0, s_, s_) = Cmat::Identity(s_, s_);
    set_col(Kbar_, e_top, Cmat::Zero(s_, s_));
    set_col(Hbar_, coeff, qr.R);
  } else {
    // (sigma I - A)^{-1} U_last = U chat  ->  A U chat = sigma U chat - U_last.
    Cmat h_top = pole.value * coeff;
    h_top.block(j_ * s_, 0, s_, s_) -= Cmat::Identity(s_, s_);
    set_col(Kbar_, coeff, qr.R);
    set_col(Hbar_, h_top, pole.value * qr.R);
  }
  poles_.push_back(pole);
  ++j_;
}

BlockRationalDecomp RationalBlockArnoldi::decomp() const {
  if (j_ < 1) throw AssumptionsViolated("rational_block_arnoldi: no steps taken yet");
  BlockRationalDecomp d;
  d.U = U_;
  d.Hbar = Hbar_;
  d.Kbar = Kbar_;
  d.poles = poles_;
  d.R_B = R_B_;
  d.s = s_;
  d.j = j_;
  return d;
}

BlockRationalDecomp rational_block_arnoldi(const LinearOperator& op, const Cmat& B,
                                           const std::vector<Pole>& poles) {
  if (poles.empty() || !poles.back().infinite)
    throw AssumptionsViolated(
        "rational_block_arnoldi: pole list must end with the infinite pole");
  RationalBlockArnoldi b(op, B);
  for (const Pole& p : poles) b.step(p);
  return b.decomp();
}

namespace {

// Right division X = N / D, i.e. the solution of X D = N.
Cmat right_divide(const Cmat& N, const Cmat& D) {
  return D.transpose().partialPivLu().solve(N.transpose()).transpose();
}

// (Z* U_j)^{-1} Z* U_{j+1} Gamma_{j+1}, the shared Petrov correction block.
Cmat petrov_correction(const Cmat& Uj, const Cmat& Ulast, const Cmat& gamma_last,
                       const Cmat& Z, double& cond_out) {
  Cmat ZU = Z.adjoint() * Uj;
  cond_out = condition_number(ZU);
  if (cond_out > 1e12)
    throw AssumptionsViolated("projected_matrix: Z*U is singular to working precision");
  return ZU.partialPivLu().solve(Z.adjoint() * (Ulast * gamma_last));
}

}  // namespace

ProjectedPair projected_matrix(const BlockArnoldiDecomp& d) {
  ProjectedPair p;
  p.Aproj = d.H();
  p.Htilde = p.Aproj;
  return p;
}

ProjectedPair projected_matrix(const BlockArnoldiDecomp& d, const Cmat& Z) {
  if (Z.rows() != d.U.rows() || Z.cols() != d.j * d.s)
    throw AssumptionsViolated("projected_matrix: test basis has wrong shape");
  ProjectedPair p;
  p.galerkin = false;
  Cmat corr = petrov_correction(d.basis_j(), d.block(d.j + 1), d.gamma(d.j + 1), Z,
                                p.zu_cond);
  p.Aproj = d.H();
  p.Aproj.rightCols(d.s) += corr;
  p.Htilde = p.Aproj;
  return p;
}

ProjectedPair projected_matrix(const BlockRationalDecomp& d) {
  if (!d.last_pole_infinite())
    throw AssumptionsViolated("projected_matrix: decomposition must end at an infinite pole");
  ProjectedPair p;
  p.Htilde = d.H();
  p.Aproj = right_divide(p.Htilde, d.K());
  return p;
}

ProjectedPair projected_matrix(const BlockRationalDecomp& d, const Cmat& Z) {
  if (!d.last_pole_infinite())
    throw AssumptionsViolated("projected_matrix: decomposition must end at an infinite pole");
  if (Z.rows() != d.U.rows() || Z.cols() != d.j * d.s)
    throw AssumptionsViolated("projected_matrix: test basis has wrong shape");
  ProjectedPair p;
  p.galerkin = false;
  Cmat corr = petrov_correction(d.basis_j(), d.block(d.j + 1), d.gamma_last(), Z,
                                p.zu_cond);
  p.Htilde = d.H();
  p.Htilde.rightCols(d.s) += corr;
  p.Aproj = right_divide(p.Htilde, d.K());
  return p;
}

Cmat dual_basis(const LinearOperator& op, const Cmat& C, Index steps) {
  return block_arnoldi(op, C, steps).basis_j();
}

Cmat dual_basis(const LinearOperator& op, const Cmat& C, const std::vector<Pole>& poles) {
  return rational_block_arnoldi(op, C, poles).basis_j();
}

}  // namespace bkmf
