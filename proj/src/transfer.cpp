#include "bkmf/transfer.hpp"

#include "bkmf/krylov.hpp"
#include "bkmf/operators.hpp"

namespace bkmf {

namespace {

void check_system(const LtiSystem& sys) {
  const Index n = sys.A.rows();
  if (sys.A.cols() != n || sys.B.rows() != n || sys.C.rows() != n ||
      sys.B.cols() != sys.C.cols() || sys.B.cols() < 1)
    throw AssumptionsViolated("inconsistent state-space dimensions");
}

// (z I - A)^{-1} rhs where z living on the spectrum of the *full* matrix is
// the caller's error, not a Ritz collision.
Cmat full_solve(const Cmat& A, Complex z, const Cmat& rhs) {
  try {
    return shifted_solve_checked(A, z, rhs);
  } catch (const ZIsRitzValue&) {
    throw ZIsEigenvalue(z);
  }
}

std::vector<Pole> conjugated(const std::vector<Pole>& poles) {
  std::vector<Pole> out;
  out.reserve(poles.size());
  for (const Pole& p : poles)
    out.push_back(p.infinite ? Pole::inf() : Pole::at(std::conj(p.value)));
  return out;
}

}  // namespace

Cmat transfer_exact(const LtiSystem& sys, Complex z) {
  check_system(sys);
  return sys.C.adjoint() * full_solve(sys.A, z, sys.B);
}

MomentMatch MomentMatch::polynomial(const LtiSystem& sys, Index j) {
  check_system(sys);
  MomentMatch mm;
  mm.sys_ = sys;
  BlockArnoldiDecomp db = block_arnoldi(dense_operator(sys.A), sys.B, j);
  BlockArnoldiDecomp dc = block_arnoldi(dense_adjoint_operator(sys.A), sys.C, j);
  mm.in_ = ApproxState::petrov(db, dc.basis_j(), 1.0);
  mm.out_ = ApproxState::petrov(dc, db.basis_j(), 1.0);
  return mm;
}

MomentMatch MomentMatch::rational(const LtiSystem& sys,
                                  const std::vector<Pole>& input_poles,
                                  const std::vector<Pole>& output_poles) {
  check_system(sys);
  MomentMatch mm;
  mm.sys_ = sys;
  BlockRationalDecomp db =
      rational_block_arnoldi(dense_operator(sys.A), sys.B, input_poles);
  BlockRationalDecomp dc = rational_block_arnoldi(dense_adjoint_operator(sys.A),
                                                  sys.C, conjugated(output_poles));
  mm.in_ = ApproxState::petrov(db, dc.basis_j(), 1.0);
  mm.out_ = ApproxState::petrov(dc, db.basis_j(), 1.0);
  for (const Pole& p : input_poles)
    if (!p.infinite) mm.interp_.push_back(p.value);
  for (const Pole& p : output_poles)
    if (!p.infinite) mm.interp_.push_back(p.value);
  return mm;
}

TransferValue MomentMatch::reduced(Complex z) const {
  Cmat value = sys_.C.adjoint() * in_->pg_shifted_solve(z);
  Cmat dual = out_->pg_shifted_solve(std::conj(z)).adjoint() * sys_.B;
  return {value, (value - dual).norm()};
}

Cmat MomentMatch::error(Complex z, ErrorForm form) const {
  Cmat res_b, res_c;
  if (form == ErrorForm::collinear) {
    res_b = in_->residual_formula(z);
    res_c = out_->residual_formula(std::conj(z));
  } else {
    res_b = in_->residual_charpoly_form(z);
    res_c = out_->residual_charpoly_form(std::conj(z));
  }
  return res_c.adjoint() * full_solve(sys_.A, z, res_b);
}

}  // namespace bkmf
