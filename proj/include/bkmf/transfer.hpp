#pragma once

#include <optional>
#include <vector>

#include "bkmf/approx.hpp"
#include "bkmf/core.hpp"
#include "bkmf/poles.hpp"

namespace bkmf {

// State-space system x' = Ax + Bu, y = C^* x with square A and matching
// block widths. Desk scale: A is stored densely.
struct LtiSystem {
  Cmat A;  // n x n
  Cmat B;  // n x s
  Cmat C;  // n x s
};

// G(z) = C^* (z I - A)^{-1} B. Throws ZIsEigenvalue on the spectrum.
Cmat transfer_exact(const LtiSystem& sys, Complex z);

struct TransferValue {
  Cmat value;       // s x s reduced transfer function
  double dual_gap;  // || C^* X_B(z) - X_C(conj z)^* B ||_F consistency check
};

enum class ErrorForm { collinear, keldysh };

// Two-sided moment matching: an input-side space built from (A, B) and an
// output-side space built from (A^*, C), each used as the other's dual basis.
// The output side uses the conjugated shift list so that the reduced transfer
// function interpolates G exactly at the requested (unconjugated) points.
class MomentMatch {
 public:
  static MomentMatch polynomial(const LtiSystem& sys, Index j);
  static MomentMatch rational(const LtiSystem& sys,
                              const std::vector<Pole>& input_poles,
                              const std::vector<Pole>& output_poles);

  const ApproxState& input() const { return *in_; }
  const ApproxState& output() const { return *out_; }
  // Finite interpolation points (input shifts followed by output shifts).
  const std::vector<Complex>& interpolation_points() const { return interp_; }

  // Reduced transfer function C^* X_{B,j}(z), plus the gap to its dual
  // evaluation X_{C,j}(conj z)^* B (equal in exact arithmetic).
  TransferValue reduced(Complex z) const;

  // Exact interpolation error G(z) - G_reduced(z), evaluated as
  //   Res_C(conj z)^* (z I - A)^{-1} Res_B(z)
  // with the residuals taken from the resolvent form (collinear) or from the
  // characteristic-polynomial form (keldysh).
  Cmat error(Complex z, ErrorForm form = ErrorForm::collinear) const;

 private:
  MomentMatch() = default;
  LtiSystem sys_;
  std::optional<ApproxState> in_, out_;
  std::vector<Complex> interp_;
};

}  // namespace bkmf
