#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace bkmf {

// Base class for everything thrown by this library on bad numerical input.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A block orthogonalization step produced a rank-deficient block: the Krylov
// space became (numerically) invariant before the requested number of steps.
struct BreakdownOrDeflation : Error {
  int step;
  int rank;
  BreakdownOrDeflation(int step_, int rank_)
      : Error("block basis extension broke down at step " + std::to_string(step_) +
              " (new block has rank " + std::to_string(rank_) + ")"),
        step(step_), rank(rank_) {}
};

// (sigma*I - A) could not be inverted for a requested pole sigma.
struct ShiftedSolveFailed : Error {
  std::complex<double> shift;
  explicit ShiftedSolveFailed(std::complex<double> sigma)
      : Error("shifted solve failed: sigma*I - A is singular to working precision"),
        shift(sigma) {}
};

// A structural precondition (invertibility of Z*U, trailing infinite pole,
// shape mismatch, ...) does not hold.
struct AssumptionsViolated : Error {
  using Error::Error;
};

// A subdiagonal block of a block Hessenberg matrix is singular, so the
// characteristic-polynomial recurrences cannot run.
struct SingularSubdiagonal : Error {
  int index;
  explicit SingularSubdiagonal(int index_)
      : Error("subdiagonal block " + std::to_string(index_) +
              " is singular to working precision"),
        index(index_) {}
};

// The pair (N, W) is not controllable: the Hessenberg reduction produced a
// singular subdiagonal block, so no degree-j annihilating polynomial of the
// required form exists.
struct UncontrollablePair : Error {
  int index;
  explicit UncontrollablePair(int index_)
      : Error("pair (N, W) is uncontrollable: subdiagonal block " +
              std::to_string(index_) + " of its Hessenberg form is singular"),
        index(index_) {}
};

// Eigen-triplet extraction needs simple (or at least nondefective) eigenvalues.
struct SimpleEigsRequired : Error {
  using Error::Error;
};

// A matrix function was requested for a matrix whose eigenvector basis is
// numerically singular.
struct DiagonalizableRequired : Error {
  using Error::Error;
};

// An evaluation point collides with a Ritz value of the projected matrix.
struct ZIsRitzValue : Error {
  std::complex<double> z;
  explicit ZIsRitzValue(std::complex<double> z_)
      : Error("evaluation point z coincides with a Ritz value"), z(z_) {}
};

// An evaluation point collides with an eigenvalue of the full matrix.
struct ZIsEigenvalue : Error {
  std::complex<double> z;
  explicit ZIsEigenvalue(std::complex<double> z_)
      : Error("evaluation point z coincides with an eigenvalue of A"), z(z_) {}
};

// A Ritz value collides with the spectrum of A where a separated shifted
// solve cannot take the divided-difference limit.
struct ThetaHitsSpectrum : Error {
  std::complex<double> theta;
  explicit ThetaHitsSpectrum(std::complex<double> theta_)
      : Error("Ritz value coincides with an eigenvalue of A"), theta(theta_) {}
};

// A sampling region is empty or inverted.
struct RegionInvalid : Error {
  using Error::Error;
};

// An operation that needs all finite poles met an interior infinite pole.
struct InfinitePoleUnsupported : Error {
  using Error::Error;
};

}  // namespace bkmf
