#pragma once

#include <variant>
#include <vector>

#include "bkmf/core.hpp"

namespace bkmf {

// A pole for rational Krylov: either a finite complex shift or infinity
// (= a polynomial step).
struct Pole {
  bool infinite = true;
  Complex value{0.0, 0.0};

  static Pole inf() { return Pole{}; }
  static Pole at(Complex sigma) { return Pole{false, sigma}; }

  bool operator==(const Pole& o) const {
    return infinite == o.infinite && (infinite || value == o.value);
  }
};

// Complete elliptic integral of the first kind K(k), 0 <= k < 1, via the
// arithmetic-geometric mean.
double elliptic_K(double k);

// Jacobi elliptic dn(u, k) for real u, 0 <= k <= 1 (descending Landen / AGM).
double jacobi_dn(double u, double k);

// Base-2 van der Corput value (bit-reversed n in [0,1)).
double van_der_corput(unsigned long long n);

// Nested pole sequence for the classical rational minimax problem on [a, b]
// versus [-b, -a] (0 < a < b): the method of equidistributed sequences.
// The asymptotically optimal poles fill [-b, -a] with the elliptic
// equilibrium density; a nested sequence is obtained by driving the inverse
// distribution map
//     sigma(t) = -b * dn(t * K(k), k),   k^2 = 1 - (a/b)^2,
// with the low-discrepancy sequence t_1 = 0, t_j = van_der_corput(j-1).
//
// Returns `count` poles: count-1 finite negative-real ones followed by the
// trailing infinite pole the decompositions require.
std::vector<Pole> generate_poles_eds(double a, double b, int count);

}  // namespace bkmf
