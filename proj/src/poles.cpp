#include "bkmf/poles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bkmf {

namespace {

// Both AGM routines take the complementary modulus k' directly: recovering
// k' from k via sqrt(1 - k^2) halves the accuracy once k is within sqrt(eps)
// of 1, which is exactly the regime the pole generator works in.

double elliptic_K_from_kp(double kp) {
  // The AGM gains digits quadratically but stalls a couple of ulps away from
  // a == b, so the exit test must sit at machine precision with a hard cap.
  const double eps = std::numeric_limits<double>::epsilon();
  double a = 1.0, b = kp;
  for (int i = 0; i < 60 && std::abs(a - b) > 2.0 * eps * a; ++i) {
    double am = 0.5 * (a + b), gm = std::sqrt(a * b);
    a = am;
    b = gm;
  }
  return M_PI / (2.0 * a);
}

double jacobi_dn_from_kp(double u, double k, double kp) {
  if (k < 1e-12) return 1.0;  // dn(u, 0) = 1
  // Amplitude phi_0 by the AGM descent (Abramowitz & Stegun 16.4). The scale
  // doubling 2^nlev in the seed phase means stalled extra levels would wreck
  // the phase, so stop as soon as c reaches the rounding floor.
  constexpr int kMax = 32;
  const double eps = std::numeric_limits<double>::epsilon();
  double a[kMax], c[kMax];
  a[0] = 1.0;
  c[0] = k;
  double b = kp;
  int nlev = 0;
  for (int i = 1; i < kMax; ++i) {
    a[i] = 0.5 * (a[i - 1] + b);
    c[i] = 0.5 * (a[i - 1] - b);
    b = std::sqrt(a[i - 1] * b);
    nlev = i;
    if (std::abs(c[i]) <= eps * a[i]) break;
  }
  // Descend: phi_{i-1} = (phi_i + asin((c_i/a_i) sin phi_i)) / 2.
  double phi = std::ldexp(a[nlev] * u, nlev);  // phi_N
  for (int i = nlev; i >= 1; --i) {
    double t = std::clamp(c[i] * std::sin(phi) / a[i], -1.0, 1.0);
    phi = 0.5 * (phi + std::asin(t));
  }
  // dn^2 = 1 - k^2 sin^2(phi_0) = k'^2 + k^2 cos^2(phi_0), computed in the
  // cancellation-free right-hand form (exact near the quarter period too).
  return std::hypot(kp, k * std::cos(phi));
}

}  // namespace

double elliptic_K(double k) {
  if (!(k >= 0.0 && k < 1.0))
    throw AssumptionsViolated("elliptic_K: modulus must lie in [0, 1)");
  return elliptic_K_from_kp(std::sqrt((1.0 - k) * (1.0 + k)));
}

double jacobi_dn(double u, double k) {
  if (!(k >= 0.0 && k <= 1.0))
    throw AssumptionsViolated("jacobi_dn: modulus must lie in [0, 1]");
  if (k == 1.0) return 1.0 / std::cosh(u);
  return jacobi_dn_from_kp(u, k, std::sqrt((1.0 - k) * (1.0 + k)));
}

double van_der_corput(unsigned long long n) {
  double x = 0.0, f = 0.5;
  while (n) {
    if (n & 1ULL) x += f;
    n >>= 1ULL;
    f *= 0.5;
  }
  return x;
}

std::vector<Pole> generate_poles_eds(double a, double b, int count) {
  if (!(a > 0.0) || !(b > a) || count < 1)
    throw AssumptionsViolated("generate_poles_eds: need 0 < a < b and count >= 1");
  // Complementary modulus k' = a/b is exact; k = sqrt(1 - k'^2) only enters
  // where its sensitivity is benign.
  const double kp = a / b;
  const double k = std::sqrt(std::max(0.0, (1.0 - kp) * (1.0 + kp)));
  const double K = elliptic_K_from_kp(kp);
  std::vector<Pole> poles;
  poles.reserve(count);
  for (int j = 1; j <= count - 1; ++j) {
    double t = (j == 1) ? 0.0 : van_der_corput(static_cast<unsigned long long>(j - 1));
    // For t beyond the midpoint use dn(K - u) = k'/dn(u), which keeps full
    // relative accuracy on the small-magnitude poles.
    double sigma = (t <= 0.5) ? -b * jacobi_dn_from_kp(t * K, k, kp)
                              : -a / jacobi_dn_from_kp((1.0 - t) * K, k, kp);
    poles.push_back(Pole::at(Complex(sigma, 0.0)));
  }
  poles.push_back(Pole::inf());
  return poles;
}

}  // namespace bkmf
