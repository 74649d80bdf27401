/* Branchless exp/tanh/logistic used in the decoder hot loops.
 * Pure FP arithmetic (no libm calls) so the compiler can vectorize
 * activation loops; tanh is odd by construction and logistic uses the
 * one-sided exp identity, which keeps sign symmetry bit-exact. */
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace polar {

inline double fm_exp(double x) {
  x = x > 708.0 ? 708.0 : (x < -708.0 ? -708.0 : x);
  constexpr double log2e = 1.4426950408889634074;
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  double k = std::nearbyint(x * log2e);
  double r = std::fma(-k, ln2_hi, x);
  r = std::fma(-k, ln2_lo, r);
  double p = 1.0 / 39916800.0;
  p = std::fma(p, r, 1.0 / 3628800.0);
  p = std::fma(p, r, 1.0 / 362880.0);
  p = std::fma(p, r, 1.0 / 40320.0);
  p = std::fma(p, r, 1.0 / 5040.0);
  p = std::fma(p, r, 1.0 / 720.0);
  p = std::fma(p, r, 1.0 / 120.0);
  p = std::fma(p, r, 1.0 / 24.0);
  p = std::fma(p, r, 1.0 / 6.0);
  p = std::fma(p, r, 0.5);
  p = std::fma(p, r, 1.0);
  p = std::fma(p, r, 1.0);
  std::uint64_t bits = (std::uint64_t)((std::int64_t)k + 1023) << 52;
  double s;
  std::memcpy(&s, &bits, 8);
  return p * s;
}

inline double fm_tanh(double x) {
  double ax = std::fabs(x);
  double y;
  if (ax < 1.220703125e-4) {
    y = ax - ax * ax * ax * (1.0 / 3.0);
  } else {
    double t = fm_exp(-2.0 * ax);
    y = (1.0 - t) / (1.0 + t);
  }
  return x < 0.0 ? -y : y;
}

inline double fm_logistic(double x) {
  double t = fm_exp(-std::fabs(x));
  double p = 1.0 / (1.0 + t);
  return x < 0.0 ? t * p : p;
}

}  // namespace polar
