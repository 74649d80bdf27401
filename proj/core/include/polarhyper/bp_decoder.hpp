/* Belief propagation on the polar factor graph.
 * The grid holds (n+1) x N left/right messages; row r is stage r+1 of the
 * graph, so L row n carries the channel LLRs and R row 0 the frozen priors.
 * One iteration is a right pass over stages 1..n (fresh R, previous L)
 * followed by a left pass over stages n..1 (fresh R and fresh L); every
 * written message is clamped to +-kLlrSat.
 *
 * Stage s (0-based) pairs j with j + N/2^{s+1} inside blocks of N/2^s:
 *   R[s+1][j]  = g(R[s][j], L[s+1][jp] + R[s][jp])
 *   R[s+1][jp] = g(R[s][j], L[s+1][j]) + R[s][jp]
 *   L[s][j]    = g(L[s+1][j], L[s+1][jp] + R[s][jp])
 *   L[s][jp]   = g(R[s][j], L[s+1][j]) + L[s+1][jp]
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "polarhyper/llr.hpp"
#include "polarhyper/polar_code.hpp"

namespace polar {

enum class Kernel : std::uint8_t { Exact = 0, MinSum = 1 };

// 2 artanh(tanh(x/2) tanh(y/2)), evaluated in the overflow-safe form
// min(a,b) + log1p(e^{-(a+b)}) - log1p(e^{-|a-b|}) on a=|x|, b=|y| with the
// sign split off. Working on magnitudes keeps the identity
// g(sx*x, sy*y) == sx*sy*g(x, y) exact in floating point, which the
// sign-translation tests rely on.
inline double g_exact(double x, double y) {
  double a = std::fabs(x), b = std::fabs(y);
  double v = std::fmin(a, b) + std::log1p(std::exp(-(a + b))) -
             std::log1p(std::exp(-std::fabs(a - b)));
  return ((x < 0.0) == (y < 0.0)) ? v : -v;
}

inline double g_minsum(double x, double y) {
  double sx = (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  double sy = (y > 0.0) ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
  return sx * sy * std::fmin(std::fabs(x), std::fabs(y));
}

inline double g_apply(Kernel k, double x, double y) {
  return k == Kernel::Exact ? g_exact(x, y) : g_minsum(x, y);
}

// Partial derivatives of g. Min-sum routes the kink |x|=|y| to the first
// argument; the exact kernel uses sech^2 computed from exp(-|x|) so the
// quotient stays finite even when both tanh factors round to 1.
struct GGrad {
  double dx, dy;
};

inline GGrad g_grad(Kernel k, double x, double y) {
  if (k == Kernel::MinSum) {
    double sx = (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    double sy = (y > 0.0) ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
    if (std::fabs(x) <= std::fabs(y)) return {sy, 0.0};
    return {0.0, sx};
  }
  double p = std::tanh(0.5 * x);
  double q = std::tanh(0.5 * y);
  double ex = std::exp(-std::fabs(x));
  double ey = std::exp(-std::fabs(y));
  double dx_sech = 4.0 * ex / ((1.0 + ex) * (1.0 + ex));  // sech^2(x/2)
  double dy_sech = 4.0 * ey / ((1.0 + ey) * (1.0 + ey));
  double denom = dx_sech + dy_sech - dx_sech * dy_sech;   // 1 - p^2 q^2
  if (denom <= 0.0) return {0.0, 0.0};
  return {q * dx_sech / denom, p * dy_sech / denom};
}

struct MessageGrid {
  int n = 0, N = 0;
  std::vector<double> L, R;  // (n+1) rows x N columns, row-major

  double& l(int row, int j) { return L[(size_t)row * N + j]; }
  double& r(int row, int j) { return R[(size_t)row * N + j]; }
  double l(int row, int j) const { return L[(size_t)row * N + j]; }
  double r(int row, int j) const { return R[(size_t)row * N + j]; }
};

MessageGrid init_messages(const PolarCode& code, const std::vector<double>& llr);
void bp_iteration(const PolarCode& code, MessageGrid& m, Kernel kernel);

// u_hat[j] = 0 iff stage-1 L[j] >= 0 (frozen positions included as decoded).
std::vector<std::uint8_t> hard_decision(const MessageGrid& m);

struct BpResult {
  std::vector<std::uint8_t> u_hat;
  std::vector<double> l1;  // stage-1 L row after the last iteration
};

BpResult bp_decode(const PolarCode& code, const std::vector<double>& llr,
                   int iterations, Kernel kernel);

}  // namespace polar
