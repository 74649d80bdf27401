#pragma once

namespace polar {

// Saturation magnitude for every message and channel LLR; frozen priors use
// +kLlrSat as the finite stand-in for certainty.
constexpr double kLlrSat = 30.0;

inline double clamp_llr(double v) {
  return v > kLlrSat ? kLlrSat : (v < -kLlrSat ? -kLlrSat : v);
}

}  // namespace polar
