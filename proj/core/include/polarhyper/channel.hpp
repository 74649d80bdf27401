/* BPSK over AWGN and the matching LLR front end.
 * Eb/N0 is per information bit: sigma = (2 R 10^(EbN0/10))^{-1/2}, and the
 * demodulator emits 2y/sigma^2 clamped to +-kLlrSat. */
#pragma once

#include <vector>

#include "polarhyper/llr.hpp"
#include "polarhyper/rng.hpp"

namespace polar {

struct NoiseSpec {
  double ebn0_db = 0.0;
  double rate = 0.5;
  double sigma = 1.0;
};

NoiseSpec make_noise_spec(double ebn0_db, double rate);

// 0 -> +1, 1 -> -1
std::vector<double> modulate(const std::vector<std::uint8_t>& x);

void add_noise(std::vector<double>& s, const NoiseSpec& spec, GaussianStream& rng);

std::vector<double> channel_llr(const std::vector<double>& y, const NoiseSpec& spec);

}  // namespace polar
