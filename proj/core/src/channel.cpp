#include "polarhyper/channel.hpp"

#include <cmath>

namespace polar {

NoiseSpec make_noise_spec(double ebn0_db, double rate) {
  NoiseSpec s;
  s.ebn0_db = ebn0_db;
  s.rate = rate;
  s.sigma = 1.0 / std::sqrt(2.0 * rate * std::pow(10.0, ebn0_db / 10.0));
  return s;
}

std::vector<double> modulate(const std::vector<std::uint8_t>& x) {
  std::vector<double> s(x.size());
  for (size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? -1.0 : 1.0;
  return s;
}

void add_noise(std::vector<double>& s, const NoiseSpec& spec, GaussianStream& rng) {
  for (double& v : s) v += spec.sigma * rng.gaussian();
}

std::vector<double> channel_llr(const std::vector<double>& y, const NoiseSpec& spec) {
  const double scale = 2.0 / (spec.sigma * spec.sigma);
  std::vector<double> llr(y.size());
  for (size_t i = 0; i < y.size(); ++i) llr[i] = clamp_llr(scale * y[i]);
  return llr;
}

}  // namespace polar
