#include "polarhyper/bp_decoder.hpp"

#include <stdexcept>

namespace polar {

MessageGrid init_messages(const PolarCode& code, const std::vector<double>& llr) {
  if ((int)llr.size() != code.N)
    throw std::invalid_argument("llr length must equal N");
  MessageGrid m;
  m.n = code.n;
  m.N = code.N;
  m.L.assign((size_t)(code.n + 1) * code.N, 0.0);
  m.R.assign((size_t)(code.n + 1) * code.N, 0.0);
  for (int j = 0; j < code.N; ++j) m.l(code.n, j) = clamp_llr(llr[j]);
  for (int j = 0; j < code.N; ++j)
    m.r(0, j) = code.is_frozen(j) ? kLlrSat : 0.0;
  return m;
}

void bp_iteration(const PolarCode& code, MessageGrid& m, Kernel kernel) {
  const int n = code.n, N = code.N;
  for (int s = 0; s < n; ++s) {
    const int half = N >> (s + 1);
    const int block = N >> s;
    for (int base = 0; base < N; base += block) {
      for (int o = 0; o < half; ++o) {
        const int j = base + o, jp = j + half;
        const double rj = m.r(s, j), rjp = m.r(s, jp);
        const double lj = m.l(s + 1, j), ljp = m.l(s + 1, jp);
        m.r(s + 1, j) = clamp_llr(g_apply(kernel, rj, ljp + rjp));
        m.r(s + 1, jp) = clamp_llr(g_apply(kernel, rj, lj) + rjp);
      }
    }
  }
  for (int s = n - 1; s >= 0; --s) {
    const int half = N >> (s + 1);
    const int block = N >> s;
    for (int base = 0; base < N; base += block) {
      for (int o = 0; o < half; ++o) {
        const int j = base + o, jp = j + half;
        const double rj = m.r(s, j), rjp = m.r(s, jp);
        const double lj = m.l(s + 1, j), ljp = m.l(s + 1, jp);
        m.l(s, j) = clamp_llr(g_apply(kernel, lj, ljp + rjp));
        m.l(s, jp) = clamp_llr(g_apply(kernel, rj, lj) + ljp);
      }
    }
  }
}

std::vector<std::uint8_t> hard_decision(const MessageGrid& m) {
  std::vector<std::uint8_t> u((size_t)m.N);
  for (int j = 0; j < m.N; ++j) u[j] = m.l(0, j) >= 0.0 ? 0 : 1;
  return u;
}

BpResult bp_decode(const PolarCode& code, const std::vector<double>& llr,
                   int iterations, Kernel kernel) {
  MessageGrid m = init_messages(code, llr);
  for (int t = 0; t < iterations; ++t) bp_iteration(code, m, kernel);
  BpResult res;
  res.u_hat = hard_decision(m);
  res.l1.assign(m.L.begin(), m.L.begin() + m.N);
  return res;
}

}  // namespace polar
