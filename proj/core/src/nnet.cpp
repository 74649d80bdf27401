#include "polarhyper/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "polarhyper/fastmath.hpp"

namespace polar {

namespace {

// dst[o*B+b] = sum_k w[o*in+k] * src[k*B+b], k ascending so the fma chain
// is identical for every batch size.
void gemm_fwd(const double* w, int out, int in, int B, const double* src,
              double* dst) {
  for (int o = 0; o < out; ++o) {
    double* d = dst + (size_t)o * B;
    std::fill(d, d + B, 0.0);
    const double* wr = w + (size_t)o * in;
    for (int k = 0; k < in; ++k) {
      const double wv = wr[k];
      const double* s = src + (size_t)k * B;
      for (int b = 0; b < B; ++b) d[b] = std::fma(wv, s[b], d[b]);
    }
  }
}

int max_width(const MlpSpec& s) {
  return *std::max_element(s.widths.begin(), s.widths.end());
}

}  // namespace

void mlp_forward(const MlpSpec& spec, const double* w, int B, const double* x,
                 const double* gates, MlpTape& tape) {
  const int D = spec.depth();
  tape.B = B;
  tape.x.assign(x, x + (size_t)spec.in_dim() * B);
  size_t hidden = spec.act_count() - spec.in_dim();
  tape.t.resize(hidden * B);
  tape.act.resize(hidden * B);

  const double* src = tape.x.data();
  const double* wp = w;
  const double* gp = gates;
  size_t off = 0;
  for (int l = 0; l < D; ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    double* t = tape.t.data() + off;
    double* a = tape.act.data() + off;
    gemm_fwd(wp, out, in, B, src, t);
    if (l + 1 < D)
      for (int i = 0; i < out * B; ++i) t[i] = fm_tanh(t[i]);
    if (gates) {
      for (int o = 0; o < out; ++o) {
        const double* g = gp + (size_t)o * B;
        for (int b = 0; b < B; ++b) a[(size_t)o * B + b] = t[(size_t)o * B + b] * g[b];
      }
      gp += (size_t)out * B;
    } else {
      std::memcpy(a, t, (size_t)out * B * sizeof(double));
    }
    src = a;
    wp += (size_t)out * in;
    off += (size_t)out * B;
  }
}

const double* mlp_output(const MlpSpec& spec, const MlpTape& tape) {
  size_t off = spec.act_count() - spec.in_dim() - spec.out_dim();
  return tape.act.data() + off * tape.B;
}

void mlp_backward(const MlpSpec& spec, const double* w, MlpTape& tape,
                  const double* dout, const double* gates, double* dw,
                  double* dgates, double* dx) {
  const int D = spec.depth();
  const int B = tape.B;
  const size_t mw = (size_t)max_width(spec) * B;
  tape.scratch.resize(2 * mw);
  double* cur = tape.scratch.data();
  double* nxt = tape.scratch.data() + mw;
  std::memcpy(cur, dout, (size_t)spec.out_dim() * B * sizeof(double));

  // level offsets into t/act and into the flat weight/gate arrays
  std::vector<size_t> aoff(D + 1, 0), woff(D, 0), goff(D, 0);
  for (int l = 1; l <= D; ++l) aoff[l] = aoff[l - 1] + (size_t)spec.widths[l] * B;
  for (int l = 1; l < D; ++l)
    woff[l] = woff[l - 1] + (size_t)spec.widths[l] * spec.widths[l - 1];
  for (int l = 1; l < D; ++l) goff[l] = goff[l - 1] + (size_t)spec.widths[l];

  for (int l = D; l >= 1; --l) {
    const int out = spec.widths[l], in = spec.widths[l - 1];
    const double* t = tape.t.data() + aoff[l - 1];
    const double* below =
        l >= 2 ? tape.act.data() + aoff[l - 2] : tape.x.data();
    if (gates) {
      const double* g = gates + goff[l - 1] * B;
      if (dgates) {
        double* dg = dgates + goff[l - 1] * B;
        for (int i = 0; i < out * B; ++i) dg[i] += cur[i] * t[i];
      }
      for (int o = 0; o < out; ++o)
        for (int b = 0; b < B; ++b)
          cur[(size_t)o * B + b] *= g[(size_t)o * B + b];
    }
    if (l < D)
      for (int i = 0; i < out * B; ++i) cur[i] *= 1.0 - t[i] * t[i];
    double* dwl = dw + woff[l - 1];
    for (int o = 0; o < out; ++o) {
      const double* c = cur + (size_t)o * B;
      for (int k = 0; k < in; ++k) {
        const double* a = below + (size_t)k * B;
        double acc = 0.0;
        for (int b = 0; b < B; ++b) acc = std::fma(c[b], a[b], acc);
        dwl[(size_t)o * in + k] += acc;
      }
    }
    if (l == 1 && !dx) break;
    double* dst = l == 1 ? dx : nxt;
    const double* wl = w + woff[l - 1];
    for (int k = 0; k < in; ++k) {
      double* d = dst + (size_t)k * B;
      std::fill(d, d + B, 0.0);
      for (int o = 0; o < out; ++o) {
        const double wv = wl[(size_t)o * in + k];
        const double* c = cur + (size_t)o * B;
        for (int b = 0; b < B; ++b) d[b] = std::fma(wv, c[b], d[b]);
      }
    }
    std::swap(cur, nxt);
  }
}

std::vector<double> forward1(const MlpSpec& spec, const std::vector<double>& w,
                             const std::vector<double>* gates,
                             const std::vector<double>& x, MlpTape& tape) {
  if ((int)x.size() != spec.in_dim())
    throw std::invalid_argument("mlp: input dimension mismatch");
  if (w.size() != spec.param_count())
    throw std::invalid_argument("mlp: weight count mismatch");
  if (gates && (int)gates->size() != spec.gate_count())
    throw std::invalid_argument("mlp: gate count mismatch");
  mlp_forward(spec, w.data(), 1, x.data(), gates ? gates->data() : nullptr,
              tape);
  const double* o = mlp_output(spec, tape);
  return std::vector<double>(o, o + spec.out_dim());
}

MlpGrads backward1(const MlpSpec& spec, const std::vector<double>& w,
                   const std::vector<double>* gates, MlpTape& tape,
                   const std::vector<double>& dout) {
  MlpGrads g;
  g.w.assign(spec.param_count(), 0.0);
  g.x.assign(spec.in_dim(), 0.0);
  if (gates) g.gates.assign(spec.gate_count(), 0.0);
  mlp_backward(spec, w.data(), tape, dout.data(),
               gates ? gates->data() : nullptr, g.w.data(),
               gates ? g.gates.data() : nullptr, g.x.data());
  return g;
}

double grad_check(const MlpSpec& spec, std::vector<double> params,
                  std::vector<double> input, double eps) {
  MlpTape tape;
  std::vector<double> ones((size_t)spec.out_dim(), 1.0);
  forward1(spec, params, nullptr, input, tape);
  MlpGrads g = backward1(spec, params, nullptr, tape, ones);

  auto scalar = [&](const std::vector<double>& w, const std::vector<double>& x) {
    MlpTape t2;
    std::vector<double> o = forward1(spec, w, nullptr, x, t2);
    double s = 0.0;
    for (double v : o) s += v;
    return s;
  };
  double worst = 0.0;
  auto probe = [&](std::vector<double>& vec, size_t i, double analytic,
                   bool is_w) {
    double keep = vec[i];
    vec[i] = keep + eps;
    double up = is_w ? scalar(params, input) : scalar(params, input);
    vec[i] = keep - eps;
    double dn = is_w ? scalar(params, input) : scalar(params, input);
    vec[i] = keep;
    double fd = (up - dn) / (2.0 * eps);
    double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-12});
    double rel = std::fabs(analytic - fd) / denom;
    if (std::fabs(analytic) < 1e-9 && std::fabs(fd) < 1e-9) rel = 0.0;
    worst = std::max(worst, rel);
  };
  for (size_t i = 0; i < params.size(); ++i) probe(params, i, g.w[i], true);
  for (size_t i = 0; i < input.size(); ++i) probe(input, i, g.x[i], false);
  return worst;
}

}  // namespace polar
