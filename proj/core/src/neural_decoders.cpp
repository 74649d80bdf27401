#include "polarhyper/neural_decoders.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "polarhyper/fastmath.hpp"
#include "polarhyper/rng.hpp"

namespace polar {

namespace {

constexpr double kEps = 1e-12;

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

SoftResult finish(const MessageGrid& m) {
  SoftResult r;
  r.l1.assign(m.L.begin(), m.L.begin() + m.N);
  r.o.resize(m.N);
  for (int j = 0; j < m.N; ++j) r.o[j] = fm_logistic(-r.l1[j]);
  return r;
}

void snapshot(const MessageGrid& m, NeuralTrace& tr, int t) {
  size_t span = (size_t)(m.n + 1) * m.N;
  std::memcpy(tr.Lh.data() + (size_t)t * span, m.L.data(), span * sizeof(double));
  std::memcpy(tr.Rh.data() + (size_t)t * span, m.R.data(), span * sizeof(double));
}

void trace_resize(NeuralTrace& tr, int T, int n, int N) {
  tr.T = T;
  tr.n = n;
  tr.N = N;
  tr.Lh.resize((size_t)(T + 1) * (n + 1) * N);
  tr.Rh.resize((size_t)(T + 1) * (n + 1) * N);
}

}  // namespace

WbpWeights make_wbp_weights(const PolarCode& code, int T) {
  WbpWeights w;
  w.T = T;
  w.n = code.n;
  w.N = code.N;
  w.alpha.assign((size_t)T * code.n * code.N, 1.0);
  w.beta.assign((size_t)T * code.n * code.N, 1.0);
  return w;
}

MlpSpec hyper_f_spec() { return MlpSpec{{2, 16, 16, 16, kHyperFOut}}; }
MlpSpec hyper_h_spec() { return MlpSpec{{2, 16, 1}}; }

HyperWeights make_hyper_weights(const PolarCode& code, int T,
                                std::uint64_t seed) {
  HyperWeights w;
  w.wbp = make_wbp_weights(code, T);
  GaussianStream rng(derive_seed(seed, {kStreamInit}));
  w.f.resize(hyper_f_spec().param_count());
  for (double& v : w.f) v = rng.uniform(-0.1, 0.1);
  w.c = rng.uniform(0.0, 1.0);
  return w;
}

double bce_loss(const std::vector<double>& o,
                const std::vector<std::uint8_t>& u) {
  double s = 0.0;
  for (size_t j = 0; j < o.size(); ++j) {
    double p = std::fmin(std::fmax(o[j], kEps), 1.0 - kEps);
    s += u[j] ? std::log(p) : std::log(1.0 - p);
  }
  return -s / (double)o.size();
}

std::vector<double> bce_loss_grad(const std::vector<double>& o,
                                  const std::vector<std::uint8_t>& u) {
  const double inv = 1.0 / (double)o.size();
  std::vector<double> d(o.size(), 0.0);
  for (size_t j = 0; j < o.size(); ++j) {
    if (o[j] <= kEps || o[j] >= 1.0 - kEps) continue;  // clamp active
    d[j] = u[j] ? -inv / o[j] : inv / (1.0 - o[j]);
  }
  return d;
}

void hyper_f(const HyperWeights& w, double a, double b,
             std::vector<double>& theta, std::vector<double>& gates) {
  MlpTape tape;
  double in[2] = {a, b};
  MlpSpec fs = hyper_f_spec();
  mlp_forward(fs, w.f.data(), 1, in, nullptr, tape);
  const double* out = mlp_output(fs, tape);
  theta.assign(out, out + kHyperHParams);
  gates.resize(kHyperGates);
  for (int u = 0; u < kHyperGates; ++u)
    gates[u] = fm_logistic(out[kHyperHParams + u]);
}

double hyper_h(const std::vector<double>& theta,
               const std::vector<double>& gates, double x, double y) {
  MlpTape tape;
  std::vector<double> in = {std::fabs(x), std::fabs(y)};
  std::vector<double> out = forward1(hyper_h_spec(), theta, &gates, in, tape);
  return clamp_llr(sgn(x) * sgn(y) * out[0]);
}

// ---------------------------------------------------------------------------
// weighted BP

namespace {

void wbp_iteration(const PolarCode& code, MessageGrid& m, const WbpWeights& w,
                   int t, Kernel k) {
  const int n = code.n, N = code.N;
  for (int s = 0; s < n; ++s) {
    const int half = N >> (s + 1), block = N >> s;
    for (int base = 0; base < N; base += block) {
      for (int o = 0; o < half; ++o) {
        const int j = base + o, jp = j + half;
        const double rj = m.r(s, j), rjp = m.r(s, jp);
        const double lj = m.l(s + 1, j), ljp = m.l(s + 1, jp);
        m.r(s + 1, j) =
            clamp_llr(w.beta[w.idx(t, s, j)] * g_apply(k, rj, ljp + rjp));
        m.r(s + 1, jp) =
            clamp_llr(w.beta[w.idx(t, s, jp)] * g_apply(k, rj, lj) + rjp);
      }
    }
  }
  for (int s = n - 1; s >= 0; --s) {
    const int half = N >> (s + 1), block = N >> s;
    for (int base = 0; base < N; base += block) {
      for (int o = 0; o < half; ++o) {
        const int j = base + o, jp = j + half;
        const double rj = m.r(s, j), rjp = m.r(s, jp);
        const double lj = m.l(s + 1, j), ljp = m.l(s + 1, jp);
        m.l(s, j) =
            clamp_llr(w.alpha[w.idx(t, s, j)] * g_apply(k, lj, ljp + rjp));
        m.l(s, jp) =
            clamp_llr(w.alpha[w.idx(t, s, jp)] * g_apply(k, rj, lj) + ljp);
      }
    }
  }
}

SoftResult wbp_run(const PolarCode& code, const std::vector<double>& llr,
                   const WbpWeights& w, Kernel k, NeuralTrace* trace) {
  if (w.n != code.n || w.N != code.N)
    throw std::invalid_argument("wbp: weight shape does not match code");
  MessageGrid m = init_messages(code, llr);
  if (trace) {
    trace_resize(*trace, w.T, code.n, code.N);
    snapshot(m, *trace, 0);
  }
  for (int t = 0; t < w.T; ++t) {
    wbp_iteration(code, m, w, t, k);
    if (trace) snapshot(m, *trace, t + 1);
  }
  return finish(m);
}

}  // namespace

SoftResult wbp_decode(const PolarCode& code, const std::vector<double>& llr,
                      const WbpWeights& w, Kernel kernel) {
  return wbp_run(code, llr, w, kernel, nullptr);
}

SoftResult wbp_record(const PolarCode& code, const std::vector<double>& llr,
                      const WbpWeights& w, Kernel kernel, NeuralTrace& trace) {
  return wbp_run(code, llr, w, kernel, &trace);
}

// ---------------------------------------------------------------------------
// hypernetwork decoder

namespace {

// h on a batch: theta rows live inside f's output block (feature-major,
// W1[u][c] at row 2u+c, W2[u] at row 32+u). Fills hT (tanh units) and hlin
// (pre-output-gate sum); reduction order matches nnet's per-sample gemm.
void h_forward_batch(const double* th, int B, const double* X,
                     const double* gates, double* hT, double* hlin) {
  std::fill(hlin, hlin + B, 0.0);
  for (int u = 0; u < 16; ++u) {
    const double* w0 = th + (size_t)(2 * u) * B;
    const double* w1 = th + (size_t)(2 * u + 1) * B;
    const double* w2 = th + (size_t)(32 + u) * B;
    const double* g = gates + (size_t)u * B;
    double* tu = hT + (size_t)u * B;
    for (int i = 0; i < B; ++i) {
      double pre = std::fma(w0[i], X[i], 0.0);
      pre = std::fma(w1[i], X[B + i], pre);
      double t = fm_tanh(pre);
      tu[i] = t;
      hlin[i] = std::fma(w2[i], t * g[i], hlin[i]);
    }
  }
}

void ensure_scratch(HyperScratch& sc, const PolarCode& code) {
  const int N = code.N, B = N;
  sc.X.resize((size_t)2 * B);
  sc.x1.resize(B);
  sc.x2.resize(B);
  sc.gv.resize(B);
  sc.wv.resize(B);
  sc.hv.resize(B);
  sc.tr.resize(B);
  sc.gates.resize((size_t)kHyperGates * B);
  sc.hT.resize((size_t)16 * B);
  sc.hlin.resize(B);
  sc.dh.resize(B);
  sc.dx1p.resize(B);
  sc.dx2p.resize(B);
  sc.dout_f.resize((size_t)kHyperFOut * B);
  sc.dXf.resize((size_t)2 * B);
  sc.daX.resize((size_t)2 * B);
  size_t grid = (size_t)(code.n + 1) * N;
  sc.dLc.resize(grid);
  sc.dLp.resize(grid);
  sc.dR.resize(grid);
}

// Gather the two update equations of one stage/pass into sample slots
// p (first equation, no trailing term) and N/2+p (second equation).
// lrow = L row s+1 source, rrow = R row s source.
void gather_stage(const PolarCode& code, int s, bool left_pass,
                  const double* lrow, const double* rrow,
                  const WbpWeights& w, int t, HyperScratch& sc) {
  const int N = code.N, half = N >> (s + 1), block = N >> s, P = N / 2;
  int p = 0;
  for (int base = 0; base < N; base += block) {
    for (int o = 0; o < half; ++o, ++p) {
      const int j = base + o, jp = j + half;
      const double rj = rrow[j], rjp = rrow[jp];
      const double lj = lrow[j], ljp = lrow[jp];
      if (left_pass) {
        sc.x1[p] = lj;
        sc.wv[p] = w.alpha[w.idx(t, s, j)];
        sc.wv[P + p] = w.alpha[w.idx(t, s, jp)];
        sc.tr[P + p] = ljp;
      } else {
        sc.x1[p] = rj;
        sc.wv[p] = w.beta[w.idx(t, s, j)];
        sc.wv[P + p] = w.beta[w.idx(t, s, jp)];
        sc.tr[P + p] = rjp;
      }
      sc.x2[p] = ljp + rjp;
      sc.x1[P + p] = rj;
      sc.x2[P + p] = lj;
    }
  }
}

// f + gates + h on the gathered batch (forward direction).
void hyper_eval_batch(const HyperWeights& w, Kernel k, bool gating, int B,
                      HyperScratch& sc, const MlpSpec& fs) {
  for (int i = 0; i < B; ++i) {
    sc.X[i] = std::fabs(sc.x1[i]);
    sc.X[B + i] = std::fabs(sc.x2[i]);
    sc.gv[i] = g_apply(k, sc.x1[i], sc.x2[i]);
  }
  mlp_forward(fs, w.f.data(), B, sc.X.data(), nullptr, sc.ftape);
  const double* fo = mlp_output(fs, sc.ftape);
  if (gating) {
    for (int u = 0; u < kHyperGates; ++u) {
      const double* src = fo + (size_t)(kHyperHParams + u) * B;
      double* dst = sc.gates.data() + (size_t)u * B;
      for (int i = 0; i < B; ++i) dst[i] = fm_logistic(src[i]);
    }
  } else {
    std::fill(sc.gates.begin(), sc.gates.begin() + (size_t)kHyperGates * B, 1.0);
  }
  h_forward_batch(fo, B, sc.X.data(), sc.gates.data(), sc.hT.data(),
                  sc.hlin.data());
  for (int i = 0; i < B; ++i) {
    double hout = sc.hlin[i] * sc.gates[(size_t)16 * B + i];
    sc.hv[i] = clamp_llr(sgn(sc.x1[i]) * sgn(sc.x2[i]) * hout);
  }
}

void hyper_stage_pass(const PolarCode& code, MessageGrid& m,
                      const HyperWeights& w, int t, int s, bool left_pass,
                      Kernel k, bool gating, HyperScratch& sc,
                      const MlpSpec& fs) {
  const int N = code.N, half = N >> (s + 1), block = N >> s, P = N / 2, B = N;
  gather_stage(code, s, left_pass, &m.l(s + 1, 0), &m.r(s, 0), w.wbp, t, sc);
  hyper_eval_batch(w, k, gating, B, sc, fs);
  const double c = w.c;
  int p = 0;
  for (int base = 0; base < N; base += block) {
    for (int o = 0; o < half; ++o, ++p) {
      const int j = base + o, jp = j + half;
      double v1 = (1.0 - c) * sc.hv[p] + c * (sc.wv[p] * sc.gv[p]);
      double v2 = (1.0 - c) * sc.hv[P + p] + c * (sc.wv[P + p] * sc.gv[P + p]) +
                  sc.tr[P + p];
      if (left_pass) {
        m.l(s, j) = clamp_llr(v1);
        m.l(s, jp) = clamp_llr(v2);
      } else {
        m.r(s + 1, j) = clamp_llr(v1);
        m.r(s + 1, jp) = clamp_llr(v2);
      }
    }
  }
}

SoftResult hyper_run(const PolarCode& code, const std::vector<double>& llr,
                     const HyperWeights& w, Kernel k, bool gating,
                     NeuralTrace* trace, HyperScratch& sc) {
  if (w.wbp.n != code.n || w.wbp.N != code.N)
    throw std::invalid_argument("hyper: weight shape does not match code");
  if (w.f.size() != hyper_f_spec().param_count())
    throw std::invalid_argument("hyper: f weight count mismatch");
  ensure_scratch(sc, code);
  const MlpSpec fs = hyper_f_spec();
  MessageGrid& m = sc.m;
  m = init_messages(code, llr);
  if (trace) {
    trace_resize(*trace, w.wbp.T, code.n, code.N);
    snapshot(m, *trace, 0);
  }
  for (int t = 0; t < w.wbp.T; ++t) {
    for (int s = 0; s < code.n; ++s)
      hyper_stage_pass(code, m, w, t, s, false, k, gating, sc, fs);
    for (int s = code.n - 1; s >= 0; --s)
      hyper_stage_pass(code, m, w, t, s, true, k, gating, sc, fs);
    if (trace) snapshot(m, *trace, t + 1);
  }
  return finish(m);
}

}  // namespace

SoftResult hyper_decode(const PolarCode& code, const std::vector<double>& llr,
                        const HyperWeights& w, Kernel kernel, bool gating) {
  thread_local HyperScratch sc;
  return hyper_run(code, llr, w, kernel, gating, nullptr, sc);
}

SoftResult hyper_record(const PolarCode& code, const std::vector<double>& llr,
                        const HyperWeights& w, Kernel kernel, bool gating,
                        NeuralTrace& trace, HyperScratch& scratch) {
  return hyper_run(code, llr, w, kernel, gating, &trace, scratch);
}

// ---------------------------------------------------------------------------
// reverse mode

namespace {

// d(loss)/d(final stage-1 L row) from d(loss)/d(o), o = logistic(-L).
void seed_loss_row(const NeuralTrace& tr, const std::vector<double>& dLdo,
                   double* dL0) {
  const double* Lf = tr.L(tr.T, 0);
  for (int j = 0; j < tr.N; ++j) {
    double o = fm_logistic(-Lf[j]);
    dL0[j] = dLdo[j] * (-o * (1.0 - o));
  }
}

inline double clamp_gate(double written) {
  return std::fabs(written) < kLlrSat ? 1.0 : 0.0;
}

// Unwind one stage of one pass of the weighted-BP decoder (no h path).
void wbp_backward_stage(const PolarCode& code, const WbpWeights& w, Kernel k,
                        const NeuralTrace& tr, int t, int s, bool left_pass,
                        std::vector<double>& dLc, std::vector<double>& dLp,
                        std::vector<double>& dR, WbpGrads& g) {
  const int N = code.N, half = N >> (s + 1), block = N >> s;
  const double* lrow = left_pass ? tr.L(t + 1, s + 1) : tr.L(t, s + 1);
  const double* rrow = tr.R(t + 1, s);
  const double* wrow = left_pass ? tr.L(t + 1, s) : tr.R(t + 1, s + 1);
  std::vector<double>& wgrad = left_pass ? g.alpha : g.beta;
  double* consume = left_pass ? dLc.data() + (size_t)s * N
                              : dR.data() + (size_t)(s + 1) * N;
  double* dLx = left_pass ? dLc.data() : dLp.data();  // adjoint of lrow values
  for (int base = 0; base < N; base += block) {
    for (int o = 0; o < half; ++o) {
      const int j = base + o, jp = j + half;
      const double rj = rrow[j], rjp = rrow[jp];
      const double lj = lrow[j], ljp = lrow[jp];
      // first equation: w * g(x1, ljp + rjp), x1 = lj (left) or rj (right)
      {
        double up = consume[j] * clamp_gate(wrow[j]);
        consume[j] = 0.0;
        if (up != 0.0) {
          const double x1 = left_pass ? lj : rj;
          const double x2 = ljp + rjp;
          const double weight = left_pass ? w.alpha[w.idx(t, s, j)]
                                          : w.beta[w.idx(t, s, j)];
          wgrad[w.idx(t, s, j)] += up * g_apply(k, x1, x2);
          GGrad gg = g_grad(k, x1, x2);
          double dx1 = up * weight * gg.dx, dx2 = up * weight * gg.dy;
          if (left_pass)
            dLc[(size_t)(s + 1) * N + j] += dx1;
          else
            dR[(size_t)s * N + j] += dx1;
          dLx[(size_t)(s + 1) * N + jp] += dx2;
          dR[(size_t)s * N + jp] += dx2;
        }
      }
      // second equation: w * g(rj, lj) + trail
      {
        double up = consume[jp] * clamp_gate(wrow[jp]);
        consume[jp] = 0.0;
        if (up != 0.0) {
          const double weight = left_pass ? w.alpha[w.idx(t, s, jp)]
                                          : w.beta[w.idx(t, s, jp)];
          wgrad[w.idx(t, s, jp)] += up * g_apply(k, rj, lj);
          GGrad gg = g_grad(k, rj, lj);
          double dx1 = up * weight * gg.dx, dx2 = up * weight * gg.dy;
          dR[(size_t)s * N + j] += dx1;
          dLx[(size_t)(s + 1) * N + j] += dx2;
          if (left_pass)
            dLc[(size_t)(s + 1) * N + jp] += up;  // trail = fresh ljp
          else
            dR[(size_t)s * N + jp] += up;  // trail = rjp
        }
      }
    }
  }
}

}  // namespace

void wbp_backward(const PolarCode& code, const WbpWeights& w, Kernel kernel,
                  const NeuralTrace& trace, const std::vector<double>& dLdo,
                  WbpGrads& grads) {
  const int n = code.n, N = code.N;
  if (grads.alpha.size() != w.alpha.size())
    grads.alpha.assign(w.alpha.size(), 0.0);
  if (grads.beta.size() != w.beta.size())
    grads.beta.assign(w.beta.size(), 0.0);
  std::vector<double> dLc((size_t)(n + 1) * N, 0.0),
      dLp((size_t)(n + 1) * N, 0.0), dR((size_t)(n + 1) * N, 0.0);
  seed_loss_row(trace, dLdo, dLc.data());
  for (int t = w.T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s)
      wbp_backward_stage(code, w, kernel, trace, t, s, true, dLc, dLp, dR,
                         grads);
    for (int s = n - 1; s >= 0; --s)
      wbp_backward_stage(code, w, kernel, trace, t, s, false, dLc, dLp, dR,
                         grads);
    std::swap(dLc, dLp);
    std::fill(dLp.begin(), dLp.end(), 0.0);
  }
}

namespace {

void hyper_backward_stage(const PolarCode& code, const HyperWeights& w,
                          Kernel k, bool gating, const NeuralTrace& tr, int t,
                          int s, bool left_pass, HyperGrads& g,
                          HyperScratch& sc, const MlpSpec& fs) {
  const int N = code.N, half = N >> (s + 1), block = N >> s, P = N / 2, B = N;
  const double* lrow = left_pass ? tr.L(t + 1, s + 1) : tr.L(t, s + 1);
  const double* rrow = tr.R(t + 1, s);
  const double* wrow = left_pass ? tr.L(t + 1, s) : tr.R(t + 1, s + 1);
  std::vector<double>& wgrad = left_pass ? g.alpha : g.beta;

  gather_stage(code, s, left_pass, lrow, rrow, w.wbp, t, sc);
  hyper_eval_batch(w, k, gating, B, sc, fs);
  const double* fo = mlp_output(fs, sc.ftape);
  const double c = w.c;

  double* consume = left_pass ? sc.dLc.data() + (size_t)s * N
                              : sc.dR.data() + (size_t)(s + 1) * N;
  double* dLx = left_pass ? sc.dLc.data() : sc.dLp.data();

  // per-sample upstream through the combine; fills dh and the direct g-path
  // input adjoints, accumulates dc / dalpha / dbeta and the trail pushes.
  int p = 0;
  for (int base = 0; base < N; base += block) {
    for (int o = 0; o < half; ++o, ++p) {
      const int j = base + o, jp = j + half;
      double up1 = consume[j] * clamp_gate(wrow[j]);
      double up2 = consume[jp] * clamp_gate(wrow[jp]);
      consume[j] = 0.0;
      consume[jp] = 0.0;
      const int i1 = p, i2 = P + p;
      g.c += up1 * (sc.wv[i1] * sc.gv[i1] - sc.hv[i1]) +
             up2 * (sc.wv[i2] * sc.gv[i2] - sc.hv[i2]);
      wgrad[w.wbp.idx(t, s, j)] += up1 * c * sc.gv[i1];
      wgrad[w.wbp.idx(t, s, jp)] += up2 * c * sc.gv[i2];
      sc.dh[i1] = up1 * (1.0 - c);
      sc.dh[i2] = up2 * (1.0 - c);
      GGrad g1 = g_grad(k, sc.x1[i1], sc.x2[i1]);
      GGrad g2 = g_grad(k, sc.x1[i2], sc.x2[i2]);
      sc.dx1p[i1] = up1 * c * sc.wv[i1] * g1.dx;
      sc.dx2p[i1] = up1 * c * sc.wv[i1] * g1.dy;
      sc.dx1p[i2] = up2 * c * sc.wv[i2] * g2.dx;
      sc.dx2p[i2] = up2 * c * sc.wv[i2] * g2.dy;
      if (left_pass)
        sc.dLc[(size_t)(s + 1) * N + jp] += up2;  // trail = fresh ljp
      else
        sc.dR[(size_t)s * N + jp] += up2;  // trail = rjp
    }
  }

  // h backward: dh -> dtheta rows (0..47 of dout_f), dsigma, d|x| pair
  double* dtheta = sc.dout_f.data();
  double* dsig = sc.dout_f.data() + (size_t)kHyperHParams * B;  // reused below
  std::fill(sc.daX.begin(), sc.daX.end(), 0.0);
  // temporary per-sample d(hlin) lives in sc.hlin's shadow: recompute inline
  {
    const double* g16 = sc.gates.data() + (size_t)16 * B;
    for (int i = 0; i < B; ++i) {
      double sg = sgn(sc.x1[i]) * sgn(sc.x2[i]);
      double up = (std::fabs(sc.hv[i]) < kLlrSat ? sc.dh[i] : 0.0) * sg;
      dsig[(size_t)16 * B + i] = up * sc.hlin[i];
      sc.dh[i] = up * g16[i];  // now d(hlin)
    }
    for (int u = 0; u < 16; ++u) {
      const double* w0 = fo + (size_t)(2 * u) * B;
      const double* w1 = fo + (size_t)(2 * u + 1) * B;
      const double* w2 = fo + (size_t)(32 + u) * B;
      const double* gu = sc.gates.data() + (size_t)u * B;
      const double* tu = sc.hT.data() + (size_t)u * B;
      for (int i = 0; i < B; ++i) {
        double dlin = sc.dh[i];
        dtheta[(size_t)(32 + u) * B + i] = dlin * tu[i] * gu[i];
        double dhid = dlin * w2[i];
        dsig[(size_t)u * B + i] = dhid * tu[i];
        double dpre = dhid * gu[i] * (1.0 - tu[i] * tu[i]);
        dtheta[(size_t)(2 * u) * B + i] = dpre * sc.X[i];
        dtheta[(size_t)(2 * u + 1) * B + i] = dpre * sc.X[B + i];
        sc.daX[i] = std::fma(dpre, w0[i], sc.daX[i]);
        sc.daX[B + i] = std::fma(dpre, w1[i], sc.daX[B + i]);
      }
    }
  }
  // gate logits: chain through the logistic, or drop when gating is off
  if (gating) {
    for (int u = 0; u < kHyperGates; ++u) {
      const double* gu = sc.gates.data() + (size_t)u * B;
      double* row = dsig + (size_t)u * B;
      for (int i = 0; i < B; ++i) row[i] *= gu[i] * (1.0 - gu[i]);
    }
  } else {
    std::fill(dsig, dsig + (size_t)kHyperGates * B, 0.0);
  }

  mlp_backward(fs, w.f.data(), sc.ftape, sc.dout_f.data(), nullptr,
               g.f.data(), nullptr, sc.dXf.data());

  // collect input adjoints and push them into the source slots
  p = 0;
  for (int base = 0; base < N; base += block) {
    for (int o = 0; o < half; ++o, ++p) {
      const int j = base + o, jp = j + half;
      const int i1 = p, i2 = P + p;
      double dx1a = sc.dx1p[i1] +
                    sgn(sc.x1[i1]) * (sc.daX[i1] + sc.dXf[i1]);
      double dx2a = sc.dx2p[i1] +
                    sgn(sc.x2[i1]) * (sc.daX[B + i1] + sc.dXf[B + i1]);
      double dx1b = sc.dx1p[i2] +
                    sgn(sc.x1[i2]) * (sc.daX[i2] + sc.dXf[i2]);
      double dx2b = sc.dx2p[i2] +
                    sgn(sc.x2[i2]) * (sc.daX[B + i2] + sc.dXf[B + i2]);
      // g-output write: x1 = lj (left) / rj (right); x2 = ljp + rjp
      if (left_pass)
        sc.dLc[(size_t)(s + 1) * N + j] += dx1a;
      else
        sc.dR[(size_t)s * N + j] += dx1a;
      dLx[(size_t)(s + 1) * N + jp] += dx2a;
      sc.dR[(size_t)s * N + jp] += dx2a;
      // sum write's g-term: x1 = rj; x2 = lj
      sc.dR[(size_t)s * N + j] += dx1b;
      dLx[(size_t)(s + 1) * N + j] += dx2b;
    }
  }
}

}  // namespace

void hyper_backward(const PolarCode& code, const HyperWeights& w,
                    Kernel kernel, bool gating, const NeuralTrace& trace,
                    const std::vector<double>& dLdo, HyperGrads& grads,
                    HyperScratch& scratch) {
  const int n = code.n, N = code.N;
  if (grads.alpha.size() != w.wbp.alpha.size())
    grads.alpha.assign(w.wbp.alpha.size(), 0.0);
  if (grads.beta.size() != w.wbp.beta.size())
    grads.beta.assign(w.wbp.beta.size(), 0.0);
  if (grads.f.size() != w.f.size()) grads.f.assign(w.f.size(), 0.0);
  ensure_scratch(scratch, code);
  const MlpSpec fs = hyper_f_spec();
  std::fill(scratch.dLc.begin(), scratch.dLc.end(), 0.0);
  std::fill(scratch.dLp.begin(), scratch.dLp.end(), 0.0);
  std::fill(scratch.dR.begin(), scratch.dR.end(), 0.0);
  seed_loss_row(trace, dLdo, scratch.dLc.data());
  for (int t = w.wbp.T - 1; t >= 0; --t) {
    for (int s = 0; s < n; ++s)
      hyper_backward_stage(code, w, kernel, gating, trace, t, s, true, grads,
                           scratch, fs);
    for (int s = n - 1; s >= 0; --s)
      hyper_backward_stage(code, w, kernel, gating, trace, t, s, false, grads,
                           scratch, fs);
    std::swap(scratch.dLc, scratch.dLp);
    std::fill(scratch.dLp.begin(), scratch.dLp.end(), 0.0);
  }
}

}  // namespace polar
