#include <cmath>
#include <vector>

#include "doctest.h"
#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/fastmath.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/polar_code.hpp"
#include "test_util.hpp"

using namespace polar;

namespace {

double rel_err(double a, double b) {
  double m = std::fmax(std::fabs(a), std::fabs(b));
  if (m < 1e-9) return 0.0;
  return std::fabs(a - b) / m;
}

// index of the k largest-|v| entries, ties toward lower index
std::vector<size_t> top_coords(const std::vector<double>& v, size_t k) {
  std::vector<size_t> idx(v.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return std::fabs(v[a]) > std::fabs(v[b]);
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace

TEST_CASE("weight factories") {
  PolarCode c = construct_bhattacharyya(3, 4);
  WbpWeights w = make_wbp_weights(c, 3);
  CHECK(w.T == 3);
  CHECK(w.alpha.size() == (size_t)3 * 3 * 8);
  CHECK(w.beta.size() == w.alpha.size());
  for (double v : w.alpha) CHECK(v == 1.0);
  for (double v : w.beta) CHECK(v == 1.0);
  CHECK(w.idx(1, 2, 5) == (size_t)(1 * 3 + 2) * 8 + 5);

  HyperWeights h1 = make_hyper_weights(c, 3, 42);
  HyperWeights h2 = make_hyper_weights(c, 3, 42);
  HyperWeights h3 = make_hyper_weights(c, 3, 43);
  CHECK(h1.f.size() == hyper_f_spec().param_count());
  CHECK(h1.f == h2.f);
  CHECK(h1.c == h2.c);
  CHECK(h1.f != h3.f);
  CHECK(h1.c >= 0.0);
  CHECK(h1.c <= 1.0);
  for (double v : h1.f) {
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
  for (double v : h1.wbp.alpha) CHECK(v == 1.0);
}

TEST_CASE("hypernetwork output widths") {
  CHECK(hyper_f_spec().out_dim() == 65);
  CHECK(hyper_f_spec().in_dim() == 2);
  CHECK(hyper_h_spec().param_count() == (size_t)kHyperHParams);
  CHECK(hyper_h_spec().gate_count() == kHyperGates);
  CHECK(kHyperFOut == 65);
}

TEST_CASE("cross entropy oracle and clamp behaviour") {
  double l = bce_loss({0.9, 0.2}, {1, 0});
  CHECK(l == doctest::Approx(-(std::log(0.9) + std::log(0.8)) / 2.0)
                 .epsilon(1e-14));
  CHECK(l == doctest::Approx(0.164252033486018).epsilon(1e-12));
  std::vector<double> d = bce_loss_grad({0.9, 0.2}, {1, 0});
  CHECK(d[0] == doctest::Approx(-0.5 / 0.9).epsilon(1e-14));
  CHECK(d[1] == doctest::Approx(0.5 / 0.8).epsilon(1e-14));
  // clamped probabilities contribute a constant: zero gradient
  std::vector<double> dc = bce_loss_grad({1e-13, 1.0 - 1e-13}, {1, 0});
  CHECK(dc[0] == 0.0);
  CHECK(dc[1] == 0.0);
  CHECK(bce_loss({1e-13}, {1}) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  // perfect confidence on the wrong side is the worst case, still finite
  CHECK(std::isfinite(bce_loss({1.0 - 1e-13}, {0})));
}

TEST_CASE("unit weights reproduce plain bp bit for bit") {
  PolarCode c = construct_bhattacharyya(5, 16);
  WbpWeights w = make_wbp_weights(c, 5);
  for (Kernel k : {Kernel::Exact, Kernel::MinSum}) {
    for (unsigned t = 0; t < 25; ++t) {
      std::vector<double> llr = testutil::random_llrs(c.N, 2000 + t, 6.0);
      BpResult bp = bp_decode(c, llr, 5, k);
      SoftResult wb = wbp_decode(c, llr, w, k);
      REQUIRE(wb.l1.size() == bp.l1.size());
      for (size_t j = 0; j < bp.l1.size(); ++j) {
        CHECK(wb.l1[j] == bp.l1[j]);
        CHECK(std::signbit(wb.l1[j]) == std::signbit(bp.l1[j]));
      }
    }
  }
}

TEST_CASE("zero weights kill the g terms but keep the trails") {
  PolarCode c = full_rate_code(1);
  WbpWeights w = make_wbp_weights(c, 1);
  std::fill(w.alpha.begin(), w.alpha.end(), 0.0);
  std::fill(w.beta.begin(), w.beta.end(), 0.0);
  const double a = 1.7, b = -0.9;
  SoftResult r = wbp_decode(c, {a, b}, w, Kernel::Exact);
  CHECK(r.l1[0] == 0.0);
  CHECK(r.l1[1] == b);  // trail survives: 0*g(0, a) + b
}

TEST_CASE("shape validation") {
  PolarCode c = construct_bhattacharyya(3, 4);
  PolarCode other = construct_bhattacharyya(4, 8);
  WbpWeights w = make_wbp_weights(c, 2);
  std::vector<double> llr(other.N, 1.0);
  CHECK_THROWS_AS(wbp_decode(other, llr, w, Kernel::Exact),
                  std::invalid_argument);
  HyperWeights h = make_hyper_weights(c, 2, 1);
  h.f.resize(10);
  CHECK_THROWS_AS(hyper_decode(c, std::vector<double>(c.N, 1.0), h,
                               Kernel::Exact),
                  std::invalid_argument);
}

TEST_CASE("full damping with unit weights collapses to plain bp") {
  PolarCode c = construct_bhattacharyya(5, 16);
  HyperWeights h = make_hyper_weights(c, 5, 7);
  h.c = 1.0;  // alpha/beta already 1; f stays random and must not matter
  for (Kernel k : {Kernel::Exact, Kernel::MinSum}) {
    for (unsigned t = 0; t < 25; ++t) {
      std::vector<double> llr = testutil::random_llrs(c.N, 3000 + t, 6.0);
      BpResult bp = bp_decode(c, llr, 5, k);
      SoftResult hy = hyper_decode(c, llr, h, k);
      SoftResult wb = wbp_decode(c, llr, h.wbp, k);
      for (size_t j = 0; j < bp.l1.size(); ++j) {
        CHECK(hy.l1[j] == bp.l1[j]);
        CHECK(wb.l1[j] == bp.l1[j]);
        CHECK(hy.o[j] == wb.o[j]);
      }
    }
  }
}

TEST_CASE("zero damping with a zero hypernetwork matches zero weights") {
  PolarCode c = full_rate_code(1);
  HyperWeights h = make_hyper_weights(c, 1, 9);
  std::fill(h.f.begin(), h.f.end(), 0.0);
  h.c = 0.0;
  const double a = 1.7, b = -0.9;
  SoftResult r = hyper_decode(c, {a, b}, h, Kernel::Exact);
  CHECK(r.l1[0] == 0.0);
  CHECK(r.l1[1] == b);

  PolarCode c8 = construct_bhattacharyya(3, 4);
  HyperWeights h8 = make_hyper_weights(c8, 2, 9);
  std::fill(h8.f.begin(), h8.f.end(), 0.0);
  h8.c = 0.0;
  WbpWeights z = make_wbp_weights(c8, 2);
  std::fill(z.alpha.begin(), z.alpha.end(), 0.0);
  std::fill(z.beta.begin(), z.beta.end(), 0.0);
  for (unsigned t = 0; t < 10; ++t) {
    std::vector<double> llr = testutil::random_llrs(c8.N, 4000 + t);
    SoftResult hy = hyper_decode(c8, llr, h8, Kernel::MinSum);
    SoftResult wb = wbp_decode(c8, llr, z, Kernel::MinSum);
    for (size_t j = 0; j < hy.l1.size(); ++j) CHECK(hy.l1[j] == wb.l1[j]);
  }
}

TEST_CASE("hypernetwork head shapes and symmetries") {
  PolarCode c = construct_bhattacharyya(3, 4);
  HyperWeights w = make_hyper_weights(c, 2, 5);
  std::vector<double> theta, gates;
  hyper_f(w, 1.3, 0.4, theta, gates);
  REQUIRE(theta.size() == (size_t)kHyperHParams);
  REQUIRE(gates.size() == (size_t)kHyperGates);
  for (double g : gates) {
    CHECK(g > 0.0);
    CHECK(g < 1.0);
  }
  // wiring check against a plain forward pass of f
  {
    MlpTape tape;
    MlpSpec fs = hyper_f_spec();
    std::vector<double> out = forward1(fs, w.f, nullptr, {1.3, 0.4}, tape);
    for (int i = 0; i < kHyperHParams; ++i) CHECK(theta[(size_t)i] == out[(size_t)i]);
    for (int uG = 0; uG < kHyperGates; ++uG)
      CHECK(gates[(size_t)uG] == fm_logistic(out[(size_t)(kHyperHParams + uG)]));
  }
  // h inherits g's sign algebra exactly
  double base = hyper_h(theta, gates, 1.3, 0.4);
  CHECK(hyper_h(theta, gates, -1.3, 0.4) == -base);
  CHECK(hyper_h(theta, gates, 1.3, -0.4) == -base);
  CHECK(hyper_h(theta, gates, -1.3, -0.4) == base);
  CHECK(hyper_h(theta, gates, 0.0, 0.4) == 0.0);
  CHECK(hyper_h(theta, gates, 1.3, 0.0) == 0.0);
  // saturation clamp
  std::vector<double> big(theta.size(), 8.0);
  CHECK(std::fabs(hyper_h(big, gates, 5.0, 5.0)) <= kLlrSat);
  std::vector<double> ones(gates.size(), 1.0);
  CHECK(hyper_h(std::vector<double>(48, 8.0), ones, 5.0, -5.0) == -kLlrSat);
}

TEST_CASE("record agrees with decode and snapshots the whole run") {
  PolarCode c = construct_bhattacharyya(4, 8);
  HyperWeights w = make_hyper_weights(c, 3, 11);
  std::vector<double> llr = testutil::random_llrs(c.N, 60, 5.0);
  NeuralTrace tr;
  HyperScratch sc;
  SoftResult rec = hyper_record(c, llr, w, Kernel::Exact, true, tr, sc);
  SoftResult dec = hyper_decode(c, llr, w, Kernel::Exact, true);
  CHECK(rec.l1 == dec.l1);
  CHECK(rec.o == dec.o);
  REQUIRE(tr.T == 3);
  REQUIRE(tr.n == c.n);
  REQUIRE(tr.N == c.N);
  // state 0 is the initialized grid
  MessageGrid m0 = init_messages(c, llr);
  for (int row = 0; row <= c.n; ++row)
    for (int j = 0; j < c.N; ++j) {
      CHECK(tr.L(0, row)[j] == m0.l(row, j));
      CHECK(tr.R(0, row)[j] == m0.r(row, j));
    }
  // final state carries the returned l1 and o = logistic(-l1)
  for (int j = 0; j < c.N; ++j) {
    CHECK(tr.L(3, 0)[j] == rec.l1[(size_t)j]);
    CHECK(rec.o[(size_t)j] == fm_logistic(-rec.l1[(size_t)j]));
  }
  // wbp record path too
  NeuralTrace tw;
  SoftResult rw = wbp_record(c, llr, w.wbp, Kernel::MinSum, tw);
  SoftResult dw = wbp_decode(c, llr, w.wbp, Kernel::MinSum);
  CHECK(rw.l1 == dw.l1);
  CHECK(tw.T == 3);
}

TEST_CASE("traced states reproduce every update equation") {
  PolarCode c = construct_bhattacharyya(3, 4);
  for (bool gating : {true, false}) {
    HyperWeights w = make_hyper_weights(c, 2, 13);
    // make the weights non-trivial so the test can't pass by accident
    for (size_t i = 0; i < w.wbp.alpha.size(); ++i) {
      w.wbp.alpha[i] = 0.8 + 0.01 * (double)(i % 31);
      w.wbp.beta[i] = 1.2 - 0.01 * (double)(i % 29);
    }
    w.c = 0.37;
    std::vector<double> llr = testutil::random_llrs(c.N, 61, 5.0);
    NeuralTrace tr;
    HyperScratch sc;
    hyper_record(c, llr, w, Kernel::Exact, gating, tr, sc);

    std::vector<double> theta, gates, ones((size_t)kHyperGates, 1.0);
    auto h_of = [&](double x1, double x2) {
      hyper_f(w, std::fabs(x1), std::fabs(x2), theta, gates);
      return hyper_h(theta, gating ? gates : ones, x1, x2);
    };
    const double cdamp = w.c;
    for (int t = 0; t < tr.T; ++t) {
      for (int s = 0; s < c.n; ++s) {
        const int half = c.N >> (s + 1), block = c.N >> s;
        for (int base = 0; base < c.N; base += block)
          for (int o = 0; o < half; ++o) {
            const int j = base + o, jp = j + half;
            {  // right pass reads previous L, current R
              const double rj = tr.R(t + 1, s)[j], rjp = tr.R(t + 1, s)[jp];
              const double lj = tr.L(t, s + 1)[j], ljp = tr.L(t, s + 1)[jp];
              double v1 = (1.0 - cdamp) * h_of(rj, ljp + rjp) +
                          cdamp * (w.wbp.beta[w.wbp.idx(t, s, j)] *
                                   g_exact(rj, ljp + rjp));
              double v2 = (1.0 - cdamp) * h_of(rj, lj) +
                          cdamp * (w.wbp.beta[w.wbp.idx(t, s, jp)] *
                                   g_exact(rj, lj)) +
                          rjp;
              CHECK(tr.R(t + 1, s + 1)[j] == clamp_llr(v1));
              CHECK(tr.R(t + 1, s + 1)[jp] == clamp_llr(v2));
            }
            {  // left pass reads everything fresh
              const double rj = tr.R(t + 1, s)[j], rjp = tr.R(t + 1, s)[jp];
              const double lj = tr.L(t + 1, s + 1)[j],
                           ljp = tr.L(t + 1, s + 1)[jp];
              double v1 = (1.0 - cdamp) * h_of(lj, ljp + rjp) +
                          cdamp * (w.wbp.alpha[w.wbp.idx(t, s, j)] *
                                   g_exact(lj, ljp + rjp));
              double v2 = (1.0 - cdamp) * h_of(rj, lj) +
                          cdamp * (w.wbp.alpha[w.wbp.idx(t, s, jp)] *
                                   g_exact(rj, lj)) +
                          ljp;
              CHECK(tr.L(t + 1, s)[j] == clamp_llr(v1));
              CHECK(tr.L(t + 1, s)[jp] == clamp_llr(v2));
            }
          }
      }
    }
  }
}

TEST_CASE("gradient buffers accumulate across calls") {
  PolarCode c = construct_bhattacharyya(3, 4);
  WbpWeights w = make_wbp_weights(c, 2);
  std::vector<double> llr = testutil::random_llrs(c.N, 70, 4.0);
  std::vector<std::uint8_t> u = testutil::random_bits(c.N, 71);
  NeuralTrace tr;
  SoftResult r = wbp_record(c, llr, w, Kernel::Exact, tr);
  std::vector<double> dLdo = bce_loss_grad(r.o, u);
  WbpGrads once, twice;
  wbp_backward(c, w, Kernel::Exact, tr, dLdo, once);
  wbp_backward(c, w, Kernel::Exact, tr, dLdo, twice);
  wbp_backward(c, w, Kernel::Exact, tr, dLdo, twice);
  for (size_t i = 0; i < once.alpha.size(); ++i)
    CHECK(twice.alpha[i] == doctest::Approx(2.0 * once.alpha[i]).epsilon(1e-15));
}

TEST_CASE("writes nothing ever reads carry no gradient") {
  PolarCode c = construct_bhattacharyya(4, 8);
  const int T = 3;
  WbpWeights w = make_wbp_weights(c, T);
  std::vector<double> llr = testutil::random_llrs(c.N, 80, 4.0);
  std::vector<std::uint8_t> u = testutil::random_bits(c.N, 81);
  NeuralTrace tr;
  SoftResult r = wbp_record(c, llr, w, Kernel::Exact, tr);
  WbpGrads g;
  wbp_backward(c, w, Kernel::Exact, tr, bce_loss_grad(r.o, u), g);
  double live = 0.0;
  for (double v : g.alpha) live += std::fabs(v);
  for (double v : g.beta) live += std::fabs(v);
  CHECK(live > 0.0);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < c.N; ++j) {
      // R row n is never read back
      CHECK(g.beta[w.idx(t, c.n - 1, j)] == 0.0);
      // L row 0 only matters after the last iteration
      if (t < T - 1) CHECK(g.alpha[w.idx(t, 0, j)] == 0.0);
    }
}

namespace {

struct FdCase {
  PolarCode code;
  Kernel kernel;
  double tol;
};

// central-difference validation of the recorded backward pass, top-|grad|
// coordinates of every trained block
void check_wbp_fd(const FdCase& fc, unsigned seed) {
  const int T = 2;
  WbpWeights w = make_wbp_weights(fc.code, T);
  for (size_t i = 0; i < w.alpha.size(); ++i) {
    w.alpha[i] = 0.9 + 0.007 * (double)(i % 23);
    w.beta[i] = 1.05 - 0.006 * (double)(i % 19);
  }
  std::vector<double> llr = testutil::random_llrs(fc.code.N, seed, 4.0);
  std::vector<std::uint8_t> u = testutil::random_bits(fc.code.N, seed + 1);
  NeuralTrace tr;
  SoftResult r = wbp_record(fc.code, llr, w, fc.kernel, tr);
  WbpGrads g;
  wbp_backward(fc.code, w, fc.kernel, tr, bce_loss_grad(r.o, u), g);

  auto loss_at = [&]() {
    return bce_loss(wbp_decode(fc.code, llr, w, fc.kernel).o, u);
  };
  const double eps = 1e-5;
  auto probe = [&](std::vector<double>& vec, size_t i, double analytic) {
    double keep = vec[i];
    vec[i] = keep + eps;
    double up = loss_at();
    vec[i] = keep - eps;
    double dn = loss_at();
    vec[i] = keep;
    double fd = (up - dn) / (2.0 * eps);
    CHECK(rel_err(analytic, fd) < fc.tol);
  };
  for (size_t i : top_coords(g.alpha, 5)) probe(w.alpha, i, g.alpha[i]);
  for (size_t i : top_coords(g.beta, 5)) probe(w.beta, i, g.beta[i]);
}

void check_hyper_fd(const FdCase& fc, unsigned seed, bool gating) {
  const int T = 2;
  HyperWeights w = make_hyper_weights(fc.code, T, seed);
  for (size_t i = 0; i < w.wbp.alpha.size(); ++i) {
    w.wbp.alpha[i] = 0.9 + 0.007 * (double)(i % 23);
    w.wbp.beta[i] = 1.05 - 0.006 * (double)(i % 19);
  }
  w.c = 0.41;
  std::vector<double> llr = testutil::random_llrs(fc.code.N, seed + 2, 4.0);
  std::vector<std::uint8_t> u = testutil::random_bits(fc.code.N, seed + 3);
  NeuralTrace tr;
  HyperScratch sc;
  SoftResult r = hyper_record(fc.code, llr, w, fc.kernel, gating, tr, sc);
  HyperGrads g;
  hyper_backward(fc.code, w, fc.kernel, gating, tr, bce_loss_grad(r.o, u), g,
                 sc);

  auto loss_at = [&]() {
    return bce_loss(hyper_decode(fc.code, llr, w, fc.kernel, gating).o, u);
  };
  const double eps = 1e-5;
  auto probe = [&](double& slot, double analytic) {
    double keep = slot;
    slot = keep + eps;
    double up = loss_at();
    slot = keep - eps;
    double dn = loss_at();
    slot = keep;
    double fd = (up - dn) / (2.0 * eps);
    CHECK(rel_err(analytic, fd) < fc.tol);
  };
  for (size_t i : top_coords(g.alpha, 5)) probe(w.wbp.alpha[i], g.alpha[i]);
  for (size_t i : top_coords(g.beta, 5)) probe(w.wbp.beta[i], g.beta[i]);
  for (size_t i : top_coords(g.f, 5)) probe(w.f[i], g.f[i]);
  probe(w.c, g.c);
}

}  // namespace

TEST_CASE("weighted-bp gradients match finite differences") {
  check_wbp_fd({construct_bhattacharyya(3, 4), Kernel::Exact, 1e-4}, 500);
  check_wbp_fd({construct_bhattacharyya(3, 4), Kernel::MinSum, 1e-3}, 510);
}

TEST_CASE("hypernetwork gradients match finite differences") {
  check_hyper_fd({construct_bhattacharyya(3, 4), Kernel::Exact, 1e-4}, 600,
                 true);
  check_hyper_fd({construct_bhattacharyya(3, 4), Kernel::MinSum, 1e-3}, 610,
                 true);
  check_hyper_fd({construct_bhattacharyya(3, 4), Kernel::Exact, 1e-4}, 620,
                 false);
}

TEST_CASE("no-gating drops every gate-logit gradient but trains the rest") {
  PolarCode c = construct_bhattacharyya(3, 4);
  HyperWeights w = make_hyper_weights(c, 2, 23);
  std::vector<double> llr = testutil::random_llrs(c.N, 90, 4.0);
  std::vector<std::uint8_t> u = testutil::random_bits(c.N, 91);
  NeuralTrace tr;
  HyperScratch sc;
  SoftResult r = hyper_record(c, llr, w, Kernel::Exact, false, tr, sc);
  HyperGrads g;
  hyper_backward(c, w, Kernel::Exact, false, tr, bce_loss_grad(r.o, u), g, sc);
  // rows of f's last layer that only feed gate logits must stay untouched
  MlpSpec fs = hyper_f_spec();
  size_t last = fs.param_count() - (size_t)16 * kHyperFOut;
  double gate_rows = 0.0, theta_rows = 0.0;
  for (int o = 0; o < kHyperFOut; ++o)
    for (int k = 0; k < 16; ++k) {
      double v = std::fabs(g.f[last + (size_t)o * 16 + k]);
      if (o >= kHyperHParams)
        gate_rows += v;
      else
        theta_rows += v;
    }
  CHECK(gate_rows == 0.0);
  CHECK(theta_rows > 0.0);
  CHECK(g.c != 0.0);
}

TEST_CASE("soft outputs transform with the codeword, weights fixed") {
  PolarCode c = construct_bhattacharyya(4, 8);
  HyperWeights hw = make_hyper_weights(c, 3, 29);
  hw.c = 0.3;
  WbpWeights ww = make_wbp_weights(c, 3);
  for (size_t i = 0; i < ww.alpha.size(); ++i) {
    ww.alpha[i] = 0.7 + 0.02 * (double)(i % 17);
    ww.beta[i] = 1.1 - 0.015 * (double)(i % 13);
  }
  for (Kernel k : {Kernel::Exact, Kernel::MinSum}) {
    for (unsigned t = 0; t < 6; ++t) {
      std::vector<std::uint8_t> u =
          expand_info(c, testutil::random_bits(c.K, 300 + t));
      std::vector<std::uint8_t> x = encode(c, u);
      std::vector<double> noise = testutil::random_llrs(c.N, 400 + t, 2.0);
      std::vector<double> llr_x(c.N), llr_0(c.N);
      for (int j = 0; j < c.N; ++j) {
        double s = x[(size_t)j] ? -1.0 : 1.0;
        llr_x[(size_t)j] = clamp_llr(3.5 * s + noise[(size_t)j]);
        llr_0[(size_t)j] = s * llr_x[(size_t)j];
      }
      SoftResult hx = hyper_decode(c, llr_x, hw, k);
      SoftResult h0 = hyper_decode(c, llr_0, hw, k);
      SoftResult wx = wbp_decode(c, llr_x, ww, k);
      SoftResult w0 = wbp_decode(c, llr_0, ww, k);
      for (int j = 0; j < c.N; ++j) {
        double sg = u[(size_t)j] ? -1.0 : 1.0;
        CHECK(hx.l1[(size_t)j] == sg * h0.l1[(size_t)j]);
        CHECK(wx.l1[(size_t)j] == sg * w0.l1[(size_t)j]);
      }
    }
  }
}
