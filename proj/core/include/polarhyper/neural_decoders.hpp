/* Learnable BP decoders on the polar factor graph.
 *
 * Weighted BP multiplies every g-output by a per-(iteration, stage, node)
 * weight: alpha[t][s][j] scales the g term of the update writing L[s][j],
 * beta[t][s][j] scales the g term of the update writing R[s+1][j]. The
 * trailing additive terms stay unweighted.
 *
 * The hypernetwork decoder replaces each update with
 *     (1-c) * h(x1, x2) + c * w * g(x1, x2) + trail
 * where (x1, x2) are the update's own g arguments read at its point in the
 * schedule, w is the update's alpha/beta, and c is a learnable damping
 * scalar kept in [0,1]. A shared network f([2,16,16,16,65], tanh, no bias,
 * linear output) maps (|x1|, |x2|) to h's 48 weights plus 17 gate logits
 * (16 hidden + 1 output, logistic-squashed). h itself is a gated [2,16,1]
 * tanh net evaluated on (|x1|, |x2|) and multiplied by sign(x1)*sign(x2),
 * clamped to +-LLR_SAT. Working on magnitudes with an explicit sign factor
 * makes every update transform exactly like g under the per-node sign
 * translation of a codeword, which is what makes training on the zero
 * codeword sufficient; it also means h(-x,-y) = h(x,y), matching g rather
 * than a plain odd network.
 *
 * Soft outputs are o_j = logistic(-L[0][j]), read as P(u_j = 1), paired
 * with labels in binary cross entropy.
 *
 * Training support: *_record runs the forward pass while snapshotting the
 * message grid after every iteration; *_backward replays the schedule in
 * exact reverse, recomputing f/h activations from the snapshots, and
 * accumulates gradients w.r.t. alpha, beta, f weights, and c. Clamped
 * writes pass zero gradient once saturated (|written| >= LLR_SAT), and the
 * min-sum kink routes to the first argument.
 */
#pragma once

#include <cstdint>
#include <vector>

#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/nnet.hpp"
#include "polarhyper/polar_code.hpp"

namespace polar {

enum class DecoderVariant : std::uint8_t { Wbp = 0, Hyper = 1 };

struct WbpWeights {
  int T = 0, n = 0, N = 0;
  std::vector<double> alpha, beta;  // each [T][n][N], flat
  size_t idx(int t, int s, int j) const {
    return ((size_t)t * n + s) * N + j;
  }
};

WbpWeights make_wbp_weights(const PolarCode& code, int T);  // all ones

MlpSpec hyper_f_spec();  // [2,16,16,16,65]
MlpSpec hyper_h_spec();  // [2,16,1]

inline constexpr int kHyperHParams = 48;  // 2*16 + 16*1
inline constexpr int kHyperGates = 17;    // 16 hidden + 1 output
inline constexpr int kHyperFOut = kHyperHParams + kHyperGates;

struct HyperWeights {
  WbpWeights wbp;
  std::vector<double> f;  // hyper_f_spec().param_count()
  double c = 0.5;
};

// alpha = beta = 1, f ~ U[-0.1, 0.1], c ~ U[0, 1], drawn from `seed`.
HyperWeights make_hyper_weights(const PolarCode& code, int T,
                                std::uint64_t seed);

struct SoftResult {
  std::vector<double> o;   // logistic(-L[0][j]), j = 0..N-1
  std::vector<double> l1;  // final stage-1 L row
};

SoftResult wbp_decode(const PolarCode& code, const std::vector<double>& llr,
                      const WbpWeights& w, Kernel kernel);

// gating=false forces all 17 gates to 1 and detaches f's gate outputs.
SoftResult hyper_decode(const PolarCode& code, const std::vector<double>& llr,
                        const HyperWeights& w, Kernel kernel,
                        bool gating = true);

// Mean binary cross entropy over all N positions, o epsilon-clamped into
// [1e-12, 1-1e-12]; u holds the transmitted source bits.
double bce_loss(const std::vector<double>& o,
                const std::vector<std::uint8_t>& u);
// d(bce_loss)/d(o_j); zero where the epsilon clamp is active.
std::vector<double> bce_loss_grad(const std::vector<double>& o,
                                  const std::vector<std::uint8_t>& u);

// One hypernetwork evaluation on a pair of magnitudes: h's 48 weights and
// the 17 logistic gates.
void hyper_f(const HyperWeights& w, double a, double b,
             std::vector<double>& theta, std::vector<double>& gates);
// Gated h on signed messages: sign(x)*sign(y) * h_gated(|x|, |y|), clamped.
double hyper_h(const std::vector<double>& theta,
               const std::vector<double>& gates, double x, double y);

// Grid snapshots after each iteration (index 0 = initial state); enough to
// replay any message version the schedule ever reads.
struct NeuralTrace {
  int T = 0, n = 0, N = 0;
  std::vector<double> Lh, Rh;  // (T+1) x (n+1) x N each
  double* L(int t, int row) { return Lh.data() + ((size_t)t * (n + 1) + row) * N; }
  double* R(int t, int row) { return Rh.data() + ((size_t)t * (n + 1) + row) * N; }
  const double* L(int t, int row) const {
    return Lh.data() + ((size_t)t * (n + 1) + row) * N;
  }
  const double* R(int t, int row) const {
    return Rh.data() + ((size_t)t * (n + 1) + row) * N;
  }
};

struct WbpGrads {
  std::vector<double> alpha, beta;
};

struct HyperGrads {
  std::vector<double> alpha, beta, f;
  double c = 0.0;
};

// Reusable buffers: message grid, batched f/h activations, adjoint grids.
struct HyperScratch {
  MessageGrid m;
  MlpTape ftape;
  std::vector<double> X;                    // 2 x B magnitudes
  std::vector<double> x1, x2;               // signed args
  std::vector<double> gv, wv, hv, tr;       // per-sample g, weight, h, trail
  std::vector<double> gates;                // 17 x B
  std::vector<double> hT;                   // 16 x B tanh units of h
  std::vector<double> hlin;                 // pre-gate h output
  std::vector<double> dh, dx1p, dx2p;       // backward per-sample
  std::vector<double> dout_f;               // 65 x B
  std::vector<double> dXf, daX;             // 2 x B each
  std::vector<double> dLc, dLp, dR;         // adjoint grids (n+1) x N
};

SoftResult wbp_record(const PolarCode& code, const std::vector<double>& llr,
                      const WbpWeights& w, Kernel kernel, NeuralTrace& trace);

SoftResult hyper_record(const PolarCode& code, const std::vector<double>& llr,
                        const HyperWeights& w, Kernel kernel, bool gating,
                        NeuralTrace& trace, HyperScratch& scratch);

// dLdo = d(loss)/d(soft outputs). Gradients accumulate (+=) into the grad
// structs, which must be pre-sized (zero or running sums).
void wbp_backward(const PolarCode& code, const WbpWeights& w, Kernel kernel,
                  const NeuralTrace& trace, const std::vector<double>& dLdo,
                  WbpGrads& grads);

void hyper_backward(const PolarCode& code, const HyperWeights& w,
                    Kernel kernel, bool gating, const NeuralTrace& trace,
                    const std::vector<double>& dLdo, HyperGrads& grads,
                    HyperScratch& scratch);

}  // namespace polar
