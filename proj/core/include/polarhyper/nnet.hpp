/* Small dense tanh networks without bias terms, with optional per-neuron
 * multiplicative gates (applied after the activation, final layer included)
 * and reverse-mode gradients w.r.t. weights, gates, and inputs.
 *
 * Everything is batched: activations are stored feature-major, value of
 * feature k for sample b at [k*B + b], so the inner loops run contiguously
 * over the batch. The single-sample entry points below are B=1 wrappers,
 * which keeps batched and scalar evaluation bit-identical (same fma
 * reduction order, same tanh).
 *
 * Weight layout is layer-major, row-major within a layer: layer l maps
 * widths[l] -> widths[l+1] and stores W[o*widths[l] + k]. The final layer
 * is linear; all others are tanh.
 */
#pragma once

#include <cstddef>
#include <vector>

namespace polar {

struct MlpSpec {
  std::vector<int> widths;

  int depth() const { return (int)widths.size() - 1; }
  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }

  size_t param_count() const {
    size_t p = 0;
    for (size_t l = 0; l + 1 < widths.size(); ++l)
      p += (size_t)widths[l] * widths[l + 1];
    return p;
  }
  // one gate per neuron per layer, final layer included
  int gate_count() const {
    int g = 0;
    for (size_t l = 1; l < widths.size(); ++l) g += widths[l];
    return g;
  }
  size_t act_count() const {
    size_t a = 0;
    for (int w : widths) a += (size_t)w;
    return a;
  }
};

// Recorded forward pass. t holds pre-gate activations (post-tanh, or the
// raw linear output for the last layer), act holds post-gate values; both
// concatenate levels 1..depth. Level 0 (the input) is kept in x.
struct MlpTape {
  int B = 0;
  std::vector<double> x;
  std::vector<double> t;
  std::vector<double> act;
  std::vector<double> scratch;  // two max-width*B delta buffers for backward
};

// gates: gate_count() x B feature-major, or nullptr for an ungated net.
void mlp_forward(const MlpSpec& spec, const double* w, int B, const double* x,
                 const double* gates, MlpTape& tape);

// Pointer to the widths.back() x B output block inside the tape.
const double* mlp_output(const MlpSpec& spec, const MlpTape& tape);

// dout: out_dim x B. dw accumulates (+=); dgates accumulates (+=) and may be
// null (must be null iff the forward ran ungated); dx is overwritten and may
// be null when input gradients are not needed.
void mlp_backward(const MlpSpec& spec, const double* w, MlpTape& tape,
                  const double* dout, const double* gates, double* dw,
                  double* dgates, double* dx);

// Single-sample wrappers (B = 1).
std::vector<double> forward1(const MlpSpec& spec, const std::vector<double>& w,
                             const std::vector<double>* gates,
                             const std::vector<double>& x, MlpTape& tape);

struct MlpGrads {
  std::vector<double> w, gates, x;
};

MlpGrads backward1(const MlpSpec& spec, const std::vector<double>& w,
                   const std::vector<double>* gates, MlpTape& tape,
                   const std::vector<double>& dout);

// Max relative error between reverse-mode and central-difference gradients
// of sum(outputs), over all weights and inputs (ungated).
double grad_check(const MlpSpec& spec, std::vector<double> params,
                  std::vector<double> input, double eps);

}  // namespace polar
