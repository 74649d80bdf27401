/* Successive cancellation and SC list decoding.
 *
 * Both walk the code tree recursively. LLR scratch lives in a flat 2N
 * buffer where a node's child region starts right after its own M entries
 * (only one node per depth is live at a time). Hard decisions propagate
 * back up through an N-wide bit buffer using the in-place encode butterfly,
 * so the root bit buffer ends up holding the re-encoded codeword.
 *
 * SCL keeps full per-path copies (LLR tree, bit tree, u, path metric) and
 * forks at information leaves with the usual LLR penalty
 *   pen(bit) = max((1 - 2 bit) * -lambda, 0),
 * i.e. |lambda| when the choice disagrees with the sign, else 0. Candidates
 * are enumerated path-major (bit 0 before bit 1) and pruned with a stable
 * sort on the metric, so ties always keep the lower path id. With list
 * size 1 the decoder is bit-identical to sc_decode.
 */
#pragma once

#include <cstdint>
#include <vector>

#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/polar_code.hpp"

namespace polar {

struct ScResult {
  std::vector<std::uint8_t> u_hat;  // N decisions, frozen positions zero
  std::vector<std::uint8_t> x_hat;  // re-encoded codeword estimate
};

ScResult sc_decode(const PolarCode& code, const std::vector<double>& llr,
                   Kernel kernel = Kernel::Exact);

struct SclResult {
  std::vector<std::uint8_t> u_hat;  // best path (lowest metric, lowest id)
  double pm = 0.0;
};

SclResult scl_decode(const PolarCode& code, const std::vector<double>& llr,
                     int list_size, Kernel kernel = Kernel::Exact);

}  // namespace polar
