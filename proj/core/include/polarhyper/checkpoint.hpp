/* Versioned binary container for trained decoder parameters.
 *
 * Layout (all integers little-endian, all payloads IEEE-754 binary64 LE):
 *   magic   8 bytes "PHCP0001"
 *   u32     n            (block size N = 2^n)
 *   u32     K            (information bits)
 *   u64     frozen_hash  (FNV-1a over the frozen mask)
 *   u8      variant      (0 = wbp, 1 = hyper)
 *   u8      kernel       (0 = exact, 1 = min-sum)
 *   u8      gating       (1 = gated h, 0 = gates forced to 1)
 *   u8      pad = 0
 *   u32     T            (unrolled iterations)
 *   u32     segment count
 *   per segment: u8 name length, name bytes, u32 ndims, u64 dims[ndims],
 *                f64 data[prod(dims)]
 *
 * wbp checkpoints carry "alpha" and "beta" [T,n,N]; hyper checkpoints add
 * "f_widths" [5], "f_weights" [flat], "c" [1]. Saving the result of a load
 * reproduces the file byte for byte.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/polar_code.hpp"

namespace polar {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::uint32_t n = 0, K = 0;
  std::uint64_t frozen_hash = 0;
  DecoderVariant variant = DecoderVariant::Wbp;
  Kernel kernel = Kernel::MinSum;
  bool gating = true;
  std::uint32_t T = 0;
  HyperWeights w;  // wbp checkpoints leave w.f empty and w.c at 1
};

Checkpoint make_checkpoint(const PolarCode& code, DecoderVariant variant,
                           Kernel kernel, bool gating, const HyperWeights& w);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Throws CheckpointError unless the checkpoint belongs to this code.
void validate_checkpoint(const Checkpoint& ck, const PolarCode& code);

}  // namespace polar
