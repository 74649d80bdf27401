/* SGD trainer for the learned BP decoders.
 *
 * Training data is the all-zero codeword only: both decoders commute with
 * codeword sign translation, so the loss landscape seen from the zero word
 * is the loss landscape, and no encoder runs in the training loop. Each
 * batch draws an equal share of frames per configured SNR point; frame
 * noise comes from seeds derived as (master, train-batch, epoch, batch,
 * frame), so any (epoch, batch) pair regenerates its exact batch
 * independently of history.
 *
 * Gradients are summed per 64-frame chunk and the chunk sums are merged in
 * chunk index order, so the reduction is bit-identical for any worker
 * count. The batch-mean gradient is globally norm-clipped (over the
 * trained parameter blocks only) and applied by plain SGD, or by Adam when
 * `adaptive` is set; the damping constant is clamped back into [0, 1]
 * after every step.
 *
 * Ablations:
 *   full          everything trains
 *   no-damping    c fixed at 0   (pure hypernetwork output path)
 *   fixed-damping c fixed at 0.5
 *   no-gating     gates forced to 1 in fwd/bwd; gate rows of f get no grad
 *
 * Per epoch: mean training loss, validation BER on zero-codeword frames at
 * val_snr_db (seeds from the validation stream, shared across epochs), a
 * metrics CSV row, and a checkpoint overwrite. Early stopping tracks the
 * best validation BER with a patience window; the returned / final
 * checkpoint holds the best-validation parameters, not the last ones. A
 * non-finite batch loss aborts training after dumping the current
 * parameters next to the checkpoint path.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarhyper/checkpoint.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/polar_code.hpp"

namespace polar {

enum class Ablation : uint8_t {
  Full = 0,
  NoDamping = 1,
  FixedDamping = 2,
  NoGating = 3,
};

const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& s);  // throws invalid_argument

struct TrainConfig {
  DecoderVariant variant = DecoderVariant::Hyper;
  Ablation ablation = Ablation::Full;
  Kernel kernel = Kernel::MinSum;
  int iters = 5;  // BP iterations T
  int batch = 0;  // frames per batch; 0 -> 3600 (N<=32) else 1800
  std::vector<double> snrs_db = {1, 2, 3, 4, 5, 6};
  double lr0 = 0;       // 0 -> 0.99 (N<=32) else 2.5
  double decay = 1e-4;  // lr_k = lr0 / (1 + k * decay), k = batch counter
  int batches_per_epoch = 125;
  int epochs = 200;
  std::uint64_t seed = 1;
  bool adaptive = false;  // Adam instead of plain SGD
  double clip_norm = 1.0;
  int patience = 20;  // epochs without val improvement before stopping
  double val_snr_db = 4.0;
  int val_frames = 2048;
  int workers = 1;
  // Warm start: load initial weights from this checkpoint instead of the
  // seeded init. Must match variant, kernel, iters and the target code;
  // fixed-c ablations re-pin c after loading. Optimizer state starts fresh.
  std::string init_ckpt;
};

// Resolves batch/lr0 defaults for `code` and validates divisibility of the
// batch by the SNR grid. Throws std::invalid_argument on a bad config.
TrainConfig resolve_config(const PolarCode& code, TrainConfig cfg);

double lr_at(const TrainConfig& cfg, std::int64_t k);

// Channel LLRs for one zero-codeword training batch, row-major
// [batch x N]. Frame f uses snrs_db[f / (batch / #snrs)].
void gen_batch(const PolarCode& code, const TrainConfig& cfg, int epoch,
               int batch_idx, std::vector<double>& llrs);

struct TrainAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0;
  double mean_loss = 0;
  double val_ber = 0;
};

struct TrainResult {
  Checkpoint ckpt;  // best-validation parameters
  std::vector<EpochStats> history;
  double best_val_ber = 1.0;
  int best_epoch = -1;
};

// Runs the loop; writes `checkpoint_out` every epoch (final contents =
// best-validation parameters) and appends one CSV row per epoch to
// `metrics_out` (header: epoch,lr,mean_loss,val_snr_db,val_ber). Either
// path may be empty to skip the file. Throws TrainAbort on non-finite
// loss.
TrainResult train(const PolarCode& code, const TrainConfig& cfg,
                  const std::string& checkpoint_out,
                  const std::string& metrics_out);

// Zero-codeword hard-decision BER over the info positions at
// cfg.val_snr_db, frames seeded from the validation stream.
double validate_ber(const PolarCode& code, const TrainConfig& cfg,
                    const HyperWeights& w);

}  // namespace polar
