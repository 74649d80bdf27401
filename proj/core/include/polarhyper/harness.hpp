/* Monte-Carlo BER/FER harness and the ablation table driver.
 *
 * Frame seeds derive from (master, eval, bits-of-snr_db, frame), so two
 * decoders evaluated with the same master seed see identical payloads and
 * identical noise frame for frame — BER deltas between decoders are paired
 * comparisons, not two independent experiments. The K info bits are always
 * drawn from the frame stream before any zeroing, so --zero-codeword flips
 * the payload to the zero word while leaving the noise sequence untouched.
 *
 * Stopping is block-deterministic: frames run in blocks of 256 and the
 * stop condition (enough bit errors, or the frame cap) is checked only at
 * block boundaries, so the frame count — and therefore every count in the
 * output — depends only on (code, decoder, options), never on scheduling.
 * Within a block, frames split into fixed 64-frame chunks whose integer
 * error counts merge exactly for any worker count.
 *
 * BER counts info positions only: frozen positions are not decisions.
 */
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "polarhyper/checkpoint.hpp"
#include "polarhyper/polar_code.hpp"
#include "polarhyper/trainer.hpp"

namespace polar {

enum class DecoderKind : uint8_t {
  BpExact,
  BpMinSum,
  Wbp,
  Hyper,
  Sc,
  Scl,
};

const char* decoder_kind_name(DecoderKind k);
DecoderKind parse_decoder_kind(const std::string& s);  // throws invalid_argument

struct DecoderSpec {
  DecoderKind kind = DecoderKind::BpMinSum;
  int iters = 5;      // bp-exact / bp-minsum
  int list_size = 8;  // scl
  Checkpoint ckpt;    // wbp / hyper (T, kernel, gating and weights)
};

struct EvalOptions {
  std::vector<double> snrs_db;
  std::uint64_t min_frames = 256;
  std::uint64_t max_frames = 1000000;
  std::uint64_t target_errors = 500;
  std::uint64_t seed = 1;
  bool zero_codeword = false;
  int workers = 1;
};

struct EvalRecord {
  double snr_db = 0;
  std::uint64_t frames = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t info_bits = 0;
  std::uint64_t frame_errors = 0;
  double ber = 0;
  double fer = 0;
};

// One record per SNR point, in input order. Throws on an invalid spec
// (e.g. missing checkpoint for wbp/hyper, list_size < 1).
std::vector<EvalRecord> evaluate(const PolarCode& code, const DecoderSpec& dec,
                                 const EvalOptions& opt,
                                 std::ostream* progress = nullptr);

// "lo:hi:step" inclusive grid (step may be omitted: "4" or "1:6" step 1);
// throws std::invalid_argument on malformed input.
std::vector<double> parse_snr_spec(const std::string& s);

// CSV with header snr_db,frames,bit_errors,info_bits,frame_errors,ber,fer.
void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& recs);
std::vector<EvalRecord> read_results_csv(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<EvalRecord> recs;
};

// Self-contained SVG: BER vs Eb/N0, log y axis, one polyline per series.
// Zero-error points are clipped to the 1e-8 floor and flagged in the legend.
void write_ber_plot_svg(const std::string& path,
                        const std::vector<PlotSeries>& series);

struct AblationOptions {
  TrainConfig train;       // variant/ablation fields are overridden per row
  EvalOptions eval;        // defaults to SNR 1..5, 500 target errors
  std::string ckpt_dir;    // reuse/store checkpoints here; empty = train only
};

struct AblationRow {
  Ablation ablation = Ablation::Full;
  Checkpoint ckpt;
  std::vector<EvalRecord> recs;  // one per eval SNR
};

// Trains (or loads from ckpt_dir) all four variants and evaluates each on
// the eval grid. Row order: no-damping, fixed-damping, no-gating, full.
std::vector<AblationRow> ablation_suite(const PolarCode& code,
                                        const AblationOptions& opt,
                                        std::ostream* progress = nullptr);

// Matrix CSV: header "ablation,<snr>..."; cells are -ln(BER) (BER floored
// at 1e-12 so a zero-error cell stays finite).
void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows);

}  // namespace polar
