// polarsim: polar-code construction, encoding, Monte-Carlo simulation and
// decoder training from one binary.
//
// Exit codes: 0 ok, 2 bad arguments, 3 I/O or file-format failure,
// 4 numeric abort during training.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polarhyper/channel.hpp"
#include "polarhyper/checkpoint.hpp"
#include "polarhyper/harness.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/polar_code.hpp"
#include "polarhyper/trainer.hpp"

namespace {

using namespace polar;

std::vector<std::uint8_t> read_bit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bits;
  char c;
  while (in.get(c)) {
    if (c == '0' || c == '1')
      bits.push_back((std::uint8_t)(c - '0'));
    else if (!std::isspace((unsigned char)c))
      throw std::runtime_error(path + ": expected only 0/1 and whitespace");
  }
  return bits;
}

std::string basename_label(const std::string& path) {
  std::string stem = std::filesystem::path(path).stem().string();
  return stem.empty() ? path : stem;
}

int run_construct(int n, int k, const std::string& method, double design_param,
                  const std::string& in, const std::string& out) {
  PolarCode code;
  if (method == "bhattacharyya") {
    code = construct_bhattacharyya(n, k, design_param);
  } else if (method == "file") {
    if (in.empty())
      throw std::invalid_argument("construct --method file needs --in");
    code = make_code(n, k, load_frozen_indices(in, 1 << n, k));
  } else {
    throw std::invalid_argument("unknown construction method: " + method);
  }
  save_code_file(code, out);
  std::cout << "wrote (" << code.N << "," << code.K << ") code with "
            << (code.N - code.K) << " frozen positions to " << out << "\n";
  return 0;
}

int run_encode(const std::string& code_path, const std::string& in,
               const std::string& out) {
  PolarCode code = load_code_file(code_path);
  std::vector<std::uint8_t> bits = read_bit_file(in);
  if (bits.empty() || bits.size() % (size_t)code.K != 0)
    throw std::runtime_error(in + ": bit count must be a positive multiple of K=" +
                             std::to_string(code.K));
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + out);
  const size_t frames = bits.size() / (size_t)code.K;
  std::vector<std::uint8_t> info((size_t)code.K);
  for (size_t f = 0; f < frames; ++f) {
    std::copy(bits.begin() + f * code.K, bits.begin() + (f + 1) * code.K,
              info.begin());
    std::vector<std::uint8_t> x = encode(code, expand_info(code, info));
    for (std::uint8_t b : x) os << char('0' + b);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + out);
  std::cout << "encoded " << frames << " frame(s) to " << out << "\n";
  return 0;
}

struct SimArgs {
  std::string code_path, decoder, checkpoint, snr = "1:6:1", out;
  int list_size = 8, iters = 5, workers = 1;
  std::uint64_t min_frames = 256, max_frames = 1000000, target_errors = 500;
  std::uint64_t seed = 1;
  bool zero_codeword = false;
};

int run_simulate(const SimArgs& a) {
  PolarCode code = load_code_file(a.code_path);
  DecoderSpec dec;
  dec.kind = parse_decoder_kind(a.decoder);
  dec.iters = a.iters;
  dec.list_size = a.list_size;
  if (dec.kind == DecoderKind::Wbp || dec.kind == DecoderKind::Hyper) {
    if (a.checkpoint.empty())
      throw std::invalid_argument(a.decoder + " needs --checkpoint");
    dec.ckpt = load_checkpoint(a.checkpoint);
  }
  EvalOptions opt;
  opt.snrs_db = parse_snr_spec(a.snr);
  opt.min_frames = a.min_frames;
  opt.max_frames = a.max_frames;
  opt.target_errors = a.target_errors;
  opt.seed = a.seed;
  opt.zero_codeword = a.zero_codeword;
  opt.workers = a.workers;
  std::vector<EvalRecord> recs = evaluate(code, dec, opt, &std::cerr);
  write_results_csv(a.out, recs);
  std::cout << "wrote " << recs.size() << " SNR point(s) to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string code_path, decoder = "hyper", ablation = "full";
  std::string kernel = "minsum", optimizer = "sgd", snr = "1:6:1";
  std::string checkpoint_out, metrics_out, init;
  int iters = 5, batch = 0, epochs = 200, batches_per_epoch = 125;
  int patience = 20, val_frames = 2048, workers = 1;
  double lr0 = 0, decay = 1e-4, val_snr = 4.0, clip = 1.0;
  std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a) {
  PolarCode code = load_code_file(a.code_path);
  TrainConfig cfg;
  if (a.decoder == "wbp")
    cfg.variant = DecoderVariant::Wbp;
  else if (a.decoder == "hyper")
    cfg.variant = DecoderVariant::Hyper;
  else
    throw std::invalid_argument("train supports wbp or hyper, got " +
                                a.decoder);
  cfg.ablation = parse_ablation(a.ablation);
  if (a.kernel == "minsum")
    cfg.kernel = Kernel::MinSum;
  else if (a.kernel == "exact")
    cfg.kernel = Kernel::Exact;
  else
    throw std::invalid_argument("unknown kernel: " + a.kernel);
  if (a.optimizer == "adaptive")
    cfg.adaptive = true;
  else if (a.optimizer != "sgd")
    throw std::invalid_argument("unknown optimizer: " + a.optimizer);
  cfg.iters = a.iters;
  cfg.batch = a.batch;
  cfg.snrs_db = parse_snr_spec(a.snr);
  cfg.lr0 = a.lr0;
  cfg.decay = a.decay;
  cfg.batches_per_epoch = a.batches_per_epoch;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.clip_norm = a.clip;
  cfg.patience = a.patience;
  cfg.val_snr_db = a.val_snr;
  cfg.val_frames = a.val_frames;
  cfg.workers = a.workers;
  cfg.init_ckpt = a.init;

  TrainResult res = train(code, cfg, a.checkpoint_out, a.metrics_out);
  const EpochStats& last = res.history.back();
  std::cout << "trained " << res.history.size() << " epoch(s); best val BER "
            << res.best_val_ber << " at epoch " << res.best_epoch
            << " (final loss " << last.mean_loss << "); checkpoint: "
            << a.checkpoint_out << "\n";
  return 0;
}

struct AblateArgs {
  std::string code_path, out, reuse_dir, snr = "1:5:1";
  int iters = 5, batch = 0, epochs = 200, batches_per_epoch = 125;
  int patience = 20, workers = 1;
  std::uint64_t seed = 1, target_errors = 500, max_frames = 1000000;
};

int run_ablate(const AblateArgs& a) {
  PolarCode code = load_code_file(a.code_path);
  AblationOptions opt;
  opt.train.variant = DecoderVariant::Hyper;
  opt.train.iters = a.iters;
  opt.train.batch = a.batch;
  opt.train.epochs = a.epochs;
  opt.train.batches_per_epoch = a.batches_per_epoch;
  opt.train.patience = a.patience;
  opt.train.seed = a.seed;
  opt.train.workers = a.workers;
  opt.eval.snrs_db = parse_snr_spec(a.snr);
  opt.eval.target_errors = a.target_errors;
  opt.eval.max_frames = a.max_frames;
  opt.eval.seed = a.seed;
  opt.eval.workers = a.workers;
  opt.ckpt_dir = a.reuse_dir;
  std::vector<AblationRow> rows = ablation_suite(code, opt, &std::cerr);
  write_ablation_csv(a.out, rows);
  std::cout << "wrote ablation table to " << a.out << "\n";
  return 0;
}

int run_plot(const std::vector<std::string>& ins, const std::string& out) {
  std::vector<PlotSeries> series;
  for (const std::string& arg : ins) {
    std::istringstream ss(arg);
    std::string path;
    while (std::getline(ss, path, ',')) {
      if (path.empty()) continue;
      PlotSeries s;
      s.label = basename_label(path);
      s.recs = read_results_csv(path);
      series.push_back(std::move(s));
    }
  }
  if (series.empty()) throw std::invalid_argument("plot: no input files");
  write_ber_plot_svg(out, series);
  std::cout << "wrote " << out << " (" << series.size() << " series)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polar code toolkit: construction, BP/SC decoding, training"};
  app.require_subcommand(1);
  int rc = 0;

  // construct
  auto* c = app.add_subcommand("construct", "design a code and write its descriptor");
  int c_n = 3, c_k = 4;
  std::string c_method = "bhattacharyya", c_in, c_out;
  double c_dp = 0.5;
  c->add_option("--n", c_n, "log2 block size (N = 2^n)")->required();
  c->add_option("--k", c_k, "information bits")->required();
  c->add_option("--method", c_method, "bhattacharyya | file");
  c->add_option("--design-param", c_dp, "initial BEC erasure for bhattacharyya");
  c->add_option("--in", c_in, "frozen-index file for --method file");
  c->add_option("--out", c_out, "output code descriptor")->required();
  c->callback([&] { rc = run_construct(c_n, c_k, c_method, c_dp, c_in, c_out); });

  // encode
  auto* e = app.add_subcommand("encode", "encode info bits from a text file");
  std::string e_code, e_in, e_out;
  e->add_option("--code", e_code, "code descriptor")->required();
  e->add_option("--in", e_in, "input bits, multiples of K of 0/1 chars")->required();
  e->add_option("--out", e_out, "output codewords, one line per frame")->required();
  e->callback([&] { rc = run_encode(e_code, e_in, e_out); });

  // simulate
  auto* s = app.add_subcommand("simulate", "Monte-Carlo BER/FER sweep");
  SimArgs sa;
  s->add_option("--code", sa.code_path, "code descriptor")->required();
  s->add_option("--decoder", sa.decoder,
                "bp-exact | bp-minsum | wbp | hyper | sc | scl")->required();
  s->add_option("--list-size", sa.list_size, "scl list size");
  s->add_option("--iters", sa.iters, "bp iterations (bp-exact/bp-minsum)");
  s->add_option("--checkpoint", sa.checkpoint, "trained weights for wbp/hyper");
  s->add_option("--snr", sa.snr, "Eb/N0 grid lo:hi:step in dB");
  s->add_option("--min-frames", sa.min_frames, "frames before stopping checks");
  s->add_option("--max-frames", sa.max_frames, "frame cap per SNR point");
  s->add_option("--target-errors", sa.target_errors, "bit errors to collect");
  s->add_option("--seed", sa.seed, "master seed");
  s->add_option("--workers", sa.workers, "worker threads");
  s->add_flag("--zero-codeword", sa.zero_codeword, "send the all-zero codeword");
  s->add_option("--out", sa.out, "results CSV")->required();
  s->callback([&] { rc = run_simulate(sa); });

  // train
  auto* t = app.add_subcommand("train", "fit wbp/hyper decoder weights");
  TrainArgs ta;
  t->add_option("--code", ta.code_path, "code descriptor")->required();
  t->add_option("--decoder", ta.decoder, "wbp | hyper");
  t->add_option("--ablation", ta.ablation,
                "full | no-damping | fixed-damping | no-gating");
  t->add_option("--kernel", ta.kernel, "minsum | exact");
  t->add_option("--iters", ta.iters, "unrolled BP iterations");
  t->add_option("--batch", ta.batch, "frames per batch (0 = default for N)");
  t->add_option("--epochs", ta.epochs, "max epochs");
  t->add_option("--batches-per-epoch", ta.batches_per_epoch, "batches per epoch");
  t->add_option("--lr0", ta.lr0, "initial learning rate (0 = default for N)");
  t->add_option("--decay", ta.decay, "learning-rate decay per batch");
  t->add_option("--clip", ta.clip, "global gradient-norm clip (<=0 disables)");
  t->add_option("--optimizer", ta.optimizer, "sgd | adaptive");
  t->add_option("--snr", ta.snr, "training Eb/N0 grid lo:hi:step in dB");
  t->add_option("--patience", ta.patience, "early-stop patience in epochs");
  t->add_option("--val-snr", ta.val_snr, "validation Eb/N0 in dB");
  t->add_option("--val-frames", ta.val_frames, "validation frames");
  t->add_option("--seed", ta.seed, "master seed");
  t->add_option("--workers", ta.workers, "worker threads");
  t->add_option("--init", ta.init,
                "warm-start from this checkpoint (same variant/kernel/iters)");
  t->add_option("--checkpoint-out", ta.checkpoint_out, "checkpoint path")->required();
  t->add_option("--metrics-out", ta.metrics_out, "per-epoch metrics CSV");
  t->callback([&] { rc = run_train(ta); });

  // ablate
  auto* b = app.add_subcommand("ablate", "train + evaluate all hyper ablations");
  AblateArgs ba;
  b->add_option("--code", ba.code_path, "code descriptor")->required();
  b->add_option("--out", ba.out, "ablation table CSV")->required();
  b->add_option("--reuse-checkpoints", ba.reuse_dir,
                "directory of per-ablation checkpoints (reused when compatible)");
  b->add_option("--iters", ba.iters, "unrolled BP iterations");
  b->add_option("--batch", ba.batch, "frames per batch (0 = default for N)");
  b->add_option("--epochs", ba.epochs, "max epochs per variant");
  b->add_option("--batches-per-epoch", ba.batches_per_epoch, "batches per epoch");
  b->add_option("--patience", ba.patience, "early-stop patience in epochs");
  b->add_option("--snr", ba.snr, "evaluation Eb/N0 grid");
  b->add_option("--target-errors", ba.target_errors, "bit errors per SNR point");
  b->add_option("--max-frames", ba.max_frames, "frame cap per SNR point");
  b->add_option("--seed", ba.seed, "master seed");
  b->add_option("--workers", ba.workers, "worker threads");
  b->callback([&] { rc = run_ablate(ba); });

  // plot
  auto* p = app.add_subcommand("plot", "render BER curves to SVG");
  std::vector<std::string> p_in;
  std::string p_out;
  p->add_option("--in", p_in, "results CSV path(s), comma-separated or repeated")
      ->required();
  p->add_option("--out", p_out, "output SVG")->required();
  p->callback([&] { rc = run_plot(p_in, p_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const polar::TrainAbort& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return rc;
}
