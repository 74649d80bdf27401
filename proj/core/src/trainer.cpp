#include "polarhyper/trainer.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarhyper/channel.hpp"
#include "polarhyper/llr.hpp"
#include "polarhyper/parallel.hpp"
#include "polarhyper/rng.hpp"

namespace polar {

namespace {

constexpr size_t kChunkFrames = 64;

// One trainable span plus its optimizer state (null for plain SGD).
struct Block {
  double* p;
  double* g;
  double* m;
  double* v;
  size_t len;
};

void zero_grads(HyperGrads& g, size_t ab_len, size_t f_len) {
  g.alpha.assign(ab_len, 0.0);
  g.beta.assign(ab_len, 0.0);
  g.f.assign(f_len, 0.0);
  g.c = 0.0;
}

void zero_llr_row(double* row, int N, const NoiseSpec& spec,
                  GaussianStream& rng) {
  const double scale = 2.0 / (spec.sigma * spec.sigma);
  for (int j = 0; j < N; ++j) {
    double y = 1.0 + spec.sigma * rng.gaussian();
    row[j] = clamp_llr(scale * y);
  }
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoDamping: return "no-damping";
    case Ablation::FixedDamping: return "fixed-damping";
    case Ablation::NoGating: return "no-gating";
  }
  return "?";
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "no-damping") return Ablation::NoDamping;
  if (s == "fixed-damping") return Ablation::FixedDamping;
  if (s == "no-gating") return Ablation::NoGating;
  throw std::invalid_argument("unknown ablation: " + s);
}

TrainConfig resolve_config(const PolarCode& code, TrainConfig cfg) {
  if (cfg.batch == 0) cfg.batch = code.N <= 32 ? 3600 : 1800;
  if (cfg.lr0 == 0) cfg.lr0 = code.N <= 32 ? 0.99 : 2.5;
  if (cfg.iters < 1) throw std::invalid_argument("train: iters must be >= 1");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batches_per_epoch < 1)
    throw std::invalid_argument("train: batches-per-epoch must be >= 1");
  if (cfg.snrs_db.empty())
    throw std::invalid_argument("train: need at least one training SNR");
  if (cfg.batch < 1 || cfg.batch % (int)cfg.snrs_db.size() != 0)
    throw std::invalid_argument(
        "train: batch must be a positive multiple of the SNR count");
  if (cfg.val_frames < 1)
    throw std::invalid_argument("train: val-frames must be >= 1");
  if (!(cfg.lr0 > 0)) throw std::invalid_argument("train: lr0 must be > 0");
  if (cfg.decay < 0) throw std::invalid_argument("train: decay must be >= 0");
  if (cfg.variant == DecoderVariant::Wbp && cfg.ablation != Ablation::Full)
    throw std::invalid_argument(
        "train: ablations only apply to the hyper decoder");
  if (cfg.workers < 1) cfg.workers = 1;
  return cfg;
}

double lr_at(const TrainConfig& cfg, std::int64_t k) {
  return cfg.lr0 / (1.0 + (double)k * cfg.decay);
}

void gen_batch(const PolarCode& code, const TrainConfig& cfg, int epoch,
               int batch_idx, std::vector<double>& llrs) {
  const int B = cfg.batch, N = code.N;
  const int per = B / (int)cfg.snrs_db.size();
  const double rate = (double)code.K / (double)code.N;
  std::vector<NoiseSpec> specs;
  specs.reserve(cfg.snrs_db.size());
  for (double snr : cfg.snrs_db) specs.push_back(make_noise_spec(snr, rate));
  llrs.resize((size_t)B * N);
  for (int f = 0; f < B; ++f) {
    GaussianStream rng(derive_seed(
        cfg.seed, {kStreamTrainBatch, (std::uint64_t)epoch,
                   (std::uint64_t)batch_idx, (std::uint64_t)f}));
    zero_llr_row(llrs.data() + (size_t)f * N, N, specs[(size_t)(f / per)],
                 rng);
  }
}

double validate_ber(const PolarCode& code, const TrainConfig& cfg,
                    const HyperWeights& w) {
  const int N = code.N;
  const bool gating = cfg.ablation != Ablation::NoGating;
  const NoiseSpec spec =
      make_noise_spec(cfg.val_snr_db, (double)code.K / (double)code.N);
  const size_t nchunks = chunk_count((size_t)cfg.val_frames, kChunkFrames);
  std::vector<std::uint64_t> errs(nchunks, 0);
  parallel_chunks(
      (size_t)cfg.val_frames, kChunkFrames, cfg.workers,
      [&](size_t ci, size_t fb, size_t fe) {
        static thread_local std::vector<double> llr;
        llr.resize((size_t)N);
        std::uint64_t e = 0;
        for (size_t f = fb; f < fe; ++f) {
          GaussianStream rng(
              derive_seed(cfg.seed, {kStreamValidation, (std::uint64_t)f}));
          zero_llr_row(llr.data(), N, spec, rng);
          SoftResult r = cfg.variant == DecoderVariant::Hyper
                             ? hyper_decode(code, llr, w, cfg.kernel, gating)
                             : wbp_decode(code, llr, w.wbp, cfg.kernel);
          for (int j : code.info_pos)
            if (r.l1[(size_t)j] < 0.0) ++e;
        }
        errs[ci] = e;
      });
  std::uint64_t total = 0;
  for (std::uint64_t e : errs) total += e;
  return (double)total / ((double)cfg.val_frames * (double)code.K);
}

TrainResult train(const PolarCode& code, const TrainConfig& cfg_in,
                  const std::string& checkpoint_out,
                  const std::string& metrics_out) {
  const TrainConfig cfg = resolve_config(code, cfg_in);
  const int N = code.N, T = cfg.iters;
  const bool hyper = cfg.variant == DecoderVariant::Hyper;
  const bool gating = cfg.ablation != Ablation::NoGating;
  const bool train_c =
      hyper &&
      (cfg.ablation == Ablation::Full || cfg.ablation == Ablation::NoGating);

  HyperWeights w;
  if (hyper) {
    w = make_hyper_weights(code, T, cfg.seed);
    if (cfg.ablation == Ablation::NoDamping) w.c = 0.0;
    if (cfg.ablation == Ablation::FixedDamping) w.c = 0.5;
  } else {
    w.wbp = make_wbp_weights(code, T);
    w.f.clear();
    w.c = 1.0;
  }
  if (!cfg.init_ckpt.empty()) {
    Checkpoint ick = load_checkpoint(cfg.init_ckpt);
    validate_checkpoint(ick, code);
    if (ick.variant != cfg.variant)
      throw std::invalid_argument("train: init checkpoint variant mismatch");
    if ((int)ick.T != T)
      throw std::invalid_argument("train: init checkpoint iters mismatch");
    if (ick.kernel != cfg.kernel)
      throw std::invalid_argument("train: init checkpoint kernel mismatch");
    w = std::move(ick.w);
    if (hyper) {
      if (cfg.ablation == Ablation::NoDamping) w.c = 0.0;
      if (cfg.ablation == Ablation::FixedDamping) w.c = 0.5;
    }
  }
  const size_t ab_len = w.wbp.alpha.size();
  const size_t f_len = w.f.size();

  const size_t nchunks = chunk_count((size_t)cfg.batch, kChunkFrames);
  std::vector<HyperGrads> slots(nchunks);
  std::vector<double> slot_loss(nchunks, 0.0);
  HyperGrads total;
  std::vector<double> batch_llr;

  // Optimizer state (Adam when cfg.adaptive; untouched otherwise).
  std::vector<double> m_a, v_a, m_b, v_b, m_f, v_f;
  double m_c = 0.0, v_c = 0.0;
  std::int64_t adam_t = 0;
  if (cfg.adaptive) {
    m_a.assign(ab_len, 0.0);
    v_a.assign(ab_len, 0.0);
    m_b.assign(ab_len, 0.0);
    v_b.assign(ab_len, 0.0);
    m_f.assign(f_len, 0.0);
    v_f.assign(f_len, 0.0);
  }

  std::ofstream ms;
  if (!metrics_out.empty()) {
    ms.open(metrics_out, std::ios::trunc);
    if (!ms)
      throw std::runtime_error("train: cannot open metrics file " +
                               metrics_out);
    ms << "epoch,lr,mean_loss,val_snr_db,val_ber\n";
    ms.flush();
  }

  TrainResult res;
  HyperWeights best_w = w;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1, stale = 0;

  auto worker = [&](size_t ci, size_t fb, size_t fe) {
    static thread_local NeuralTrace trace;
    static thread_local HyperScratch hs;
    static thread_local std::vector<double> fl;
    static thread_local std::vector<std::uint8_t> u0;
    static thread_local WbpGrads wtmp;
    HyperGrads& gs = slots[ci];
    u0.assign((size_t)N, 0);
    if (!hyper) {
      wtmp.alpha.assign(ab_len, 0.0);
      wtmp.beta.assign(ab_len, 0.0);
    }
    const double* lp = batch_llr.data();
    double lsum = 0.0;
    for (size_t f = fb; f < fe; ++f) {
      fl.assign(lp + f * (size_t)N, lp + (f + 1) * (size_t)N);
      SoftResult r =
          hyper ? hyper_record(code, fl, w, cfg.kernel, gating, trace, hs)
                : wbp_record(code, fl, w.wbp, cfg.kernel, trace);
      lsum += bce_loss(r.o, u0);
      std::vector<double> dLdo = bce_loss_grad(r.o, u0);
      if (hyper)
        hyper_backward(code, w, cfg.kernel, gating, trace, dLdo, gs, hs);
      else
        wbp_backward(code, w.wbp, cfg.kernel, trace, dLdo, wtmp);
    }
    if (!hyper) {
      for (size_t i = 0; i < ab_len; ++i) {
        gs.alpha[i] += wtmp.alpha[i];
        gs.beta[i] += wtmp.beta[i];
      }
    }
    slot_loss[ci] = lsum;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int b = 0; b < cfg.batches_per_epoch; ++b) {
      gen_batch(code, cfg, epoch, b, batch_llr);
      for (size_t ci = 0; ci < nchunks; ++ci) zero_grads(slots[ci], ab_len, f_len);
      parallel_chunks((size_t)cfg.batch, kChunkFrames, cfg.workers, worker);

      zero_grads(total, ab_len, f_len);
      double loss_sum = 0.0;
      for (size_t ci = 0; ci < nchunks; ++ci) {
        const HyperGrads& s = slots[ci];
        for (size_t i = 0; i < ab_len; ++i) total.alpha[i] += s.alpha[i];
        for (size_t i = 0; i < ab_len; ++i) total.beta[i] += s.beta[i];
        for (size_t i = 0; i < f_len; ++i) total.f[i] += s.f[i];
        total.c += s.c;
        loss_sum += slot_loss[ci];
      }
      const double batch_loss = loss_sum / (double)cfg.batch;
      if (!std::isfinite(batch_loss)) {
        if (!checkpoint_out.empty())
          save_checkpoint(checkpoint_out + ".abort",
                          make_checkpoint(code, cfg.variant, cfg.kernel,
                                          gating, w));
        throw TrainAbort("train: non-finite loss at epoch " +
                         std::to_string(epoch) + " batch " +
                         std::to_string(b));
      }
      epoch_loss += batch_loss;

      const double inv = 1.0 / (double)cfg.batch;
      for (double& g : total.alpha) g *= inv;
      for (double& g : total.beta) g *= inv;
      for (double& g : total.f) g *= inv;
      total.c *= inv;

      std::vector<Block> blocks;
      blocks.push_back({w.wbp.alpha.data(), total.alpha.data(), m_a.data(),
                        v_a.data(), ab_len});
      blocks.push_back({w.wbp.beta.data(), total.beta.data(), m_b.data(),
                        v_b.data(), ab_len});
      if (hyper)
        blocks.push_back(
            {w.f.data(), total.f.data(), m_f.data(), v_f.data(), f_len});
      if (train_c) blocks.push_back({&w.c, &total.c, &m_c, &v_c, 1});

      double sq = 0.0;
      for (const Block& bl : blocks)
        for (size_t i = 0; i < bl.len; ++i) sq += bl.g[i] * bl.g[i];
      double clipf = 1.0;
      if (cfg.clip_norm > 0) {
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) clipf = cfg.clip_norm / norm;
      }
      const double lr = lr_at(cfg, epoch);

      if (!cfg.adaptive) {
        const double step = lr * clipf;
        for (const Block& bl : blocks)
          for (size_t i = 0; i < bl.len; ++i) bl.p[i] -= step * bl.g[i];
      } else {
        ++adam_t;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double bc1 = 1.0 - std::pow(b1, (double)adam_t);
        const double bc2 = 1.0 - std::pow(b2, (double)adam_t);
        for (const Block& bl : blocks) {
          for (size_t i = 0; i < bl.len; ++i) {
            const double g = clipf * bl.g[i];
            bl.m[i] = b1 * bl.m[i] + (1.0 - b1) * g;
            bl.v[i] = b2 * bl.v[i] + (1.0 - b2) * g * g;
            bl.p[i] -= lr * (bl.m[i] / bc1) /
                       (std::sqrt(bl.v[i] / bc2) + eps);
          }
        }
      }
      if (train_c) w.c = std::fmin(1.0, std::fmax(0.0, w.c));
    }

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr_at(cfg, epoch);
    st.mean_loss = epoch_loss / (double)cfg.batches_per_epoch;
    st.val_ber = validate_ber(code, cfg, w);
    res.history.push_back(st);
    if (ms.is_open()) {
      ms << st.epoch << ',' << csv_num(st.lr) << ',' << csv_num(st.mean_loss)
         << ',' << csv_num(cfg.val_snr_db) << ',' << csv_num(st.val_ber)
         << '\n';
      ms.flush();
    }
    if (!checkpoint_out.empty())
      save_checkpoint(checkpoint_out, make_checkpoint(code, cfg.variant,
                                                      cfg.kernel, gating, w));

    if (st.val_ber < best_val) {
      best_val = st.val_ber;
      best_epoch = epoch;
      best_w = w;
      stale = 0;
    } else if (++stale >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }

  res.best_val_ber = best_val;
  res.best_epoch = best_epoch;
  res.ckpt =
      make_checkpoint(code, cfg.variant, cfg.kernel, gating, best_w);
  if (!checkpoint_out.empty()) save_checkpoint(checkpoint_out, res.ckpt);
  return res;
}

}  // namespace polar
