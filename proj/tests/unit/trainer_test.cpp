#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "polarhyper/channel.hpp"
#include "polarhyper/rng.hpp"
#include "polarhyper/trainer.hpp"

using namespace polar;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
}

TrainConfig tiny_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.variant = DecoderVariant::Hyper;
  cfg.kernel = Kernel::MinSum;
  cfg.iters = 2;
  cfg.batch = 60;
  cfg.snrs_db = {2.0, 4.0};
  cfg.lr0 = 0.5;
  cfg.batches_per_epoch = 2;
  cfg.epochs = 3;
  cfg.seed = seed;
  cfg.val_snr_db = 4.0;
  cfg.val_frames = 128;
  return cfg;
}

}  // namespace

TEST_CASE("ablation names round trip") {
  for (Ablation a : {Ablation::Full, Ablation::NoDamping,
                     Ablation::FixedDamping, Ablation::NoGating})
    CHECK(parse_ablation(ablation_name(a)) == a);
  CHECK_THROWS_AS(parse_ablation("nope"), std::invalid_argument);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.lr0 = 0.99;
  cfg.decay = 1e-4;
  CHECK(lr_at(cfg, 0) == 0.99);
  CHECK(lr_at(cfg, 100) == doctest::Approx(0.9801980198019802).epsilon(1e-15));
  cfg.decay = 0.0;
  CHECK(lr_at(cfg, 1000000) == 0.99);
}

TEST_CASE("config resolution and validation") {
  PolarCode c32 = construct_bhattacharyya(5, 16);
  PolarCode c64 = construct_bhattacharyya(6, 32);
  TrainConfig def;
  TrainConfig r32 = resolve_config(c32, def);
  CHECK(r32.batch == 3600);
  CHECK(r32.lr0 == 0.99);
  TrainConfig r64 = resolve_config(c64, def);
  CHECK(r64.batch == 1800);
  CHECK(r64.lr0 == 2.5);

  TrainConfig bad = def;
  bad.batch = 7;  // not a multiple of the 6 default SNRs
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.snrs_db.clear();
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.epochs = 0;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.iters = 0;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.lr0 = -1;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.decay = -1e-5;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.val_frames = 0;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad = def;
  bad.variant = DecoderVariant::Wbp;
  bad.ablation = Ablation::NoDamping;
  CHECK_THROWS_AS(resolve_config(c32, bad), std::invalid_argument);
  bad.ablation = Ablation::Full;
  CHECK_NOTHROW(resolve_config(c32, bad));
  bad = def;
  bad.workers = -4;
  CHECK(resolve_config(c32, bad).workers == 1);
}

TEST_CASE("batch generation: shape, split, per-frame seeding") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(5);
  cfg = resolve_config(c, cfg);
  std::vector<double> a, b;
  gen_batch(c, cfg, 1, 2, a);
  REQUIRE(a.size() == (size_t)cfg.batch * c.N);
  gen_batch(c, cfg, 1, 2, b);
  CHECK(a == b);  // regeneration is exact
  gen_batch(c, cfg, 1, 3, b);
  CHECK(a != b);
  gen_batch(c, cfg, 2, 2, b);
  CHECK(a != b);

  // frame f belongs to snrs_db[f / (batch / #snrs)], zero codeword, and is
  // reproducible straight from its own seed
  const int per = cfg.batch / (int)cfg.snrs_db.size();
  const double rate = (double)c.K / c.N;
  for (int f : {0, per - 1, per, cfg.batch - 1}) {
    NoiseSpec spec = make_noise_spec(cfg.snrs_db[(size_t)(f / per)], rate);
    GaussianStream rng(derive_seed(
        cfg.seed, {kStreamTrainBatch, 1, 2, (std::uint64_t)f}));
    const double scale = 2.0 / (spec.sigma * spec.sigma);
    for (int j = 0; j < c.N; ++j) {
      double y = 1.0 + spec.sigma * rng.gaussian();
      CHECK(a[(size_t)f * c.N + j] == clamp_llr(scale * y));
    }
  }
}

TEST_CASE("short training run: files, history, best-epoch checkpoint") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(3);
  TrainResult res = train(c, cfg, "tr_test.ckpt", "tr_test.csv");

  REQUIRE(res.history.size() == 3);
  double best = 1e9;
  for (const EpochStats& st : res.history) {
    CHECK(std::isfinite(st.mean_loss));
    CHECK(st.mean_loss > 0.0);
    CHECK(st.val_ber >= 0.0);
    CHECK(st.val_ber <= 1.0);
    best = std::fmin(best, st.val_ber);
  }
  CHECK(res.best_val_ber == best);
  CHECK(res.best_epoch >= 0);
  CHECK(res.history[(size_t)res.best_epoch].val_ber == best);
  CHECK(res.history[0].lr == cfg.lr0);

  // metrics file: header + one row per epoch
  std::ifstream ms("tr_test.csv");
  REQUIRE(ms.good());
  std::string line;
  REQUIRE(std::getline(ms, line));
  CHECK(line == "epoch,lr,mean_loss,val_snr_db,val_ber");
  int rows = 0;
  while (std::getline(ms, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  // checkpoint on disk holds the best-validation weights
  Checkpoint ck = load_checkpoint("tr_test.ckpt");
  CHECK_NOTHROW(validate_checkpoint(ck, c));
  CHECK(ck.variant == DecoderVariant::Hyper);
  CHECK(ck.kernel == Kernel::MinSum);
  CHECK(ck.T == 2);
  CHECK(ck.gating == true);
  CHECK(ck.w.wbp.alpha == res.ckpt.w.wbp.alpha);
  CHECK(ck.w.f == res.ckpt.w.f);
  CHECK(ck.w.c == res.ckpt.w.c);

  // the reported best is reproducible from the restored weights
  TrainConfig vcfg = resolve_config(c, cfg);
  CHECK(validate_ber(c, vcfg, res.ckpt.w) == res.best_val_ber);

  std::remove("tr_test.ckpt");
  std::remove("tr_test.csv");
}

TEST_CASE("training twice with one seed is byte identical") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(11);
  cfg.epochs = 2;
  train(c, cfg, "tr_a.ckpt", "tr_a.csv");
  train(c, cfg, "tr_b.ckpt", "tr_b.csv");
  CHECK(slurp("tr_a.ckpt") == slurp("tr_b.ckpt"));
  CHECK(slurp("tr_a.csv") == slurp("tr_b.csv"));
  std::remove("tr_a.ckpt");
  std::remove("tr_b.ckpt");
  std::remove("tr_a.csv");
  std::remove("tr_b.csv");
}

TEST_CASE("fixed-damping ablations pin c, no-gating records the flag") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(7);
  cfg.epochs = 2;

  cfg.ablation = Ablation::NoDamping;
  TrainResult nd = train(c, cfg, "", "");
  CHECK(nd.ckpt.w.c == 0.0);
  CHECK(nd.ckpt.gating == true);

  cfg.ablation = Ablation::FixedDamping;
  TrainResult fd = train(c, cfg, "", "");
  CHECK(fd.ckpt.w.c == 0.5);

  cfg.ablation = Ablation::NoGating;
  TrainResult ng = train(c, cfg, "", "");
  CHECK(ng.ckpt.gating == false);

  cfg.ablation = Ablation::Full;
  TrainResult fu = train(c, cfg, "", "");
  CHECK(fu.ckpt.gating == true);
  // full training moves c off its random start
  HyperWeights w0 = make_hyper_weights(c, cfg.iters, cfg.seed);
  CHECK(fu.ckpt.w.c != w0.c);
}

TEST_CASE("plain weighted-bp training works and stays in two segments") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(13);
  cfg.variant = DecoderVariant::Wbp;
  cfg.epochs = 2;
  TrainResult res = train(c, cfg, "tr_wbp.ckpt", "");
  CHECK(res.ckpt.variant == DecoderVariant::Wbp);
  CHECK(res.ckpt.w.f.empty());
  bool moved = false;
  for (double v : res.ckpt.w.wbp.alpha) moved = moved || v != 1.0;
  CHECK(moved);
  Checkpoint ck = load_checkpoint("tr_wbp.ckpt");
  CHECK(ck.variant == DecoderVariant::Wbp);
  CHECK(ck.w.f.empty());
  std::remove("tr_wbp.ckpt");
}

TEST_CASE("adaptive optimizer also trains and is deterministic") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(17);
  cfg.adaptive = true;
  cfg.lr0 = 0.01;
  cfg.epochs = 2;
  TrainResult a = train(c, cfg, "", "");
  TrainResult b = train(c, cfg, "", "");
  CHECK(a.ckpt.w.wbp.alpha == b.ckpt.w.wbp.alpha);
  CHECK(a.ckpt.w.f == b.ckpt.w.f);
  CHECK(a.ckpt.w.c == b.ckpt.w.c);
  bool moved = false;
  for (size_t i = 0; i < a.ckpt.w.wbp.alpha.size(); ++i)
    moved = moved || a.ckpt.w.wbp.alpha[i] != 1.0;
  CHECK(moved);
}

TEST_CASE("validation is worker-count independent") {
  PolarCode c = construct_bhattacharyya(4, 8);
  TrainConfig cfg = tiny_config(19);
  cfg.val_frames = 300;
  cfg = resolve_config(c, cfg);
  HyperWeights w = make_hyper_weights(c, cfg.iters, 19);
  double v1 = validate_ber(c, cfg, w);
  TrainConfig cfg3 = cfg;
  cfg3.workers = 3;
  double v3 = validate_ber(c, cfg3, w);
  CHECK(v1 == v3);
  CHECK(v1 >= 0.0);
  CHECK(v1 <= 1.0);
}

TEST_CASE("warm start from a checkpoint") {
  PolarCode c = construct_bhattacharyya(3, 4);
  TrainConfig cfg = tiny_config(11);
  cfg.epochs = 2;
  TrainResult base = train(c, cfg, "tr_init.ckpt", "");

  // resuming loads the trained weights, not the seeded init
  TrainConfig rs = tiny_config(11);
  rs.epochs = 1;
  rs.lr0 = 1e-9;
  rs.init_ckpt = "tr_init.ckpt";
  TrainResult res = train(c, rs, "", "");
  for (size_t i = 0; i < res.ckpt.w.wbp.alpha.size(); i += 7)
    CHECK(res.ckpt.w.wbp.alpha[i] ==
          doctest::Approx(base.ckpt.w.wbp.alpha[i]).epsilon(1e-6));
  CHECK(res.ckpt.w.c == doctest::Approx(base.ckpt.w.c).epsilon(1e-6));

  // reruns stay byte identical
  TrainConfig r2 = tiny_config(11);
  r2.epochs = 1;
  r2.init_ckpt = "tr_init.ckpt";
  train(c, r2, "tr_w1.ckpt", "");
  train(c, r2, "tr_w2.ckpt", "");
  CHECK(slurp("tr_w1.ckpt") == slurp("tr_w2.ckpt"));

  // fixed-c ablations re-pin c after loading
  TrainConfig fd = tiny_config(11);
  fd.epochs = 1;
  fd.init_ckpt = "tr_init.ckpt";
  fd.ablation = Ablation::FixedDamping;
  CHECK(train(c, fd, "", "").ckpt.w.c == 0.5);

  // mismatches are rejected
  TrainConfig bad = tiny_config(11);
  bad.epochs = 1;
  bad.init_ckpt = "tr_init.ckpt";
  bad.iters = 3;
  CHECK_THROWS_AS(train(c, bad, "", ""), std::invalid_argument);

  bad = tiny_config(11);
  bad.epochs = 1;
  bad.init_ckpt = "tr_init.ckpt";
  bad.kernel = Kernel::Exact;
  CHECK_THROWS_AS(train(c, bad, "", ""), std::invalid_argument);

  bad = tiny_config(11);
  bad.epochs = 1;
  bad.init_ckpt = "tr_init.ckpt";
  bad.variant = DecoderVariant::Wbp;
  CHECK_THROWS_AS(train(c, bad, "", ""), std::invalid_argument);

  PolarCode c16 = construct_bhattacharyya(4, 8);
  bad = tiny_config(11);
  bad.epochs = 1;
  bad.init_ckpt = "tr_init.ckpt";
  CHECK_THROWS_AS(train(c16, bad, "", ""), CheckpointError);
  bad.init_ckpt = "tr_missing.ckpt";
  CHECK_THROWS_AS(train(c, bad, "", ""), CheckpointError);

  std::remove("tr_init.ckpt");
  std::remove("tr_w1.ckpt");
  std::remove("tr_w2.ckpt");
}
