#include "polarhyper/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "polarhyper/bp_decoder.hpp"
#include "polarhyper/channel.hpp"
#include "polarhyper/neural_decoders.hpp"
#include "polarhyper/parallel.hpp"
#include "polarhyper/rng.hpp"
#include "polarhyper/sc_decoders.hpp"

namespace polar {

namespace {

constexpr std::uint64_t kBlockFrames = 256;
constexpr size_t kChunkFrames = 64;
constexpr double kBerFloor = 1e-8;   // plot floor for zero-error points
constexpr double kLnFloor = 1e-12;   // keeps -ln(ber) finite in the table

std::uint64_t snr_word(double snr_db) {
  std::uint64_t w;
  std::memcpy(&w, &snr_db, sizeof w);
  return w;
}

std::string num(double v, const char* fmt = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Frame counters for one 64-frame chunk.
struct ChunkCount {
  std::uint64_t bits = 0, frames = 0;
};

}  // namespace

const char* decoder_kind_name(DecoderKind k) {
  switch (k) {
    case DecoderKind::BpExact: return "bp-exact";
    case DecoderKind::BpMinSum: return "bp-minsum";
    case DecoderKind::Wbp: return "wbp";
    case DecoderKind::Hyper: return "hyper";
    case DecoderKind::Sc: return "sc";
    case DecoderKind::Scl: return "scl";
  }
  return "?";
}

DecoderKind parse_decoder_kind(const std::string& s) {
  if (s == "bp-exact") return DecoderKind::BpExact;
  if (s == "bp-minsum") return DecoderKind::BpMinSum;
  if (s == "wbp") return DecoderKind::Wbp;
  if (s == "hyper") return DecoderKind::Hyper;
  if (s == "sc") return DecoderKind::Sc;
  if (s == "scl") return DecoderKind::Scl;
  throw std::invalid_argument("unknown decoder: " + s);
}

std::vector<double> parse_snr_spec(const std::string& s) {
  double lo = 0, hi = 0, step = 1;
  std::vector<double> parts;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ':')) {
    size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad SNR spec: " + s);
    }
    if (pos != tok.size()) throw std::invalid_argument("bad SNR spec: " + s);
    parts.push_back(v);
  }
  if (parts.empty() || parts.size() > 3)
    throw std::invalid_argument("bad SNR spec: " + s);
  lo = parts[0];
  hi = parts.size() > 1 ? parts[1] : parts[0];
  if (parts.size() > 2) step = parts[2];
  if (step <= 0 || hi < lo) throw std::invalid_argument("bad SNR spec: " + s);
  std::vector<double> out;
  const int count = (int)std::floor((hi - lo) / step + 1e-9) + 1;
  for (int i = 0; i < count; ++i) out.push_back(lo + i * step);
  return out;
}

std::vector<EvalRecord> evaluate(const PolarCode& code, const DecoderSpec& dec,
                                 const EvalOptions& opt,
                                 std::ostream* progress) {
  const int N = code.N, K = code.K;
  if (opt.snrs_db.empty())
    throw std::invalid_argument("evaluate: no SNR points");
  if (opt.min_frames > opt.max_frames || opt.max_frames == 0)
    throw std::invalid_argument("evaluate: bad frame bounds");
  const bool learned =
      dec.kind == DecoderKind::Wbp || dec.kind == DecoderKind::Hyper;
  if (learned) {
    validate_checkpoint(dec.ckpt, code);
    const DecoderVariant want = dec.kind == DecoderKind::Wbp
                                    ? DecoderVariant::Wbp
                                    : DecoderVariant::Hyper;
    if (dec.ckpt.variant != want)
      throw std::invalid_argument("evaluate: checkpoint variant mismatch");
    if (dec.ckpt.T < 1)
      throw std::invalid_argument("evaluate: checkpoint has no iterations");
  }
  if (dec.kind == DecoderKind::Scl && dec.list_size < 1)
    throw std::invalid_argument("evaluate: list size must be >= 1");
  if ((dec.kind == DecoderKind::BpExact || dec.kind == DecoderKind::BpMinSum) &&
      dec.iters < 1)
    throw std::invalid_argument("evaluate: iterations must be >= 1");

  const double rate = (double)K / (double)N;
  std::vector<EvalRecord> recs;
  recs.reserve(opt.snrs_db.size());

  for (double snr : opt.snrs_db) {
    const NoiseSpec spec = make_noise_spec(snr, rate);
    const std::uint64_t sw = snr_word(snr);
    std::uint64_t frames = 0, bit_errors = 0, frame_errors = 0;

    std::vector<ChunkCount> counts(chunk_count(kBlockFrames, kChunkFrames));
    while (true) {
      const std::uint64_t want =
          std::min<std::uint64_t>(kBlockFrames, opt.max_frames - frames);
      const std::uint64_t base = frames;
      const size_t nchunks = chunk_count((size_t)want, kChunkFrames);
      for (size_t ci = 0; ci < nchunks; ++ci) counts[ci] = ChunkCount{};

      parallel_chunks(
          (size_t)want, kChunkFrames, opt.workers,
          [&](size_t ci, size_t fb, size_t fe) {
            static thread_local std::vector<std::uint8_t> info;
            ChunkCount cc;
            for (size_t k = fb; k < fe; ++k) {
              const std::uint64_t frame = base + k;
              GaussianStream rng(
                  derive_seed(opt.seed, {kStreamEval, sw, frame}));
              info.resize((size_t)K);
              for (int i = 0; i < K; ++i)
                info[(size_t)i] = (std::uint8_t)rng.bit();
              if (opt.zero_codeword)
                std::fill(info.begin(), info.end(), (std::uint8_t)0);
              std::vector<std::uint8_t> u = expand_info(code, info);
              std::vector<double> s = modulate(encode(code, u));
              add_noise(s, spec, rng);
              std::vector<double> llr = channel_llr(s, spec);

              std::uint64_t errs = 0;
              switch (dec.kind) {
                case DecoderKind::BpExact:
                case DecoderKind::BpMinSum: {
                  const Kernel kn = dec.kind == DecoderKind::BpExact
                                        ? Kernel::Exact
                                        : Kernel::MinSum;
                  BpResult r = bp_decode(code, llr, dec.iters, kn);
                  for (int j : code.info_pos)
                    errs += r.u_hat[(size_t)j] != u[(size_t)j];
                  break;
                }
                case DecoderKind::Wbp: {
                  SoftResult r =
                      wbp_decode(code, llr, dec.ckpt.w.wbp, dec.ckpt.kernel);
                  for (int j : code.info_pos)
                    errs += (r.l1[(size_t)j] < 0.0 ? 1 : 0) != u[(size_t)j];
                  break;
                }
                case DecoderKind::Hyper: {
                  SoftResult r = hyper_decode(code, llr, dec.ckpt.w,
                                              dec.ckpt.kernel,
                                              dec.ckpt.gating);
                  for (int j : code.info_pos)
                    errs += (r.l1[(size_t)j] < 0.0 ? 1 : 0) != u[(size_t)j];
                  break;
                }
                case DecoderKind::Sc: {
                  ScResult r = sc_decode(code, llr);
                  for (int j : code.info_pos)
                    errs += r.u_hat[(size_t)j] != u[(size_t)j];
                  break;
                }
                case DecoderKind::Scl: {
                  SclResult r = scl_decode(code, llr, dec.list_size);
                  for (int j : code.info_pos)
                    errs += r.u_hat[(size_t)j] != u[(size_t)j];
                  break;
                }
              }
              cc.bits += errs;
              cc.frames += errs != 0;
            }
            counts[ci] = cc;
          });

      for (size_t ci = 0; ci < nchunks; ++ci) {
        bit_errors += counts[ci].bits;
        frame_errors += counts[ci].frames;
      }
      frames += want;
      if (frames >= opt.min_frames &&
          (bit_errors >= opt.target_errors || frames >= opt.max_frames))
        break;
    }

    EvalRecord rec;
    rec.snr_db = snr;
    rec.frames = frames;
    rec.bit_errors = bit_errors;
    rec.info_bits = frames * (std::uint64_t)K;
    rec.frame_errors = frame_errors;
    rec.ber = (double)bit_errors / (double)rec.info_bits;
    rec.fer = (double)frame_errors / (double)frames;
    recs.push_back(rec);
    if (progress) {
      *progress << decoder_kind_name(dec.kind) << " snr=" << num(snr, "%g")
                << " frames=" << rec.frames << " ber=" << num(rec.ber, "%.4g")
                << " fer=" << num(rec.fer, "%.4g") << std::endl;
    }
  }
  return recs;
}

void write_results_csv(const std::string& path,
                       const std::vector<EvalRecord>& recs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "snr_db,frames,bit_errors,info_bits,frame_errors,ber,fer\n";
  for (const EvalRecord& r : recs) {
    os << num(r.snr_db, "%g") << ',' << r.frames << ',' << r.bit_errors << ','
       << r.info_bits << ',' << r.frame_errors << ',' << num(r.ber) << ','
       << num(r.fer) << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

std::vector<EvalRecord> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) ||
      line != "snr_db,frames,bit_errors,info_bits,frame_errors,ber,fer")
    throw std::runtime_error("bad results header in " + path);
  std::vector<EvalRecord> recs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7)
      throw std::runtime_error("bad results row in " + path);
    EvalRecord r;
    try {
      r.snr_db = std::stod(cells[0]);
      r.frames = std::stoull(cells[1]);
      r.bit_errors = std::stoull(cells[2]);
      r.info_bits = std::stoull(cells[3]);
      r.frame_errors = std::stoull(cells[4]);
      r.ber = std::stod(cells[5]);
      r.fer = std::stod(cells[6]);
    } catch (const std::exception&) {
      throw std::runtime_error("bad results row in " + path);
    }
    recs.push_back(r);
  }
  return recs;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_ber_plot_svg(const std::string& path,
                        const std::vector<PlotSeries>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  constexpr int kNColors = 8;
  const double W = 800, H = 560;
  const double ml = 72, mr = 28, mt = 28, mb = 56;
  const double pw = W - ml - mr, ph = H - mt - mb;

  double xmin = 0, xmax = 1;
  bool have = false, clipped = false;
  double bmax = kBerFloor;
  for (const PlotSeries& s : series)
    for (const EvalRecord& r : s.recs) {
      if (!have) {
        xmin = xmax = r.snr_db;
        have = true;
      }
      xmin = std::min(xmin, r.snr_db);
      xmax = std::max(xmax, r.snr_db);
      if (r.ber <= kBerFloor) clipped = true;
      bmax = std::max(bmax, r.ber);
    }
  if (!have) {
    xmin = 0;
    xmax = 1;
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const int dec_hi = (int)std::ceil(std::log10(bmax));
  const int dec_lo = -8;
  const double ymax = dec_hi, ymin = dec_lo;  // log10 space

  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double ber) {
    const double l = std::log10(std::max(ber, kBerFloor));
    return mt + (ymax - l) / (ymax - ymin) * ph;
  };

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
     << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H
     << "\" fill=\"white\"/>\n";

  // gridlines + y tick labels, one per decade
  for (int d = dec_hi; d >= dec_lo; --d) {
    const double y = py(std::pow(10.0, d));
    os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw
       << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  // x ticks at the union of data points
  std::vector<double> xt;
  for (const PlotSeries& s : series)
    for (const EvalRecord& r : s.recs) xt.push_back(r.snr_db);
  std::sort(xt.begin(), xt.end());
  xt.erase(std::unique(xt.begin(), xt.end()), xt.end());
  for (double x : xt) {
    const double X = px(x);
    os << "<line x1=\"" << X << "\" y1=\"" << mt + ph << "\" x2=\"" << X
       << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << X << "\" y=\"" << mt + ph + 20
       << "\" text-anchor=\"middle\">" << num(x, "%g") << "</text>\n";
  }
  // frame
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  // axis titles
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 14
     << "\" text-anchor=\"middle\">Eb/N0 (dB)</text>\n";
  os << "<text x=\"18\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
     << ")\">BER</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* col = kColors[si % kNColors];
    const PlotSeries& s = series[si];
    if (!s.recs.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << col
         << "\" stroke-width=\"2\" points=\"";
      for (const EvalRecord& r : s.recs)
        os << px(r.snr_db) << ',' << py(r.ber) << ' ';
      os << "\"/>\n";
      for (const EvalRecord& r : s.recs)
        os << "<circle cx=\"" << px(r.snr_db) << "\" cy=\"" << py(r.ber)
           << "\" r=\"3.5\" fill=\"" << col << "\"/>\n";
    }
  }

  // legend, top-right inside the frame
  const double lx = ml + pw - 230, ly0 = mt + 14;
  double ly = ly0;
  for (size_t si = 0; si < series.size(); ++si) {
    const char* col = kColors[si % kNColors];
    os << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 28
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << lx + 34 << "\" y=\"" << ly << "\">"
       << xml_escape(series[si].label) << "</text>\n";
    ly += 18;
  }
  if (clipped) {
    os << "<text x=\"" << lx << "\" y=\"" << ly
       << "\" fill=\"#555555\">zero-error points drawn at 1e-8</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw std::runtime_error("write failed for " + path);
}

std::vector<AblationRow> ablation_suite(const PolarCode& code,
                                        const AblationOptions& opt,
                                        std::ostream* progress) {
  static const Ablation kOrder[] = {Ablation::NoDamping,
                                    Ablation::FixedDamping,
                                    Ablation::NoGating, Ablation::Full};
  EvalOptions ev = opt.eval;
  if (ev.snrs_db.empty()) ev.snrs_db = {1, 2, 3, 4, 5};

  std::vector<AblationRow> rows;
  for (Ablation a : kOrder) {
    TrainConfig tc = opt.train;
    tc.variant = DecoderVariant::Hyper;
    tc.ablation = a;
    const TrainConfig rtc = resolve_config(code, tc);

    std::string ck_path;
    if (!opt.ckpt_dir.empty())
      ck_path = opt.ckpt_dir + "/hyper-" + ablation_name(a) + ".ckpt";

    Checkpoint ck;
    bool loaded = false;
    if (!ck_path.empty() && std::filesystem::exists(ck_path)) {
      try {
        ck = load_checkpoint(ck_path);
        validate_checkpoint(ck, code);
        loaded = ck.variant == DecoderVariant::Hyper &&
                 ck.kernel == rtc.kernel &&
                 ck.gating == (a != Ablation::NoGating) &&
                 (int)ck.T == rtc.iters;
      } catch (const CheckpointError&) {
        loaded = false;
      }
      if (progress) {
        *progress << "ablation " << ablation_name(a) << ": "
                  << (loaded ? "reusing " : "incompatible checkpoint, retraining ")
                  << ck_path << std::endl;
      }
    }
    if (!loaded) {
      if (progress)
        *progress << "ablation " << ablation_name(a) << ": training"
                  << std::endl;
      TrainResult tr =
          train(code, rtc, ck_path,
                ck_path.empty() ? std::string() : ck_path + ".metrics.csv");
      ck = tr.ckpt;
    }

    DecoderSpec ds;
    ds.kind = DecoderKind::Hyper;
    ds.ckpt = ck;
    AblationRow row;
    row.ablation = a;
    row.ckpt = std::move(ck);
    row.recs = evaluate(code, ds, ev, progress);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "ablation";
  if (!rows.empty())
    for (const EvalRecord& r : rows[0].recs)
      os << ",snr_" << num(r.snr_db, "%g");
  os << '\n';
  for (const AblationRow& row : rows) {
    os << ablation_name(row.ablation);
    for (const EvalRecord& r : row.recs)
      os << ',' << num(-std::log(std::max(r.ber, kLnFloor)), "%.6g");
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace polar
