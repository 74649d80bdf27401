#include "polarhyper/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace polar {

namespace {

constexpr char kMagic[8] = {'P', 'H', 'C', 'P', '0', '0', '0', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
  os.write((const char*)b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
  os.write((const char*)b, 8);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read((char*)b, 4)) throw CheckpointError("checkpoint: truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (std::uint32_t)b[i] << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read((char*)b, 8)) throw CheckpointError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= (std::uint64_t)b[i] << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_segment(std::ostream& os, const std::string& name,
                 const std::vector<std::uint64_t>& dims,
                 const double* data) {
  os.put((char)(unsigned char)name.size());
  os.write(name.data(), (std::streamsize)name.size());
  put_u32(os, (std::uint32_t)dims.size());
  std::uint64_t count = 1;
  for (std::uint64_t d : dims) {
    put_u64(os, d);
    count *= d;
  }
  for (std::uint64_t i = 0; i < count; ++i) put_f64(os, data[i]);
}

struct Segment {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

Segment get_segment(std::istream& is) {
  Segment s;
  int len = is.get();
  if (len < 0) throw CheckpointError("checkpoint: truncated");
  s.name.resize((size_t)len);
  if (!is.read(s.name.data(), len)) throw CheckpointError("checkpoint: truncated");
  std::uint32_t nd = get_u32(is);
  if (nd > 8) throw CheckpointError("checkpoint: implausible segment rank");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < nd; ++i) {
    std::uint64_t d = get_u64(is);
    if (d == 0 || d > (1u << 24)) throw CheckpointError("checkpoint: bad dim");
    s.dims.push_back(d);
    count *= d;
    if (count > (1u << 28)) throw CheckpointError("checkpoint: segment too large");
  }
  s.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) s.data[i] = get_f64(is);
  if (!is) throw CheckpointError("checkpoint: truncated");
  return s;
}

}  // namespace

Checkpoint make_checkpoint(const PolarCode& code, DecoderVariant variant,
                           Kernel kernel, bool gating, const HyperWeights& w) {
  Checkpoint ck;
  ck.n = (std::uint32_t)code.n;
  ck.K = (std::uint32_t)code.K;
  ck.frozen_hash = frozen_hash(code);
  ck.variant = variant;
  ck.kernel = kernel;
  ck.gating = gating;
  ck.T = (std::uint32_t)w.wbp.T;
  ck.w = w;
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path);
  os.write(kMagic, 8);
  put_u32(os, ck.n);
  put_u32(os, ck.K);
  put_u64(os, ck.frozen_hash);
  os.put((char)ck.variant);
  os.put((char)(ck.kernel == Kernel::MinSum ? 1 : 0));
  os.put((char)(ck.gating ? 1 : 0));
  os.put(0);
  put_u32(os, ck.T);
  const bool hyper = ck.variant == DecoderVariant::Hyper;
  put_u32(os, hyper ? 5u : 2u);
  const WbpWeights& wb = ck.w.wbp;
  std::vector<std::uint64_t> shape = {(std::uint64_t)wb.T, (std::uint64_t)wb.n,
                                      (std::uint64_t)wb.N};
  put_segment(os, "alpha", shape, wb.alpha.data());
  put_segment(os, "beta", shape, wb.beta.data());
  if (hyper) {
    MlpSpec fs = hyper_f_spec();
    std::vector<double> widths(fs.widths.begin(), fs.widths.end());
    put_segment(os, "f_widths", {(std::uint64_t)widths.size()}, widths.data());
    put_segment(os, "f_weights", {(std::uint64_t)ck.w.f.size()},
                ck.w.f.data());
    put_segment(os, "c", {1}, &ck.w.c);
  }
  if (!os) throw CheckpointError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("checkpoint: bad magic in " + path);
  Checkpoint ck;
  ck.n = get_u32(is);
  ck.K = get_u32(is);
  ck.frozen_hash = get_u64(is);
  int variant = is.get(), kernel = is.get(), gating = is.get(), pad = is.get();
  if (pad != 0 || variant < 0 || variant > 1 || kernel < 0 || kernel > 1 ||
      gating < 0 || gating > 1)
    throw CheckpointError("checkpoint: bad header flags");
  ck.variant = (DecoderVariant)variant;
  ck.kernel = kernel ? Kernel::MinSum : Kernel::Exact;
  ck.gating = gating != 0;
  ck.T = get_u32(is);
  if (ck.n == 0 || ck.n > 20 || ck.T == 0 || ck.T > 1000)
    throw CheckpointError("checkpoint: implausible n or T");
  std::uint32_t nseg = get_u32(is);
  const std::uint32_t expect = ck.variant == DecoderVariant::Hyper ? 5u : 2u;
  if (nseg != expect) throw CheckpointError("checkpoint: wrong segment count");

  const std::uint64_t N = 1ull << ck.n;
  auto expect_shape = [&](const Segment& s,
                          const std::vector<std::uint64_t>& dims) {
    if (s.dims != dims)
      throw CheckpointError("checkpoint: segment " + s.name + " has wrong shape");
  };
  Segment alpha = get_segment(is);
  if (alpha.name != "alpha") throw CheckpointError("checkpoint: expected alpha");
  expect_shape(alpha, {ck.T, (std::uint64_t)ck.n, N});
  Segment beta = get_segment(is);
  if (beta.name != "beta") throw CheckpointError("checkpoint: expected beta");
  expect_shape(beta, {ck.T, (std::uint64_t)ck.n, N});
  ck.w.wbp.T = (int)ck.T;
  ck.w.wbp.n = (int)ck.n;
  ck.w.wbp.N = (int)N;
  ck.w.wbp.alpha = std::move(alpha.data);
  ck.w.wbp.beta = std::move(beta.data);
  ck.w.c = 1.0;
  if (ck.variant == DecoderVariant::Hyper) {
    MlpSpec fs = hyper_f_spec();
    Segment widths = get_segment(is);
    if (widths.name != "f_widths")
      throw CheckpointError("checkpoint: expected f_widths");
    expect_shape(widths, {(std::uint64_t)fs.widths.size()});
    for (size_t i = 0; i < fs.widths.size(); ++i)
      if (widths.data[i] != (double)fs.widths[i])
        throw CheckpointError("checkpoint: unsupported f architecture");
    Segment fw = get_segment(is);
    if (fw.name != "f_weights")
      throw CheckpointError("checkpoint: expected f_weights");
    expect_shape(fw, {(std::uint64_t)fs.param_count()});
    ck.w.f = std::move(fw.data);
    Segment c = get_segment(is);
    if (c.name != "c") throw CheckpointError("checkpoint: expected c");
    expect_shape(c, {1});
    ck.w.c = c.data[0];
    if (!(ck.w.c >= 0.0 && ck.w.c <= 1.0))
      throw CheckpointError("checkpoint: damping outside [0,1]");
  }
  // exactly at EOF?
  is.peek();
  if (!is.eof()) throw CheckpointError("checkpoint: trailing bytes in " + path);
  return ck;
}

void validate_checkpoint(const Checkpoint& ck, const PolarCode& code) {
  if ((int)ck.n != code.n || (int)ck.K != code.K ||
      ck.frozen_hash != frozen_hash(code))
    throw CheckpointError("checkpoint does not match the code (n/K/frozen set)");
}

}  // namespace polar
