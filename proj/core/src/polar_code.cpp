#include "polarhyper/polar_code.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace polar {

std::vector<double> bec_bhattacharyya(int n, double z0) {
  std::vector<double> z{z0};
  for (int level = 0; level < n; ++level) {
    std::vector<double> nz(z.size() * 2);
    for (size_t i = 0; i < z.size(); ++i) {
      nz[2 * i] = 2.0 * z[i] - z[i] * z[i];
      nz[2 * i + 1] = z[i] * z[i];
    }
    z.swap(nz);
  }
  return z;
}

std::vector<int> construct_frozen_set(int n, int k, double z0) {
  const int N = 1 << n;
  if (k < 0 || k > N) throw std::invalid_argument("k out of range");
  std::vector<double> z = bec_bhattacharyya(n, z0);
  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return a < b;
  });
  idx.resize(N - k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PolarCode make_code(int n, int k, std::vector<int> frozen_idx) {
  const int N = 1 << n;
  if ((int)frozen_idx.size() != N - k)
    throw std::invalid_argument("frozen set size must be N-K");
  PolarCode c;
  c.n = n;
  c.N = N;
  c.K = k;
  c.frozen.assign(N, 0);
  for (int j : frozen_idx) {
    if (j < 0 || j >= N) throw std::invalid_argument("frozen index out of range");
    if (c.frozen[(size_t)j]) throw std::invalid_argument("duplicate frozen index");
    c.frozen[(size_t)j] = 1;
  }
  c.info_pos.reserve(k);
  for (int j = 0; j < N; ++j)
    if (!c.frozen[(size_t)j]) c.info_pos.push_back(j);
  return c;
}

PolarCode construct_bhattacharyya(int n, int k, double z0) {
  return make_code(n, k, construct_frozen_set(n, k, z0));
}

PolarCode full_rate_code(int n) { return make_code(n, 1 << n, {}); }

std::vector<std::uint8_t> encode(const PolarCode& code,
                                 const std::vector<std::uint8_t>& u) {
  if ((int)u.size() != code.N) throw std::invalid_argument("u length != N");
  std::vector<std::uint8_t> x = u;
  for (int s = 0; s < code.n; ++s) {
    const int stride = code.N >> (s + 1);
    const int block = code.N >> s;
    for (int base = 0; base < code.N; base += block)
      for (int o = 0; o < stride; ++o)
        x[(size_t)(base + o)] ^= x[(size_t)(base + o + stride)];
  }
  return x;
}

std::vector<std::vector<std::uint8_t>> encode_trajectory(
    const PolarCode& code, const std::vector<std::uint8_t>& u) {
  std::vector<std::vector<std::uint8_t>> cols;
  cols.reserve((size_t)code.n + 1);
  std::vector<std::uint8_t> x = u;
  cols.push_back(x);
  for (int s = 0; s < code.n; ++s) {
    const int stride = code.N >> (s + 1);
    const int block = code.N >> s;
    for (int base = 0; base < code.N; base += block)
      for (int o = 0; o < stride; ++o)
        x[(size_t)(base + o)] ^= x[(size_t)(base + o + stride)];
    cols.push_back(x);
  }
  return cols;
}

std::vector<std::uint8_t> expand_info(const PolarCode& code,
                                      const std::vector<std::uint8_t>& info) {
  if ((int)info.size() != code.K) throw std::invalid_argument("info length != K");
  std::vector<std::uint8_t> u(code.N, 0);
  for (int i = 0; i < code.K; ++i) u[(size_t)code.info_pos[(size_t)i]] = info[(size_t)i] & 1;
  return u;
}

std::vector<int> load_frozen_indices(const std::string& path, int N, int K) {
  std::ifstream in(path);
  if (!in) throw CodeFileError("cannot open frozen-set file: " + path);
  std::vector<int> idx;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(line, &pos);
    } catch (const std::exception&) {
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": not an index");
    }
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\r')) ++pos;
    if (pos != line.size())
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": trailing junk");
    if (v < 0 || v >= N)
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": index out of range");
    if (!idx.empty() && v <= idx.back())
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": indices must ascend");
    idx.push_back((int)v);
  }
  if ((int)idx.size() != N - K)
    throw CodeFileError(path + ": expected " + std::to_string(N - K) +
                        " frozen indices, found " + std::to_string(idx.size()));
  return idx;
}

PolarCode load_code_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CodeFileError("cannot open code file: " + path);
  std::string line;
  int n = -1, k = -1;
  std::vector<int> idx;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    if (n < 0) {
      std::string nt, kt;
      if (!(ss >> nt >> n >> kt >> k) || nt != "n" || kt != "k")
        throw CodeFileError(path + ":" + std::to_string(lineno) +
                            ": expected header 'n <n> k <k>'");
      if (n < 1 || n > 20 || k < 0 || k > (1 << n))
        throw CodeFileError(path + ": bad code dimensions");
      continue;
    }
    long v;
    if (!(ss >> v))
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": not an index");
    if (v < 0 || v >= (1 << n))
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": index out of range");
    if (!idx.empty() && v <= idx.back())
      throw CodeFileError(path + ":" + std::to_string(lineno) + ": indices must ascend");
    idx.push_back((int)v);
  }
  if (n < 0) throw CodeFileError(path + ": missing header");
  if ((int)idx.size() != (1 << n) - k)
    throw CodeFileError(path + ": expected " + std::to_string((1 << n) - k) +
                        " frozen indices, found " + std::to_string(idx.size()));
  try {
    return make_code(n, k, std::move(idx));
  } catch (const std::invalid_argument& e) {
    throw CodeFileError(path + ": " + e.what());
  }
}

void save_code_file(const PolarCode& code, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CodeFileError("cannot write code file: " + path);
  out << "# polar code descriptor: frozen indices, ascending\n";
  out << "n " << code.n << " k " << code.K << "\n";
  for (int j = 0; j < code.N; ++j)
    if (code.frozen[(size_t)j]) out << j << "\n";
  if (!out) throw CodeFileError("write failed: " + path);
}

std::uint64_t frozen_hash(const PolarCode& code) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint8_t b : code.frozen) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace polar
