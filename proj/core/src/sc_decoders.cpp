#include "polarhyper/sc_decoders.hpp"

#include <algorithm>
#include <stdexcept>

namespace polar {

namespace {

void sc_rec(const PolarCode& c, Kernel k, int depth, int pos, double* a,
            std::uint8_t* b, std::vector<std::uint8_t>& u) {
  const int M = c.N >> depth;
  if (M == 1) {
    std::uint8_t bit = 0;
    if (!c.is_frozen(pos)) bit = a[0] < 0.0 ? 1 : 0;
    u[pos] = bit;
    b[0] = bit;
    return;
  }
  const int h = M >> 1;
  double* ca = a + M;
  for (int i = 0; i < h; ++i) ca[i] = g_apply(k, a[i], a[i + h]);
  sc_rec(c, k, depth + 1, pos, ca, b, u);
  for (int i = 0; i < h; ++i)
    ca[i] = b[i] ? a[i + h] - a[i] : a[i + h] + a[i];
  sc_rec(c, k, depth + 1, pos + h, ca, b + h, u);
  for (int i = 0; i < h; ++i) b[i] ^= b[i + h];
}

}  // namespace

ScResult sc_decode(const PolarCode& code, const std::vector<double>& llr,
                   Kernel kernel) {
  if ((int)llr.size() != code.N)
    throw std::invalid_argument("llr length must equal N");
  std::vector<double> atree((size_t)2 * code.N);
  std::copy(llr.begin(), llr.end(), atree.begin());
  ScResult res;
  res.u_hat.assign((size_t)code.N, 0);
  res.x_hat.assign((size_t)code.N, 0);
  sc_rec(code, kernel, 0, 0, atree.data(), res.x_hat.data(), res.u_hat);
  return res;
}

namespace {

struct SclPath {
  std::vector<double> atree;        // 2N flat LLR scratch
  std::vector<std::uint8_t> xtree;  // N partial sums
  std::vector<std::uint8_t> u;      // N decisions
  double pm = 0.0;
};

struct Candidate {
  double pm;
  int path;
  std::uint8_t bit;
};

void scl_leaf(const PolarCode& c, int pos, int aoff,
              std::vector<SclPath>& paths, int list_size) {
  if (c.is_frozen(pos)) {
    for (auto& p : paths) {
      double lam = p.atree[aoff];
      if (lam < 0.0) p.pm += -lam;
      p.u[pos] = 0;
      p.xtree[pos] = 0;
    }
    return;
  }
  std::vector<Candidate> cand;
  cand.reserve(2 * paths.size());
  for (int pi = 0; pi < (int)paths.size(); ++pi) {
    double lam = paths[pi].atree[aoff];
    cand.push_back({paths[pi].pm + std::max(-lam, 0.0), pi, 0});
    cand.push_back({paths[pi].pm + std::max(lam, 0.0), pi, 1});
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Candidate& a, const Candidate& b) { return a.pm < b.pm; });
  const int keep = std::min((int)cand.size(), list_size);
  std::vector<SclPath> next;
  next.reserve(keep);
  for (int i = 0; i < keep; ++i) {
    next.push_back(paths[cand[i].path]);
    next.back().pm = cand[i].pm;
    next.back().u[pos] = cand[i].bit;
    next.back().xtree[pos] = cand[i].bit;
  }
  paths = std::move(next);
}

void scl_rec(const PolarCode& c, Kernel k, int depth, int pos, int aoff,
             std::vector<SclPath>& paths, int list_size) {
  const int M = c.N >> depth;
  if (M == 1) {
    scl_leaf(c, pos, aoff, paths, list_size);
    return;
  }
  const int h = M >> 1;
  const int coff = aoff + M;
  for (auto& p : paths)
    for (int i = 0; i < h; ++i)
      p.atree[coff + i] = g_apply(k, p.atree[aoff + i], p.atree[aoff + i + h]);
  scl_rec(c, k, depth + 1, pos, coff, paths, list_size);
  for (auto& p : paths)
    for (int i = 0; i < h; ++i) {
      double a = p.atree[aoff + i], b = p.atree[aoff + i + h];
      p.atree[coff + i] = p.xtree[pos + i] ? b - a : b + a;
    }
  scl_rec(c, k, depth + 1, pos + h, coff, paths, list_size);
  for (auto& p : paths)
    for (int i = 0; i < h; ++i) p.xtree[pos + i] ^= p.xtree[pos + i + h];
}

}  // namespace

SclResult scl_decode(const PolarCode& code, const std::vector<double>& llr,
                     int list_size, Kernel kernel) {
  if (list_size < 1) throw std::invalid_argument("list size must be >= 1");
  if ((int)llr.size() != code.N)
    throw std::invalid_argument("llr length must equal N");
  std::vector<SclPath> paths(1);
  paths[0].atree.assign((size_t)2 * code.N, 0.0);
  std::copy(llr.begin(), llr.end(), paths[0].atree.begin());
  paths[0].xtree.assign((size_t)code.N, 0);
  paths[0].u.assign((size_t)code.N, 0);
  scl_rec(code, kernel, 0, 0, 0, paths, list_size);
  int best = 0;
  for (int i = 1; i < (int)paths.size(); ++i)
    if (paths[i].pm < paths[best].pm) best = i;
  return {std::move(paths[best].u), paths[best].pm};
}

}  // namespace polar
