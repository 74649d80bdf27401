/* Seeded, versioned random streams. Every stochastic component derives an
 * independent stream from (master seed, role words) so results are
 * reproducible byte for byte regardless of worker count. Gaussians come
 * from Box-Muller on top of mt19937_64 ("bm64-v1"): the standard pins the
 * engine's output sequence, and the hand-rolled transform avoids the
 * implementation-defined std::normal_distribution. */
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace polar {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream ids: hash-chain the role words onto the master seed ("stream-v1").
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = splitmix64(master ^ 0x706f6c61722d7631ull);
  for (std::uint64_t w : words) h = splitmix64(h ^ w);
  return h;
}

// Role tags for derive_seed so distinct uses can never collide.
enum : std::uint64_t {
  kStreamTrainBatch = 0x545241494e424154ull,
  kStreamValidation = 0x56414c4944415445ull,
  kStreamEval = 0x4556414c46524d45ull,
  kStreamInit = 0x494e495457454948ull,
};

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {  // [0, 1)
    return (eng_() >> 11) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int bit() { return (int)(eng_() >> 63); }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = ((eng_() >> 11) + 1) * 0x1p-53;  // (0, 1]
    double u2 = (eng_() >> 11) * 0x1p-53;        // [0, 1)
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586477 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace polar
