/* Polar code construction and encoding.
 * Codes are described by (n, K, frozen mask); the frozen set comes from the
 * Bhattacharyya recursion on a BEC proxy or from an external index file.
 * The encoder applies the F^{\otimes n} butterfly in natural order: stage s
 * pairs positions (j, j + N/2^{s+1}), exactly the wiring the BP factor graph
 * uses, so encoder output j feeds channel node (n+1, j) with no extra
 * permutation. */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace polar {

struct PolarCode {
  int n = 0;  // N = 2^n
  int N = 0;
  int K = 0;
  std::vector<std::uint8_t> frozen;  // size N, 1 = frozen
  std::vector<int> info_pos;         // ascending information indices

  bool is_frozen(int j) const { return frozen[(size_t)j] != 0; }
};

// Bhattacharyya parameters of the N synthetic channels (natural order),
// starting from z0 and applying Z- = 2Z - Z^2 / Z+ = Z^2 per level.
std::vector<double> bec_bhattacharyya(int n, double z0);

// N-K frozen indices (ascending): the largest-Z channels, ties toward the
// lower index.
std::vector<int> construct_frozen_set(int n, int k, double z0);

PolarCode make_code(int n, int k, std::vector<int> frozen_idx);
PolarCode construct_bhattacharyya(int n, int k, double z0 = 0.5);
PolarCode full_rate_code(int n);

// x = u F^{otimes n} over GF(2); u has length N (frozen positions zero for a
// valid codeword). The transform is an involution.
std::vector<std::uint8_t> encode(const PolarCode& code,
                                 const std::vector<std::uint8_t>& u);

// All n+1 columns of the encoding: column 0 is u, column n is x. Column i
// holds the bit values of the factor-graph nodes at stage i+1.
std::vector<std::vector<std::uint8_t>> encode_trajectory(
    const PolarCode& code, const std::vector<std::uint8_t>& u);

// Scatter K information bits onto the information positions (frozen = 0).
std::vector<std::uint8_t> expand_info(const PolarCode& code,
                                      const std::vector<std::uint8_t>& info);

struct CodeFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Frozen-set file: one zero-based index per line, strictly ascending; the
// count must equal N-K.
std::vector<int> load_frozen_indices(const std::string& path, int N, int K);

// Code descriptor: '#' comments, an "n <n> k <k>" header line, then the
// frozen indices in the frozen-set format.
PolarCode load_code_file(const std::string& path);
void save_code_file(const PolarCode& code, const std::string& path);

// FNV-1a over the frozen mask bytes; stored in checkpoints to pin the code.
std::uint64_t frozen_hash(const PolarCode& code);

}  // namespace polar
