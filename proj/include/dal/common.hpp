#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base error for everything raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration/schema problems (CLI maps these to exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Deterministic per-purpose RNG: mixes a base seed with a stream tag so
// independent draws (e.g. per-batch masks) do not share state.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  // splitmix64 scramble
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

// Argmax over a row of scores; ties resolve to the lowest index.
inline int argmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace dal
