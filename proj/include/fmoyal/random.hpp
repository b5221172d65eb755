#pragma once

// Seeded draws. The uniform deviate is built from the raw 64-bit output
// rather than std::uniform_real_distribution, whose algorithm is
// implementation-defined; this keeps sampled inputs identical across
// standard libraries.

#include <cstdint>
#include <random>
#include <vector>

#include "fmoyal/io.hpp"
#include "fmoyal/types.hpp"

namespace fmoyal {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = kDefaultSeed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Entries uniform in [-1, 1] + i[-1, 1].
  ComplexMatrix complex_matrix(std::size_t n) {
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = {uniform(-1, 1), uniform(-1, 1)};
    }
    return m;
  }

  /// B^dagger B + shift I, Hermitian positive definite.
  ComplexMatrix positive_matrix(std::size_t n, double shift = 1.0) {
    const ComplexMatrix b = complex_matrix(n);
    return b.adjoint() * b + shift * ComplexMatrix::Identity(n, n);
  }

  /// Kernel triple with all six coordinates uniform in [-r, r].
  io::Triple triple(double r = 1.0) {
    io::Triple t;
    t.x1 = {uniform(-r, r), uniform(-r, r)};
    t.x2 = {uniform(-r, r), uniform(-r, r)};
    t.x = {uniform(-r, r), uniform(-r, r)};
    return t;
  }

  std::vector<io::Triple> triples(std::size_t count, double r = 1.0) {
    std::vector<io::Triple> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(triple(r));
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace fmoyal
