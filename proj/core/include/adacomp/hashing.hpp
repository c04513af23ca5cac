#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace adacomp {

std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::string hex64(std::uint64_t v);

// Uniform value in [0, 1) derived from a seed and a key. Stable across
// platforms and independent of call order.
double keyed_uniform(std::uint64_t seed, std::string_view key);

// Small deterministic generator (splitmix64 stream). Distribution mapping
// is done here rather than through <random> so sequences are identical on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform();                           // [0, 1)
  std::uint64_t below(std::uint64_t bound);   // [0, bound), bound > 0
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace adacomp
