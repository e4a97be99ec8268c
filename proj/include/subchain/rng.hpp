#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace subchain {

// All randomness flows from one master seed through named sub-streams, and
// inside a stream through per-index sub-seeds. Workers never share engine
// state, so results do not depend on evaluation order or thread count.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t stream_seed, std::uint64_t index);

// mt19937_64 with hand-specified output mappings (53-bit uniform, Box-Muller
// normal) so seeded runs reproduce bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();

  std::size_t index(std::size_t n) {  // uniform in {0, …, n-1}
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // uniform direction on the unit sphere
  std::vector<double> unit_vector(std::size_t dim);
  // uniform in the closed ball of given radius
  std::vector<double> in_ball(std::size_t dim, double radius);

 private:
  std::mt19937_64 eng_;
};

}  // namespace subchain
