#include "subchain/rng.hpp"

#include <cmath>

namespace subchain {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t stream_seed, std::uint64_t index) {
  return splitmix64(stream_seed + 0x632be59bd9b4e019ULL * (index + 1));
}

double Rng::normal() {
  // Box-Muller; two uniforms per draw, no cached second value.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

std::vector<double> Rng::unit_vector(std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0.0;
  do {
    n = 0.0;
    for (auto& x : v) {
      x = normal();
      n += x * x;
    }
  } while (n == 0.0);
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

std::vector<double> Rng::in_ball(std::size_t dim, double radius) {
  std::vector<double> v = unit_vector(dim);
  const double r =
      radius * std::pow(uniform(), 1.0 / static_cast<double>(dim));
  for (auto& x : v) x *= r;
  return v;
}

}  // namespace subchain
