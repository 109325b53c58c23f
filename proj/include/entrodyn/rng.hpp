#ifndef ENTRODYN_RNG_HPP
#define ENTRODYN_RNG_HPP

#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace entrodyn {

// Counter-based random numbers: every draw is a pure function of
// (master seed, substream ids, draw index), so replicates, players and
// iterations can be sampled in any order with identical results.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t id : ids) h = splitmix64(h ^ (id + 0x9e3779b97f4a7c15ULL));
  return h;
}

// uniform in [0, 1)
inline double to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace rng

// One logical stream of draws identified by a key; draws advance a counter.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids)
      : key_(rng::mix(seed, ids)) {}

  std::uint64_t next_u64() { return rng::splitmix64(key_ ^ counter_++); }
  double next_unit() { return rng::to_unit(next_u64()); }

  // uniform in [lo, hi)
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  int next_index(int n) {
    // unbiased enough for desk-scale n
    return static_cast<int>(next_unit() * n) % n;
  }

  double next_gaussian() {
    double u1 = next_unit(), u2 = next_unit();
    while (u1 <= 1e-300) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // standard normal conditioned on |v| <= bound_sigmas, by rejection
  double next_truncated_gaussian(double bound_sigmas) {
    for (int i = 0; i < 1000; ++i) {
      double v = next_gaussian();
      if (std::fabs(v) <= bound_sigmas) return v;
    }
    return 0.0;
  }

  // Gumbel(0, scale) shifted to zero mean (Euler-Mascheroni correction)
  double next_gumbel(double scale) {
    static constexpr double kEulerGamma = 0.57721566490153286060651209;
    double u = next_unit();
    while (u <= 1e-300) u = next_unit();
    return scale * (-std::log(-std::log(u)) - kEulerGamma);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace entrodyn

#endif  // ENTRODYN_RNG_HPP
