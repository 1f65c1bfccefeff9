#pragma once

#include <cmath>
#include <cstdint>

namespace ula {

// Counter-free reproducible RNG. The standard library distributions are
// implementation-defined, so sampling here is spelled out explicitly: the
// same (seed, stream) pair produces the same values on every platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with state seeded through splitmix64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  // Derived stream: disjoint with overwhelming probability, reproducible.
  // Streams are indexed, so ensembles can hand one to each chain.
  static RngStream derive(std::uint64_t master, std::uint64_t stream_index) {
    std::uint64_t sm = master;
    std::uint64_t mixed = splitmix64(sm) ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
    return RngStream(mixed);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0,1); never returns 0 or 1 exactly.
  double uniform() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Uniform on (-1,1).
  double uniform_sym() { return 2.0 * uniform() - 1.0; }

  // Standard normal via a 128-layer ziggurat. One u64 covers layer index,
  // sign, and magnitude on the fast path.
  double normal() {
    for (;;) {
      const std::uint64_t u = next_u64();
      const int i = static_cast<int>(u & 127u);
      const bool neg = (u >> 7) & 1u;
      const std::uint64_t uz = u >> 12;  // 52 bits
      const ZigguratTables& z = ziggurat();
      if (uz < z.kn[i]) {
        const double x = static_cast<double>(uz) * z.wn[i];
        return neg ? -x : x;
      }
      if (i == 0) {  // tail beyond r
        double xx, yy;
        do {
          xx = -std::log(uniform()) / z.r;
          yy = -std::log(uniform());
        } while (yy + yy < xx * xx);
        const double x = z.r + xx;
        return neg ? -x : x;
      }
      const double x = static_cast<double>(uz) * z.wn[i];
      if (z.fn[i] + uniform() * (z.fn[i - 1] - z.fn[i]) < std::exp(-0.5 * x * x))
        return neg ? -x : x;
    }
  }

  // Gamma(shape, 1) by Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  struct ZigguratTables {
    double r;
    std::uint64_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() {
      // Marsaglia-Tsang layer constants for 128 strips, scaled to 52 bits.
      const double m = 4503599627370496.0;  // 2^52
      double dn = 3.442619855899;
      const double vn = 9.91256303526217e-3;
      r = dn;
      double tn = dn;
      const double q = vn / std::exp(-0.5 * dn * dn);
      kn[0] = static_cast<std::uint64_t>((dn / q) * m);
      kn[1] = 0;
      wn[0] = q / m;
      wn[127] = dn / m;
      fn[0] = 1.0;
      fn[127] = std::exp(-0.5 * dn * dn);
      for (int i = 126; i >= 1; --i) {
        dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
        kn[i + 1] = static_cast<std::uint64_t>((dn / tn) * m);
        tn = dn;
        fn[i] = std::exp(-0.5 * dn * dn);
        wn[i] = dn / m;
      }
    }
  };

  static const ZigguratTables& ziggurat() {
    static const ZigguratTables tables;
    return tables;
  }

  std::uint64_t s_[4];
};

}  // namespace ula
