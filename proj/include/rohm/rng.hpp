#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace rohm {

// Counter-derived pseudo-random stream. Streams are identified by
// (seed, a, b); the derivation is the stable splitting function the
// capture pipeline relies on: parallel and serial capture must draw
// identical values for a given (campaign_seed, trace_index, purpose).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    RngStream() : state_(0) {}
    explicit RngStream(uint64_t seed) : state_(mix64(seed)) {}

    static RngStream derive(uint64_t seed, uint64_t a, uint64_t b = 0) {
        return RngStream(seed ^ mix64(a ^ mix64(b)));
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // uniform in [0, 1) with 53 bits of precision
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, bound) by rejection, exact for any bound
    uint64_t next_below(uint64_t bound) {
        if (bound <= 1)
            return 0;
        uint64_t mask = ~0ull >> __builtin_clzll(bound - 1 | 1);
        uint64_t v;
        do {
            v = next_u64() & mask;
        } while (v >= bound);
        return v;
    }

    uint8_t next_byte() { return uint8_t(next_u64() & 0xff); }
    bool next_bit() { return (next_u64() & 1) != 0; }

    // Box-Muller pair of independent standard normals. Always consumes
    // two uniforms so the stream position is data-independent.
    std::pair<double, double> next_gaussian_pair() {
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * M_PI * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

  private:
    uint64_t state_;
};

} // namespace rohm
