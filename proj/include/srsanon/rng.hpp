#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "srsanon/errors.hpp"

namespace srsanon {

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// A deterministic random substream keyed by (seed, label parts). Identical
// keys reproduce identical draws, independent of evaluation order elsewhere.
class KeyedStream {
public:
    explicit KeyedStream(std::uint64_t seed) : state_(0xcbf29ce484222325ULL) {
        mix(seed);
    }

    KeyedStream& mix(std::uint64_t v) {
        state_ = detail::fnv1a(state_, &v, sizeof(v));
        return *this;
    }

    KeyedStream& mix(const std::string& s) {
        state_ = detail::fnv1a(state_, s.data(), s.size());
        state_ = detail::fnv1a(state_, "\x1f", 1);  // separator, keys can't collide by concatenation
        return *this;
    }

    KeyedStream& mix(int v) { return mix(static_cast<std::uint64_t>(v)); }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF Laplace(0, b) draw; b = 0 yields exactly 0.
    double laplace(double scale) {
        if (scale < 0.0) throw ArgumentError("laplace scale must be nonnegative");
        double u = next_unit();
        if (u == 0.0) u = 0x1.0p-53;  // keep log argument positive
        u -= 0.5;
        if (scale == 0.0) return 0.0;
        const double s = (u > 0.0) - (u < 0.0);
        return -scale * s * std::log(1.0 - 2.0 * std::fabs(u));
    }

private:
    std::uint64_t state_;
};

}  // namespace srsanon
