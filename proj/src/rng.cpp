#include "mvb/rng.hpp"

#include <cmath>

namespace mvb::rng {

namespace {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr double kInv53 = 0x1.0p-53;

// Ziggurat tables for the standard exponential, 256 layers
// (Marsaglia-Tsang construction).
struct ZigTables {
    static constexpr double kTailStart = 7.697117470131487;
    static constexpr double kArea = 3.949659822581572e-3;

    double x[256]; // x[0] is the base pseudo-width area/f(tail)
    double f[256]; // f[i] = exp(-x[i]), f[0] = 1
    double w[256]; // x[i] * 2^-53
    uint64_t k[256];

    ZigTables() {
        const double two53 = 9007199254740992.0;
        x[255] = kTailStart;
        for (int i = 254; i >= 1; --i)
            x[i] = -std::log(kArea / x[i + 1] + std::exp(-x[i + 1]));
        x[0] = kArea * std::exp(kTailStart);
        f[0] = 1.0;
        for (int i = 1; i < 256; ++i) f[i] = std::exp(-x[i]);
        for (int i = 0; i < 256; ++i) w[i] = x[i] / two53;
        k[0] = static_cast<uint64_t>(two53 * kTailStart / x[0]);
        k[1] = 0;
        for (int i = 2; i < 256; ++i)
            k[i] = static_cast<uint64_t>(two53 * (x[i - 1] / x[i]));
    }
};

const ZigTables& tables() {
    static const ZigTables t;
    return t;
}

} // namespace

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 0x632be59bd9b4e019ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

Stream::Stream(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
    // all-zero state is invalid for xoshiro
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

uint64_t Stream::next_u64() {
    uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Stream::uniform() { return static_cast<double>(next_u64() >> 11) * kInv53; }

double Stream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * kInv53;
}

double Stream::exponential() {
    const ZigTables& t = tables();
    for (;;) {
        uint64_t u = next_u64();
        int i = static_cast<int>(u & 255);
        uint64_t jz = u >> 11;
        double x = static_cast<double>(jz) * t.w[i];
        if (jz < t.k[i]) return x;
        if (i == 0) return ZigTables::kTailStart - std::log(uniform_pos());
        double y = t.f[i] + uniform() * (t.f[i - 1] - t.f[i]);
        if (y < std::exp(-x)) return x;
    }
}

Stream Stream::substream(uint64_t index) const { return Stream(mix(seed_, index)); }

} // namespace mvb::rng
