#ifndef MVB_RNG_HPP
#define MVB_RNG_HPP

#include <cstdint>

namespace mvb::rng {

/// splitmix64 finalizer; the basis for counter-style stream derivation.
uint64_t mix(uint64_t a, uint64_t b);

/// xoshiro256++ with a ziggurat exponential sampler. One stream per
/// replicate; derive substreams with mix() so results do not depend on
/// scheduling.
class Stream {
public:
    explicit Stream(uint64_t seed);

    uint64_t next_u64();

    /// uniform on [0,1)
    double uniform();
    /// uniform on (0,1]
    double uniform_pos();
    /// standard exponential, mean 1
    double exponential();
    /// true with probability p
    bool bernoulli(double p) { return uniform() < p; }

    /// derived stream for a sub-task (cluster, attempt, ...)
    Stream substream(uint64_t index) const;

private:
    uint64_t state_[4];
    uint64_t seed_;
};

} // namespace mvb::rng

#endif
