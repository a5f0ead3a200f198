#ifndef MVB_PARTICLE_HPP
#define MVB_PARTICLE_HPP

#include "mvb/measure.hpp"
#include "mvb/mechanism.hpp"
#include "mvb/motion.hpp"
#include "mvb/rng.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mvb {

/// Macroscopic immigration source: fresh populations seeded from `seed`
/// arrive at Poisson rate `rate`.
struct ClusterAtom {
    double rate;
    FiniteMeasure seed;
};

/// Immigration intensity: a per-unit-time measure for single-particle
/// (infinitesimal) immigrants plus macroscopic cluster sources.
struct ImmigrationSpec {
    FiniteMeasure kappa_rate;
    std::vector<ClusterAtom> cluster_atoms;

    bool is_zero() const;
    static ImmigrationSpec none(SiteSetPtr sites);
};

/// Joint sample of the state at the horizon and the pathwise occupation
/// integral (exact between events: occupancy is piecewise constant).
struct OccupationSample {
    double value_f;    // X_t(f)
    double integral_g; // int_0^t X_s(g) ds
    FiniteMeasure final_state;
    uint64_t events = 0;
};

/// One sampled immigrant cluster: a single particle of mass 1/n started at
/// birth_site, recorded on a geometric time grid, retained only when alive
/// at the probe (= horizon).
struct ClusterEvent {
    double birth_time = 0.0;
    int birth_site = -1;
    std::vector<std::pair<double, FiniteMeasure>> path;
    int attempts = 0;
};

class ClusterRetryExhausted : public std::runtime_error {
public:
    explicit ClusterRetryExhausted(int attempts);
};

/// Branching particle approximation at scaling level n: particles of mass
/// 1/n move along the chain, branch into 0 or 2 at rate 2 c(x) n, and feel
/// the drift as extra death (b > 0) or extra binary birth (b < 0). Jump
/// atoms in the mechanism are rejected (analytic layer only). Returns the
/// empirical measure at the horizon.
FiniteMeasure simulate_superprocess(const BranchingMechanism& mech, const MotionModel& motion,
                                    const FiniteMeasure& mu0, double horizon, int64_t n,
                                    uint64_t seed);

/// Superprocess plus Poisson immigration: single immigrants at rate
/// n * kappa_rate(E) (site drawn from the normalized intensity) and
/// macroscopic clusters per atom.
FiniteMeasure simulate_immigration(const BranchingMechanism& mech, const MotionModel& motion,
                                   const ImmigrationSpec& imm, const FiniteMeasure& mu0,
                                   double horizon, int64_t n, uint64_t seed);

/// Joint (X_t(f), int_0^t X_s(g) ds) sample, with or without immigration.
OccupationSample occupation_sample(const BranchingMechanism& mech, const MotionModel& motion,
                                   const FiniteMeasure& mu0,
                                   const std::optional<ImmigrationSpec>& imm,
                                   const TestFunction& f, const TestFunction& g, double horizon,
                                   int64_t n, uint64_t seed);

/// Single-immigrant cluster conditioned on surviving to the probe time
/// (rejection with a retry cap; throws ClusterRetryExhausted past the cap).
ClusterEvent sample_cluster(const BranchingMechanism& mech, const MotionModel& motion,
                            int birth_site, double horizon, int64_t n, uint64_t seed,
                            int max_attempts = 10000);

/// Stationary read of the immigration process: run from the null measure
/// over a window of length T and report the terminal state. Requires a
/// strictly subcritical mechanism (min_x b(x) > 0).
FiniteMeasure simulate_stationary(const BranchingMechanism& mech, const MotionModel& motion,
                                  const ImmigrationSpec& imm, double window, int64_t n,
                                  uint64_t seed);

/// Replicate stream derivation: one master seed, one stream per replicate.
inline uint64_t replicate_seed(uint64_t master, uint64_t replicate) {
    return rng::mix(master, replicate);
}

} // namespace mvb

#endif
