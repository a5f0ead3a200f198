#ifndef MVB_CONFIG_HPP
#define MVB_CONFIG_HPP

#include "mvb/particle.hpp"
#include "mvb/sc_semigroup.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvb {

struct SolverSettings {
    double step = 1e-3;
    double horizon = 1.0;
};

struct SimulationSettings {
    int64_t n = 1000;
    int replicates = 1000;
    uint64_t seed = 1;
    double window = 0.0; // stationary read window T
};

/// One functional target (f, g, t, r).
struct Target {
    TestFunction f;
    TestFunction g;
    double t = 1.0;
    double r = 0.0;
};

struct NearBirthSettings {
    int clusters = 500;
    double probe = 0.01;
    int64_t n = 1000;
    int site = 0;
    double concentration_min = 0.95;
    double mass_factor = 10.0;
    double quantile = 0.99;
};

/// All parse/validation problems at once.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations);
    std::vector<std::string> violations;
};

struct ExperimentConfig {
    SiteSetPtr sites;
    MotionModel motion;
    BranchingMechanism mech;
    FiniteMeasure initial;
    SolverSettings solver;
    SimulationSettings sim;
    std::vector<Target> targets;
    ImmigrationSpec immigration;
    std::optional<InhomogeneousSCSpec> inhomogeneous;
    std::vector<std::array<double, 3>> triples; // (r,s,t) for the axiom check
    NearBirthSettings near_birth;
    std::vector<std::string> checks;

    /// The immigration intensity read as entrance-law data: kappa closed by
    /// kappa_rate, one atom per macroscopic cluster source.
    EntranceLawSpec entrance_spec() const;
    SCSemigroupSpec sc_spec() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

} // namespace mvb

#endif
