#ifndef MVB_CUMULANT_HPP
#define MVB_CUMULANT_HPP

#include "mvb/measure.hpp"
#include "mvb/mechanism.hpp"
#include "mvb/motion.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace mvb {

/// Entrance law for the underlying chain. On a finite site set every such
/// law is closed: kappa_t = mu0 P_t for some nonnegative seed mu0.
struct PEntranceLaw {
    FiniteMeasure mu0;

    static PEntranceLaw closed(FiniteMeasure seed) { return PEntranceLaw{std::move(seed)}; }
    bool is_zero() const { return mu0.total() == 0.0; }
};

/// Grid solution of the cumulant equation dv/dt = Qv - phi(.,v) (+ g).
struct CumulantSolution {
    std::vector<double> grid;            // uniform, grid[0] = 0, grid.back() = horizon
    std::vector<Eigen::VectorXd> values; // values[k] = v at grid[k]; values[0] = f
    double step = 0.0;                   // actual uniform step used
    int clamp_warnings = 0;              // undershoots in (1e-12, 1e-8] clamped to 0

    int points() const { return static_cast<int>(grid.size()); }
    const Eigen::VectorXd& final_values() const { return values.back(); }
};

/// Thrown when the integrator produces a non-finite value (supercritical
/// blow-up); carries the first bad grid time.
class CumulantDivergence : public std::runtime_error {
public:
    explicit CumulantDivergence(double t);
    double time;
};

/// V_t f on a uniform grid over [0, horizon]. Classical fourth-order
/// Runge-Kutta; the stated contract tolerances assume step <= 1e-3.
CumulantSolution solve_cumulant(const BranchingMechanism& mech, const MotionModel& motion,
                                const TestFunction& f, double horizon, double step);

/// Occupation-time cumulant: dv/dt = Qv - phi(.,v) + g, v_0 = f.
CumulantSolution solve_cumulant_occupation(const BranchingMechanism& mech,
                                           const MotionModel& motion, const TestFunction& f,
                                           const TestFunction& g, double horizon, double step);

/// S_t(kappa, f) = kappa_t(f) - int_0^t kappa_{t-s}(phi(., V_s f)) ds,
/// composite trapezoid on the solver grid.
double s_functional(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                    const MotionModel& motion, const TestFunction& f, double t, double step);

/// S_t(kappa, f, g) = kappa_t(f) + int_0^t kappa_s(g) ds
///                    - int_0^t kappa_{t-s}(phi(., u_s)) ds,
/// with u the occupation-time cumulant.
double s_functional_occupation(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                               const MotionModel& motion, const TestFunction& f,
                               const TestFunction& g, double t, double step);

/// S at every grid time of a precomputed solution (index 0 is time 0, where
/// the closed law gives mu0(f)).
std::vector<double> s_functional_grid(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                                      const MotionModel& motion, const CumulantSolution& sol);

/// Occupation variant on the grid of a solve_cumulant_occupation solution.
std::vector<double> s_functional_occupation_grid(const PEntranceLaw& kappa,
                                                 const BranchingMechanism& mech,
                                                 const MotionModel& motion, const TestFunction& g,
                                                 const CumulantSolution& sol);

/// First-moment flow E X_t = mu e^{t(Q - diag(b))}; only the drift part of
/// the mechanism enters.
FiniteMeasure moment_flow(const BranchingMechanism& mech, const MotionModel& motion,
                          const FiniteMeasure& mu, double t);

/// Composite trapezoid of uniformly spaced samples.
double trapezoid(const std::vector<double>& samples, double h);

/// CSV dump: header "time,v_<label>...", one row per grid point.
void write_csv(const CumulantSolution& sol, const SiteSet& sites, std::ostream& out);

} // namespace mvb

#endif
