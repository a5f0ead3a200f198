#ifndef MVB_SC_SEMIGROUP_HPP
#define MVB_SC_SEMIGROUP_HPP

#include "mvb/cumulant.hpp"

#include <optional>
#include <vector>

namespace mvb {

/// One atom of the measure on entrance laws: weight c > 0 at the closed law eta.
struct EntranceAtom {
    double weight;
    PEntranceLaw law;
};

/// Infinitely divisible entrance-law data: a base entrance law kappa
/// (possibly zero) plus finitely many atoms (c_i, eta_i). Its log-Laplace
/// functional at horizon t is
///   S_t(kappa, f) + sum_i c_i (1 - e^{-S_t(eta_i, f)}).
struct EntranceLawSpec {
    PEntranceLaw kappa;
    std::vector<EntranceAtom> atoms;

    void validate() const;
};

/// Homogeneous immigration structure: entrance data over a fixed mechanism
/// and motion. Induces J_t(f) = int_0^t (-log L_{K_s}(f)) ds.
struct SCSemigroupSpec {
    EntranceLawSpec entrance;
    BranchingMechanism mech;
    MotionModel motion;
};

/// Infinitely divisible initial law I(eta, H) with finite atomic H:
/// -log L(f) = eta(f) + sum_j w_j (1 - e^{-nu_j(f)}).
struct ClosedInitialLaw {
    FiniteMeasure eta;
    std::vector<std::pair<double, FiniteMeasure>> atoms; // (w_j, nu_j)

    double log_laplace(const Eigen::VectorXd& f) const;
};

struct StepOpenAtom {
    double time; // member of T1; [r,t) membership
    EntranceLawSpec law;
};

struct StepClosedAtom {
    double time; // member of T2; (r,t] membership
    ClosedInitialLaw law;
};

struct RateInterval {
    double lo, hi, rate; // rate >= 0, lo <= hi
};

/// Diffuse part: piecewise-constant density against a shift-homogeneous
/// entrance-law family.
struct ContinuousPart {
    std::vector<RateInterval> intervals;
    EntranceLawSpec law;
};

/// Ingredients of an inhomogeneous immigration family: step atoms on T1
/// (left-closed) and T2 (right-closed) plus the diffuse part.
struct InhomogeneousSCSpec {
    std::vector<StepOpenAtom> step_open;
    std::vector<StepClosedAtom> step_closed;
    std::optional<ContinuousPart> continuous;

    void validate() const;
};

/// -log L_{K_t}(f) for the entrance-law data. t > 0.
double entrance_log_laplace(const EntranceLawSpec& spec, const BranchingMechanism& mech,
                            const MotionModel& motion, const TestFunction& f, double t,
                            double step);

/// Same functional at every grid time of a precomputed cumulant solution
/// (index 0 is the closed value at horizon 0).
std::vector<double> entrance_log_laplace_grid(const EntranceLawSpec& spec,
                                              const BranchingMechanism& mech,
                                              const MotionModel& motion,
                                              const CumulantSolution& sol);

/// J_t(f) = int_0^t (-log L_{K_s}(f)) ds, trapezoid on the solver grid.
double sc_log_laplace(const SCSemigroupSpec& spec, const TestFunction& f, double t, double step);

/// |J_{r+t}(f) - J_r(V_t f) - J_t(f)|.
double skew_identity_residual(const SCSemigroupSpec& spec, const TestFunction& f, double r,
                              double t, double step);

/// -log of the immigration transition Laplace functional: mu(V_t f) + J_t(f).
double transition_log_laplace(const FiniteMeasure& mu, const SCSemigroupSpec& spec,
                              const TestFunction& f, double t, double step);

/// -log L_{N_{r,t}}(f) assembled from the three ingredient families, with
/// exact half-open membership: [r,t) for T1 atoms, (r,t] for T2 atoms.
double inhomogeneous_log_laplace(const InhomogeneousSCSpec& spec, const BranchingMechanism& mech,
                                 const MotionModel& motion, const TestFunction& f, double r,
                                 double t, double step);

/// |J_{r,t}(f) - J_{r,s}(V_{s,t} f) - J_{s,t}(f)| for r <= s <= t.
double sc_axiom_residual(const InhomogeneousSCSpec& spec, const BranchingMechanism& mech,
                         const MotionModel& motion, const TestFunction& f, double r, double s,
                         double t, double step);

struct LongtimeResult {
    bool diverged = false;
    double value = 0.0;   // limit of J_t(f) when converged
    double horizon = 0.0; // quadrature horizon actually reached
};

/// lim_{t->oo} J_t(f), extending the quadrature until the increment over a
/// unit window drops below tol. Divergence is flagged once increments over
/// doubling windows fail to shrink geometrically (ratio >= 0.9) five times
/// in a row.
LongtimeResult longtime_decompose(const SCSemigroupSpec& spec, const TestFunction& f, double tol,
                                  double step);

/// Exponent of the occupation-time Laplace functional of the immigration
/// process: int_0^t [S_r(kappa,f,g) + sum_i c_i(1 - e^{-S_r(eta_i,f,g)})] dr.
double occupation_immigration_exponent(const EntranceLawSpec& spec, const BranchingMechanism& mech,
                                       const MotionModel& motion, const TestFunction& f,
                                       const TestFunction& g, double t, double step);

/// Numeric spot check that the induced K_t is a probability entrance law:
/// J_1 finite on the ladder f = lambda*1 and decreasing to 0 with lambda.
void spot_check_entrance(const SCSemigroupSpec& spec, double step);

} // namespace mvb

#endif
