#include "mvb/sc_semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvb {

namespace {

double effective_step(double horizon, double step) {
    return std::min(step, horizon / 2.0);
}

// Integral over [a,b] of the piecewise-linear interpolant of samples K at
// spacing h (K[k] is the value at k*h). Exact per cell.
double integral_on_interval(const std::vector<double>& k, double h, double a, double b) {
    if (b <= a) return 0.0;
    int n = static_cast<int>(k.size()) - 1;
    auto value_at = [&](double x) {
        double idx = x / h;
        int lo = std::clamp(static_cast<int>(std::floor(idx)), 0, n);
        if (lo == n) return k[n];
        double frac = idx - lo;
        return k[lo] + frac * (k[lo + 1] - k[lo]);
    };
    int first_full = static_cast<int>(std::ceil(a / h - 1e-12));
    int last_full = static_cast<int>(std::floor(b / h + 1e-12));
    first_full = std::clamp(first_full, 0, n);
    last_full = std::clamp(last_full, 0, n);
    if (first_full > last_full) {
        // both endpoints inside one cell
        return (b - a) * 0.5 * (value_at(a) + value_at(b));
    }
    double acc = 0.0;
    double ta = first_full * h;
    double tb = last_full * h;
    if (a < ta) acc += (ta - a) * 0.5 * (value_at(a) + k[first_full]);
    for (int j = first_full; j < last_full; ++j) acc += h * 0.5 * (k[j] + k[j + 1]);
    if (b > tb) acc += (b - tb) * 0.5 * (k[last_full] + value_at(b));
    return acc;
}

} // namespace

void EntranceLawSpec::validate() const {
    double total_weight = 0.0;
    for (const auto& atom : atoms) {
        if (!(atom.weight > 0.0))
            throw std::invalid_argument("EntranceLawSpec: atom weights must be > 0");
        if (!std::isfinite(atom.law.mu0.total()))
            throw std::invalid_argument("EntranceLawSpec: atom seed has non-finite mass");
        total_weight += atom.weight;
    }
    if (!std::isfinite(total_weight))
        throw std::invalid_argument("EntranceLawSpec: atom weights must sum to a finite value");
}

double ClosedInitialLaw::log_laplace(const Eigen::VectorXd& f) const {
    double v = eta.masses().dot(f);
    for (const auto& [w, nu] : atoms) v += w * (1.0 - std::exp(-nu.masses().dot(f)));
    return v;
}

void InhomogeneousSCSpec::validate() const {
    for (const auto& a : step_open) {
        if (!std::isfinite(a.time)) throw std::invalid_argument("step_open: non-finite time");
        a.law.validate();
    }
    for (const auto& a : step_closed) {
        if (!std::isfinite(a.time)) throw std::invalid_argument("step_closed: non-finite time");
        for (const auto& [w, nu] : a.law.atoms) {
            (void)nu;
            if (!(w >= 0.0)) throw std::invalid_argument("step_closed: negative atom weight");
        }
    }
    if (continuous) {
        for (const auto& iv : continuous->intervals) {
            if (!(iv.rate >= 0.0))
                throw std::invalid_argument("continuous: rates must be >= 0");
            if (!(iv.lo <= iv.hi))
                throw std::invalid_argument("continuous: interval endpoints out of order");
        }
        continuous->law.validate();
    }
}

std::vector<double> entrance_log_laplace_grid(const EntranceLawSpec& spec,
                                              const BranchingMechanism& mech,
                                              const MotionModel& motion,
                                              const CumulantSolution& sol) {
    int n = sol.points();
    std::vector<double> out(n, 0.0);
    if (!spec.kappa.is_zero()) {
        auto s = s_functional_grid(spec.kappa, mech, motion, sol);
        for (int k = 0; k < n; ++k) out[k] += s[k];
    }
    for (const auto& atom : spec.atoms) {
        auto s = s_functional_grid(atom.law, mech, motion, sol);
        for (int k = 0; k < n; ++k) out[k] += atom.weight * -std::expm1(-s[k]);
    }
    return out;
}

double entrance_log_laplace(const EntranceLawSpec& spec, const BranchingMechanism& mech,
                            const MotionModel& motion, const TestFunction& f, double t,
                            double step) {
    if (!(t > 0.0)) throw std::invalid_argument("entrance_log_laplace: t must be > 0");
    auto sol = solve_cumulant(mech, motion, f, t, effective_step(t, step));
    return entrance_log_laplace_grid(spec, mech, motion, sol).back();
}

double sc_log_laplace(const SCSemigroupSpec& spec, const TestFunction& f, double t, double step) {
    if (t < 0.0) throw std::invalid_argument("sc_log_laplace: t must be >= 0");
    if (t == 0.0) return 0.0;
    auto sol = solve_cumulant(spec.mech, spec.motion, f, t, effective_step(t, step));
    auto k = entrance_log_laplace_grid(spec.entrance, spec.mech, spec.motion, sol);
    return trapezoid(k, sol.step);
}

double skew_identity_residual(const SCSemigroupSpec& spec, const TestFunction& f, double r,
                              double t, double step) {
    if (r < 0.0 || t < 0.0)
        throw std::invalid_argument("skew_identity_residual: r, t must be >= 0");
    double whole = sc_log_laplace(spec, f, r + t, step);
    TestFunction vt = f;
    if (t > 0.0) {
        auto sol = solve_cumulant(spec.mech, spec.motion, f, t, effective_step(t, step));
        vt = TestFunction(f.sites(), sol.final_values());
    }
    double part = sc_log_laplace(spec, vt, r, step) + sc_log_laplace(spec, f, t, step);
    return std::abs(whole - part);
}

double transition_log_laplace(const FiniteMeasure& mu, const SCSemigroupSpec& spec,
                              const TestFunction& f, double t, double step) {
    if (t < 0.0) throw std::invalid_argument("transition_log_laplace: t must be >= 0");
    if (t == 0.0) return integrate(mu, f);
    auto sol = solve_cumulant(spec.mech, spec.motion, f, t, effective_step(t, step));
    auto k = entrance_log_laplace_grid(spec.entrance, spec.mech, spec.motion, sol);
    return mu.masses().dot(sol.final_values()) + trapezoid(k, sol.step);
}

double inhomogeneous_log_laplace(const InhomogeneousSCSpec& spec, const BranchingMechanism& mech,
                                 const MotionModel& motion, const TestFunction& f, double r,
                                 double t, double step) {
    if (!(r <= t)) throw std::invalid_argument("inhomogeneous_log_laplace: need r <= t");
    double total = 0.0;

    for (const auto& a : spec.step_open) {
        if (a.time >= r && a.time < t)
            total += entrance_log_laplace(a.law, mech, motion, f, t - a.time, step);
    }

    for (const auto& a : spec.step_closed) {
        if (a.time > r && a.time <= t) {
            double w = t - a.time;
            if (w == 0.0) {
                total += a.law.log_laplace(f.values());
            } else {
                auto sol = solve_cumulant(mech, motion, f, w, effective_step(w, step));
                total += a.law.log_laplace(sol.final_values());
            }
        }
    }

    if (spec.continuous && t > r) {
        double horizon = t - r;
        auto sol = solve_cumulant(mech, motion, f, horizon, effective_step(horizon, step));
        auto k = entrance_log_laplace_grid(spec.continuous->law, mech, motion, sol);
        for (const auto& iv : spec.continuous->intervals) {
            double s_lo = std::max(r, iv.lo);
            double s_hi = std::min(t, iv.hi);
            if (s_hi > s_lo && iv.rate > 0.0)
                total += iv.rate * integral_on_interval(k, sol.step, t - s_hi, t - s_lo);
        }
    }
    return total;
}

double sc_axiom_residual(const InhomogeneousSCSpec& spec, const BranchingMechanism& mech,
                         const MotionModel& motion, const TestFunction& f, double r, double s,
                         double t, double step) {
    if (!(r <= s && s <= t)) throw std::invalid_argument("sc_axiom_residual: need r <= s <= t");
    double whole = inhomogeneous_log_laplace(spec, mech, motion, f, r, t, step);
    TestFunction g = f;
    if (s < t) {
        auto sol = solve_cumulant(mech, motion, f, t - s, effective_step(t - s, step));
        g = TestFunction(f.sites(), sol.final_values());
    }
    double part = inhomogeneous_log_laplace(spec, mech, motion, g, r, s, step) +
                  inhomogeneous_log_laplace(spec, mech, motion, f, s, t, step);
    return std::abs(whole - part);
}

LongtimeResult longtime_decompose(const SCSemigroupSpec& spec, const TestFunction& f, double tol,
                                  double step) {
    if (!(tol > 0.0)) throw std::invalid_argument("longtime_decompose: tol must be > 0");

    const int max_doublings = 8; // horizon cap 2^8
    double prev_window = -1.0;
    int consecutive_flat = 0;

    for (int m = 0; m <= max_doublings; ++m) {
        double horizon = std::pow(2.0, m);
        auto sol = solve_cumulant(spec.mech, spec.motion, f, horizon, effective_step(horizon, step));
        auto k = entrance_log_laplace_grid(spec.entrance, spec.mech, spec.motion, sol);

        double j_full = trapezoid(k, sol.step);
        double unit_increment =
            integral_on_interval(k, sol.step, std::max(0.0, horizon - 1.0), horizon);
        if (unit_increment < tol) return {false, j_full, horizon};

        if (m >= 1) {
            double window = integral_on_interval(k, sol.step, horizon / 2.0, horizon);
            if (prev_window >= 0.0) {
                consecutive_flat = (window >= 0.9 * prev_window) ? consecutive_flat + 1 : 0;
                if (consecutive_flat >= 5) return {true, j_full, horizon};
            }
            prev_window = window;
        }
    }
    // no geometric decay by the horizon cap: report divergence
    return {true, 0.0, std::pow(2.0, max_doublings)};
}

double occupation_immigration_exponent(const EntranceLawSpec& spec, const BranchingMechanism& mech,
                                       const MotionModel& motion, const TestFunction& f,
                                       const TestFunction& g, double t, double step) {
    if (t < 0.0) throw std::invalid_argument("occupation_immigration_exponent: t must be >= 0");
    if (t == 0.0) return 0.0;
    auto sol = solve_cumulant_occupation(mech, motion, f, g, t, effective_step(t, step));
    int n = sol.points();
    std::vector<double> k(n, 0.0);
    if (!spec.kappa.is_zero()) {
        auto s = s_functional_occupation_grid(spec.kappa, mech, motion, g, sol);
        for (int i = 0; i < n; ++i) k[i] += s[i];
    }
    for (const auto& atom : spec.atoms) {
        auto s = s_functional_occupation_grid(atom.law, mech, motion, g, sol);
        for (int i = 0; i < n; ++i) k[i] += atom.weight * -std::expm1(-s[i]);
    }
    return trapezoid(k, sol.step);
}

void spot_check_entrance(const SCSemigroupSpec& spec, double step) {
    double prev = std::numeric_limits<double>::infinity();
    double first = 0.0;
    const double ladder[] = {1.0, 0.1, 0.01};
    for (int i = 0; i < 3; ++i) {
        TestFunction f = TestFunction::constant(spec.motion.sites(), ladder[i]);
        double j = sc_log_laplace(spec, f, 1.0, step);
        if (!std::isfinite(j) || j < 0.0)
            throw std::runtime_error("entrance spot check: J_1 not finite and nonnegative");
        if (j > prev + 1e-12)
            throw std::runtime_error("entrance spot check: J_1 not monotone on the ladder");
        if (i == 0) first = j;
        prev = j;
    }
    if (first > 0.0 && prev > 0.1 * first + 1e-12)
        throw std::runtime_error("entrance spot check: J_1 does not vanish as f -> 0");
}

} // namespace mvb
