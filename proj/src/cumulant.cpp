#include "mvb/cumulant.hpp"

#include <cmath>
#include <ostream>

namespace mvb {

namespace {

constexpr double kClampSilent = 1e-12;
constexpr double kClampError = 1e-8;

void check_shapes(const BranchingMechanism& mech, const MotionModel& motion,
                  const TestFunction& f) {
    if (mech.dim() != motion.dim() || f.dim() != motion.dim())
        throw std::invalid_argument("cumulant: mechanism, motion and f must share one site set");
}

struct Integrator {
    const BranchingMechanism& mech;
    const Eigen::MatrixXd& q;
    const Eigen::VectorXd* source; // g, or nullptr

    mutable Eigen::VectorXd phi_buf;

    Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
        mech.phi_inplace(v, phi_buf);
        Eigen::VectorXd r = q * v - phi_buf;
        if (source) r += *source;
        return r;
    }
};

CumulantSolution integrate(const BranchingMechanism& mech, const MotionModel& motion,
                           const TestFunction& f, const Eigen::VectorXd* g, double horizon,
                           double step) {
    check_shapes(mech, motion, f);
    if (!(horizon > 0.0)) throw std::invalid_argument("cumulant: horizon must be > 0");
    if (!(step > 0.0)) throw std::invalid_argument("cumulant: step must be > 0");
    if (step >= horizon) throw std::invalid_argument("cumulant: step must be < horizon");

    int n = static_cast<int>(std::ceil(horizon / step - 1e-9));
    double h = horizon / n;

    CumulantSolution sol;
    sol.step = h;
    sol.grid.resize(n + 1);
    sol.values.resize(n + 1);
    sol.values[0] = f.values();
    sol.grid[0] = 0.0;

    Integrator rhs{mech, motion.generator(), g, {}};
    Eigen::VectorXd v = f.values();
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd k1 = rhs(v);
        Eigen::VectorXd k2 = rhs(v + 0.5 * h * k1);
        Eigen::VectorXd k3 = rhs(v + 0.5 * h * k2);
        Eigen::VectorXd k4 = rhs(v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        double t_next = (k + 1 == n) ? horizon : (k + 1) * h;
        if (!v.allFinite()) throw CumulantDivergence(t_next);
        for (int i = 0; i < v.size(); ++i) {
            if (v(i) < 0.0) {
                if (v(i) < -kClampError) throw CumulantDivergence(t_next);
                if (v(i) < -kClampSilent) ++sol.clamp_warnings;
                v(i) = 0.0;
            }
        }
        sol.grid[k + 1] = t_next;
        sol.values[k + 1] = v;
    }
    return sol;
}

// kappa_{kh} = mu0 P_{kh} for every grid index, via repeated products with
// P_h; flat row-major (n x d) for the convolution loops below.
std::vector<double> entrance_rows_flat(const PEntranceLaw& kappa, const MotionModel& motion,
                                       const CumulantSolution& sol) {
    int n = sol.points();
    int d = static_cast<int>(kappa.mu0.dim());
    Eigen::MatrixXd ph_t = motion.transition(sol.step).transpose();
    std::vector<double> rows(static_cast<size_t>(n) * d);
    Eigen::VectorXd cur = kappa.mu0.masses();
    for (int i = 0; i < d; ++i) rows[i] = cur(i);
    for (int k = 1; k < n; ++k) {
        cur = ph_t * cur;
        for (int i = 0; i < d; ++i) rows[static_cast<size_t>(k) * d + i] = cur(i);
    }
    return rows;
}

std::vector<double> phi_of_solution_flat(const BranchingMechanism& mech,
                                         const CumulantSolution& sol) {
    int n = sol.points();
    int d = static_cast<int>(sol.values[0].size());
    std::vector<double> out(static_cast<size_t>(n) * d);
    Eigen::VectorXd buf;
    for (int k = 0; k < n; ++k) {
        mech.phi_inplace(sol.values[k], buf);
        for (int i = 0; i < d; ++i) out[static_cast<size_t>(k) * d + i] = buf(i);
    }
    return out;
}

inline double dot_d(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += a[i] * b[i];
    return acc;
}

// trapezoid of the convolution sum_{j<=k} rows[k-j] . phis[j] at every k
std::vector<double> convolve_trapz(const std::vector<double>& rows,
                                   const std::vector<double>& phis, int n, int d, double h) {
    std::vector<double> out(n, 0.0);
    for (int k = 1; k < n; ++k) {
        const double* rk = rows.data() + static_cast<size_t>(k) * d;
        double conv = 0.5 * (dot_d(rk, phis.data(), d) +
                             dot_d(rows.data(), phis.data() + static_cast<size_t>(k) * d, d));
        for (int j = 1; j < k; ++j)
            conv += dot_d(rows.data() + static_cast<size_t>(k - j) * d,
                          phis.data() + static_cast<size_t>(j) * d, d);
        out[k] = conv * h;
    }
    return out;
}

} // namespace

CumulantDivergence::CumulantDivergence(double t)
    : std::runtime_error("cumulant solution diverged at t = " + std::to_string(t)), time(t) {}

CumulantSolution solve_cumulant(const BranchingMechanism& mech, const MotionModel& motion,
                                const TestFunction& f, double horizon, double step) {
    return integrate(mech, motion, f, nullptr, horizon, step);
}

CumulantSolution solve_cumulant_occupation(const BranchingMechanism& mech,
                                           const MotionModel& motion, const TestFunction& f,
                                           const TestFunction& g, double horizon, double step) {
    if (g.dim() != f.dim())
        throw std::invalid_argument("cumulant: f and g must share one site set");
    const Eigen::VectorXd& gv = g.values();
    return integrate(mech, motion, f, &gv, horizon, step);
}

std::vector<double> s_functional_grid(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                                      const MotionModel& motion, const CumulantSolution& sol) {
    int n = sol.points();
    int d = static_cast<int>(sol.values[0].size());
    if (kappa.mu0.dim() != d)
        throw std::invalid_argument("s_functional: entrance-law dimension mismatch");
    auto rows = entrance_rows_flat(kappa, motion, sol);
    auto phis = phi_of_solution_flat(mech, sol);
    const Eigen::VectorXd& f = sol.values[0];
    auto s = convolve_trapz(rows, phis, n, d, sol.step);
    for (int k = 0; k < n; ++k)
        s[k] = dot_d(rows.data() + static_cast<size_t>(k) * d, f.data(), d) - s[k];
    return s;
}

std::vector<double> s_functional_occupation_grid(const PEntranceLaw& kappa,
                                                 const BranchingMechanism& mech,
                                                 const MotionModel& motion, const TestFunction& g,
                                                 const CumulantSolution& sol) {
    int n = sol.points();
    int d = static_cast<int>(sol.values[0].size());
    if (kappa.mu0.dim() != d || g.dim() != d)
        throw std::invalid_argument("s_functional_occupation: dimension mismatch");
    auto rows = entrance_rows_flat(kappa, motion, sol);
    auto phis = phi_of_solution_flat(mech, sol);
    const Eigen::VectorXd& f = sol.values[0];
    double h = sol.step;

    std::vector<double> kg(n);
    for (int k = 0; k < n; ++k)
        kg[k] = dot_d(rows.data() + static_cast<size_t>(k) * d, g.values().data(), d);

    auto s = convolve_trapz(rows, phis, n, d, h);
    double kg_prefix = 0.0; // cumulative trapezoid of kappa_s(g)
    for (int k = 0; k < n; ++k) {
        if (k > 0) kg_prefix += 0.5 * h * (kg[k - 1] + kg[k]);
        s[k] = dot_d(rows.data() + static_cast<size_t>(k) * d, f.data(), d) + kg_prefix - s[k];
    }
    return s;
}

double s_functional(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                    const MotionModel& motion, const TestFunction& f, double t, double step) {
    if (!(t > 0.0)) throw std::invalid_argument("s_functional: t must be > 0");
    auto sol = solve_cumulant(mech, motion, f, t, step);
    int d = f.dim();
    auto rows = entrance_rows_flat(kappa, motion, sol);
    auto phis = phi_of_solution_flat(mech, sol);
    int n = sol.points() - 1;
    std::vector<double> w(n + 1);
    for (int j = 0; j <= n; ++j)
        w[j] = dot_d(rows.data() + static_cast<size_t>(n - j) * d,
                     phis.data() + static_cast<size_t>(j) * d, d);
    return dot_d(rows.data() + static_cast<size_t>(n) * d, f.values().data(), d) -
           trapezoid(w, sol.step);
}

double s_functional_occupation(const PEntranceLaw& kappa, const BranchingMechanism& mech,
                               const MotionModel& motion, const TestFunction& f,
                               const TestFunction& g, double t, double step) {
    if (!(t > 0.0)) throw std::invalid_argument("s_functional_occupation: t must be > 0");
    auto sol = solve_cumulant_occupation(mech, motion, f, g, t, step);
    auto s = s_functional_occupation_grid(kappa, mech, motion, g, sol);
    return s.back();
}

FiniteMeasure moment_flow(const BranchingMechanism& mech, const MotionModel& motion,
                          const FiniteMeasure& mu, double t) {
    if (t < 0.0) throw std::invalid_argument("moment_flow: t must be >= 0");
    if (mech.dim() != motion.dim() || mu.dim() != motion.dim())
        throw std::invalid_argument("moment_flow: dimension mismatch");
    KillingRate b(motion.sites(), mech.drift());
    Eigen::VectorXd out = motion.killed_transition(b, t).transpose() * mu.masses();
    return FiniteMeasure(mu.sites(), out);
}

double trapezoid(const std::vector<double>& samples, double h) {
    if (samples.size() < 2) return 0.0;
    double acc = 0.5 * (samples.front() + samples.back());
    for (size_t i = 1; i + 1 < samples.size(); ++i) acc += samples[i];
    return acc * h;
}

void write_csv(const CumulantSolution& sol, const SiteSet& sites, std::ostream& out) {
    out << "time";
    for (const auto& label : sites.labels()) out << ",v_" << label;
    out << "\n";
    for (int k = 0; k < sol.points(); ++k) {
        out << sol.grid[k];
        for (int i = 0; i < sol.values[k].size(); ++i) out << "," << sol.values[k](i);
        out << "\n";
    }
}

} // namespace mvb
