#include "mvb/checks.hpp"

#include "mvb/parallel.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace mvb {

namespace {

constexpr double kResidualTol = 1e-5;
constexpr double kLaplaceZ = 3.0;
constexpr double kMomentZ = 4.0;
constexpr double kLongtimeTol = 1e-7;

struct McStats {
    double mean = 0.0;
    double se = 0.0;
};

McStats mc_stats(const std::vector<double>& values) {
    McStats s;
    double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    if (values.size() > 1) s.se = std::sqrt(ss / (n - 1.0) / n);
    return s;
}

CheckRow statistical_row(const std::string& label, double analytic,
                         const std::vector<double>& values, double threshold) {
    McStats s = mc_stats(values);
    CheckRow row;
    row.label = label;
    row.kind = RowKind::Statistical;
    row.analytic = analytic;
    row.estimate = s.mean;
    row.se = s.se;
    row.z = s.se > 0.0 ? (s.mean - analytic) / s.se
                       : (s.mean == analytic ? 0.0 : std::numeric_limits<double>::infinity());
    row.threshold = threshold;
    row.pass = std::abs(row.z) <= threshold;
    return row;
}

CheckRow residual_row(const std::string& label, double residual, double tol) {
    CheckRow row;
    row.label = label;
    row.kind = RowKind::Residual;
    row.analytic = 0.0;
    row.estimate = residual;
    row.threshold = tol;
    row.pass = residual <= tol;
    return row;
}

CheckRow bound_row(const std::string& label, double estimate, double min_value) {
    CheckRow row;
    row.label = label;
    row.kind = RowKind::BoundLower;
    row.analytic = min_value;
    row.estimate = estimate;
    row.threshold = min_value;
    row.pass = estimate >= min_value;
    return row;
}

struct ReplicateLog {
    // one preformatted CSV line per replicate, written in index order
    std::vector<std::string> lines;

    void resize(size_t n) { lines.resize(n); }
    void log(size_t i, int replicate, double t, const FiniteMeasure& m, double exp_value,
             double occupation) {
        std::ostringstream os;
        os.precision(17);
        os << replicate << ',' << t;
        for (int k = 0; k < m.dim(); ++k) os << ',' << m[k];
        os << ',' << exp_value << ',' << occupation;
        lines[i] = os.str();
    }
};

struct CheckContext {
    const ExperimentConfig& cfg;
    uint64_t seed;
    bool parallel;
    std::optional<std::string> out_dir;

    const Target& target() const {
        if (cfg.targets.empty()) throw std::runtime_error("check requires a target");
        return cfg.targets.front();
    }

    void dump_replicates(const std::string& check, const ReplicateLog& log) const {
        if (!out_dir) return;
        std::ofstream out(std::filesystem::path(*out_dir) / (check + "_replicates.csv"));
        out << "replicate,t";
        for (const auto& label : cfg.sites->labels()) out << ",mass_" << label;
        out << ",exp_value,occupation\n";
        for (const auto& line : log.lines) out << line << '\n';
    }
};

double analytic_superprocess_exponent(const ExperimentConfig& cfg, const TestFunction& f,
                                      double t) {
    if (t == 0.0) return integrate(cfg.initial, f);
    auto sol = solve_cumulant(cfg.mech, cfg.motion, f, t, cfg.solver.step);
    return cfg.initial.masses().dot(sol.final_values());
}

// ---- the checks ----

std::vector<CheckRow> check_laplace_superprocess(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    double t = target.t;

    double exponent = analytic_superprocess_exponent(cfg, target.f, t);
    double analytic_mean = integrate(moment_flow(cfg.mech, cfg.motion, cfg.initial, t), target.f);

    int reps = cfg.sim.replicates;
    std::vector<double> laplace(reps), mass(reps);
    ReplicateLog log;
    log.resize(reps);
    parallel_for(reps, ctx.parallel, [&](int64_t i) {
        FiniteMeasure m = simulate_superprocess(cfg.mech, cfg.motion, cfg.initial, t, cfg.sim.n,
                                                replicate_seed(ctx.seed, i));
        double x = integrate(m, target.f);
        laplace[i] = std::exp(-x);
        mass[i] = x;
        log.log(i, static_cast<int>(i), t, m, laplace[i], 0.0);
    });
    ctx.dump_replicates("laplace_superprocess", log);
    return {statistical_row("laplace", std::exp(-exponent), laplace, kLaplaceZ),
            statistical_row("first_moment", analytic_mean, mass, kMomentZ)};
}

std::vector<CheckRow> check_laplace_immigration(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    double t = target.t;

    double exponent = analytic_superprocess_exponent(cfg, target.f, t) +
                      sc_log_laplace(cfg.sc_spec(), target.f, t, cfg.solver.step);

    int reps = cfg.sim.replicates;
    std::vector<double> laplace(reps);
    ReplicateLog log;
    log.resize(reps);
    parallel_for(reps, ctx.parallel, [&](int64_t i) {
        FiniteMeasure m = simulate_immigration(cfg.mech, cfg.motion, cfg.immigration, cfg.initial,
                                               t, cfg.sim.n, replicate_seed(ctx.seed, i));
        double x = integrate(m, target.f);
        laplace[i] = std::exp(-x);
        log.log(i, static_cast<int>(i), t, m, laplace[i], 0.0);
    });
    ctx.dump_replicates("laplace_immigration", log);
    return {statistical_row("laplace", std::exp(-exponent), laplace, kLaplaceZ)};
}

std::vector<CheckRow> check_skew_identity(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    double residual =
        skew_identity_residual(cfg.sc_spec(), target.f, target.r, target.t, cfg.solver.step);
    return {residual_row("skew_identity", residual, kResidualTol)};
}

std::vector<CheckRow> check_sc_axiom(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    if (!cfg.inhomogeneous) throw std::runtime_error("sc_axiom: no inhomogeneous spec configured");
    std::vector<CheckRow> rows;
    for (const auto& [r, s, t] : cfg.triples) {
        double residual = sc_axiom_residual(*cfg.inhomogeneous, cfg.mech, cfg.motion, target.f, r,
                                            s, t, cfg.solver.step);
        std::ostringstream label;
        label << "r=" << r << ",s=" << s << ",t=" << t;
        rows.push_back(residual_row(label.str(), residual, kResidualTol));
    }
    return rows;
}

std::vector<CheckRow> check_occupation(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    double t = target.t;

    auto sol = solve_cumulant_occupation(cfg.mech, cfg.motion, target.f, target.g, t,
                                         cfg.solver.step);
    double exponent = cfg.initial.masses().dot(sol.final_values());
    std::optional<ImmigrationSpec> imm;
    if (!cfg.immigration.is_zero()) {
        imm = cfg.immigration;
        exponent += occupation_immigration_exponent(cfg.entrance_spec(), cfg.mech, cfg.motion,
                                                    target.f, target.g, t, cfg.solver.step);
    }

    int reps = cfg.sim.replicates;
    std::vector<double> joint(reps);
    ReplicateLog log;
    log.resize(reps);
    parallel_for(reps, ctx.parallel, [&](int64_t i) {
        OccupationSample s = occupation_sample(cfg.mech, cfg.motion, cfg.initial, imm, target.f,
                                               target.g, t, cfg.sim.n,
                                               replicate_seed(ctx.seed, i));
        joint[i] = std::exp(-(s.value_f + s.integral_g));
        log.log(i, static_cast<int>(i), t, s.final_state, joint[i], s.integral_g);
    });
    ctx.dump_replicates("occupation", log);
    return {statistical_row("joint_laplace", std::exp(-exponent), joint, kLaplaceZ)};
}

std::vector<CheckRow> check_stationary(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();

    auto longtime = longtime_decompose(cfg.sc_spec(), target.f, kLongtimeTol, cfg.solver.step);
    if (longtime.diverged)
        throw std::runtime_error(
            "stationary: long-time functional diverges for this model (no stationary law)");
    double analytic_laplace = std::exp(-longtime.value);

    // stationary mean: rate measure integrated along the mean semigroup,
    // int_0^inf rate e^{s(Q - diag b)} ds = rate (diag b - Q)^{-1}
    Eigen::VectorXd rate = cfg.immigration.kappa_rate.masses();
    for (const auto& atom : cfg.immigration.cluster_atoms)
        rate += atom.rate * atom.seed.masses();
    Eigen::MatrixXd resolvent =
        Eigen::MatrixXd(cfg.mech.drift().asDiagonal()) - cfg.motion.generator();
    double analytic_mean = rate.dot(resolvent.partialPivLu().solve(target.f.values()));

    int reps = cfg.sim.replicates;
    std::vector<double> laplace(reps), mass(reps);
    ReplicateLog log;
    log.resize(reps);
    parallel_for(reps, ctx.parallel, [&](int64_t i) {
        FiniteMeasure m = simulate_stationary(cfg.mech, cfg.motion, cfg.immigration,
                                              cfg.sim.window, cfg.sim.n,
                                              replicate_seed(ctx.seed, i));
        double x = integrate(m, target.f);
        laplace[i] = std::exp(-x);
        mass[i] = x;
        log.log(i, static_cast<int>(i), 0.0, m, laplace[i], 0.0);
    });
    ctx.dump_replicates("stationary", log);
    return {statistical_row("laplace", analytic_laplace, laplace, kLaplaceZ),
            statistical_row("mean", analytic_mean, mass, kLaplaceZ)};
}

std::vector<CheckRow> check_near_birth(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const NearBirthSettings& nb = cfg.near_birth;

    int count = nb.clusters;
    std::vector<double> concentration(count);
    std::vector<double> small_mass(count);
    ReplicateLog log;
    log.resize(count);
    parallel_for(count, ctx.parallel, [&](int64_t i) {
        ClusterEvent ev = sample_cluster(cfg.mech, cfg.motion, nb.site, nb.probe, nb.n,
                                         replicate_seed(ctx.seed, i));
        const FiniteMeasure& at_probe = ev.path.back().second;
        double total = at_probe.total();
        concentration[i] = at_probe[nb.site] / total;
        small_mass[i] = (total <= nb.mass_factor / static_cast<double>(nb.n)) ? 1.0 : 0.0;
        log.log(i, static_cast<int>(i), nb.probe, at_probe, concentration[i], 0.0);
    });
    ctx.dump_replicates("near_birth", log);

    double conc_mean = 0.0, small_frac = 0.0;
    for (int i = 0; i < count; ++i) {
        conc_mean += concentration[i];
        small_frac += small_mass[i];
    }
    conc_mean /= count;
    small_frac /= count;
    return {bound_row("concentration", conc_mean, nb.concentration_min),
            bound_row("small_mass_fraction", small_frac, nb.quantile)};
}

std::vector<CheckRow> check_moment_flow(const CheckContext& ctx) {
    const auto& cfg = ctx.cfg;
    const Target& target = ctx.target();
    double t = target.t;
    double analytic = integrate(moment_flow(cfg.mech, cfg.motion, cfg.initial, t), target.f);

    int reps = cfg.sim.replicates;
    std::vector<double> mass(reps);
    ReplicateLog log;
    log.resize(reps);
    parallel_for(reps, ctx.parallel, [&](int64_t i) {
        FiniteMeasure m = simulate_superprocess(cfg.mech, cfg.motion, cfg.initial, t, cfg.sim.n,
                                                replicate_seed(ctx.seed, i));
        mass[i] = integrate(m, target.f);
        log.log(i, static_cast<int>(i), t, m, std::exp(-mass[i]), 0.0);
    });
    ctx.dump_replicates("moment_flow", log);
    return {statistical_row("first_moment", analytic, mass, kMomentZ)};
}

using CheckFn = std::function<std::vector<CheckRow>(const CheckContext&)>;

const std::vector<std::pair<CheckInfo, CheckFn>>& registry() {
    static const std::vector<std::pair<CheckInfo, CheckFn>> entries = {
        {{"laplace_superprocess", "E[e^{-X_t(f)}] = exp(-mu(V_t f))"},
         check_laplace_superprocess},
        {{"laplace_immigration",
          "E[e^{-Y_t(f)}] = exp(-mu(V_t f) - J_t(f)),  J_t(f) = int_0^t -log L_{K_s}(f) ds"},
         check_laplace_immigration},
        {{"skew_identity", "J_{r+t}(f) = J_r(V_t f) + J_t(f)"}, check_skew_identity},
        {{"sc_axiom", "J_{r,t}(f) = J_{r,s}(V_{s,t} f) + J_{s,t}(f) for the step/diffuse family"},
         check_sc_axiom},
        {{"occupation",
          "E[exp(-X_t(f) - int_0^t X_s(g) ds)] = exp(-mu(u_t) - int_0^t S_r(kappa,f,g) dr)"},
         check_occupation},
        {{"stationary",
          "window read of immigration from the null measure matches the long-time law"},
         check_stationary},
        {{"near_birth",
          "surviving clusters near birth: mass -> 0, normalized measure -> delta_{birth site}"},
         check_near_birth},
        {{"moment_flow", "E[X_t(f)] = mu e^{t(Q - diag b)}(f)"}, check_moment_flow},
    };
    return entries;
}

} // namespace

const std::vector<CheckInfo>& check_catalog() {
    static const std::vector<CheckInfo> catalog = [] {
        std::vector<CheckInfo> out;
        for (const auto& [info, fn] : registry()) out.push_back(info);
        return out;
    }();
    return catalog;
}

Report run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    auto t0 = std::chrono::steady_clock::now();
    Report report;
    report.config_path = options.config_path;
    report.seed = options.seed.value_or(config.sim.seed);
    report.parallel = options.parallel;

    if (options.out_dir) std::filesystem::create_directories(*options.out_dir);
    CheckContext ctx{config, report.seed, options.parallel, options.out_dir};

    int count = static_cast<int>(config.checks.size());
    std::vector<CheckResult> results(count);
    auto run_one = [&](int64_t i) {
        const std::string& name = config.checks[i];
        CheckResult& res = results[i];
        res.name = name;
        auto c0 = std::chrono::steady_clock::now();
        try {
            for (const auto& [info, fn] : registry()) {
                if (info.name == name) {
                    res.rows = fn(ctx);
                    break;
                }
            }
            bool ok = true;
            for (const auto& row : res.rows) ok = ok && row.pass;
            res.status = ok ? "pass" : "fail";
        } catch (const std::exception& e) {
            res.status = "error";
            res.error = e.what();
        }
        res.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - c0)
                .count();
    };
    // the parallel flag also runs independent checks concurrently; report
    // order stays config order because results are stored by index
    parallel_for(count, options.parallel, run_one);
    report.checks = std::move(results);

    report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (options.out_dir) {
        std::filesystem::create_directories(*options.out_dir);
        std::ofstream json_out(std::filesystem::path(*options.out_dir) / "report.json");
        json_out << report.to_json(true) << '\n';
        std::ofstream csv_out(std::filesystem::path(*options.out_dir) / "report.csv");
        csv_out << report.to_csv();
    }
    return report;
}

} // namespace mvb
