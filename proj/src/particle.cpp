#include "mvb/particle.hpp"

#include <algorithm>
#include <cmath>

namespace mvb {

namespace {

constexpr int64_t kParticleCap = 100000000; // 10^8

struct SiteRates {
    double motion;     // exit rate q_i
    double branch;     // 2 c_i n
    double death;      // max(b_i, 0)
    double birth;      // max(-b_i, 0)
    double per_particle() const { return motion + branch + death + birth; }
};

// Seeded rounding of n*mu to integer counts: floors plus categorical extras
// for the fractional remainders (unbiased per site).
std::vector<int64_t> round_to_counts(const Eigen::VectorXd& mu, double n, rng::Stream& stream) {
    int d = static_cast<int>(mu.size());
    std::vector<int64_t> counts(d, 0);
    std::vector<double> frac(d, 0.0);
    double frac_total = 0.0;
    for (int i = 0; i < d; ++i) {
        double target = n * mu(i);
        double fl = std::floor(target);
        counts[i] = static_cast<int64_t>(fl);
        frac[i] = target - fl;
        frac_total += frac[i];
    }
    int extras = static_cast<int>(std::floor(frac_total));
    if (stream.uniform() < frac_total - std::floor(frac_total)) ++extras;
    for (int e = 0; e < extras; ++e) {
        double u = stream.uniform() * frac_total;
        double acc = 0.0;
        int pick = d - 1;
        for (int i = 0; i < d; ++i) {
            acc += frac[i];
            if (u < acc) { pick = i; break; }
        }
        ++counts[pick];
    }
    return counts;
}

struct Engine {
    const BranchingMechanism& mech;
    const MotionModel& motion;
    const ImmigrationSpec* imm; // nullptr or all-zero behave identically
    double n;
    int d;

    std::vector<SiteRates> site;
    std::vector<std::vector<std::pair<double, int>>> jump_cdf; // per site: (cum rate, target)

    double imm_single_rate = 0.0; // n * kappa_rate(E)
    std::vector<double> kappa_cum;
    std::vector<double> cluster_rates;
    double imm_total = 0.0;

    Engine(const BranchingMechanism& mech_, const MotionModel& motion_,
           const ImmigrationSpec* imm_, int64_t n_)
        : mech(mech_), motion(motion_), imm(imm_), n(static_cast<double>(n_)), d(motion_.dim()) {
        if (mech.has_jumps())
            throw std::invalid_argument(
                "particle engine: jump atoms are not supported by the particle scheme; "
                "use the analytic layer for mechanisms with jumps");
        if (n_ < 1) throw std::invalid_argument("particle engine: scaling level n must be >= 1");
        if (mech.dim() != d)
            throw std::invalid_argument("particle engine: mechanism/motion dimension mismatch");

        const Eigen::MatrixXd& q = motion.generator();
        site.resize(d);
        jump_cdf.resize(d);
        for (int i = 0; i < d; ++i) {
            double exit = -q(i, i);
            site[i].motion = exit;
            site[i].branch = 2.0 * mech.diffusion()(i) * n;
            double b = mech.drift()(i);
            site[i].death = b > 0 ? b : 0.0;
            site[i].birth = b < 0 ? -b : 0.0;
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                if (j == i || q(i, j) <= 0.0) continue;
                acc += q(i, j);
                jump_cdf[i].push_back({acc, j});
            }
        }
        if (imm) {
            double kappa_total = imm->kappa_rate.total();
            imm_single_rate = n * kappa_total;
            double acc = 0.0;
            kappa_cum.resize(d);
            for (int i = 0; i < d; ++i) {
                acc += imm->kappa_rate[i];
                kappa_cum[i] = acc;
            }
            for (const auto& atom : imm->cluster_atoms) cluster_rates.push_back(atom.rate);
            imm_total = imm_single_rate;
            for (double r : cluster_rates) imm_total += r;
        }
    }

    struct RunResult {
        std::vector<int64_t> counts;
        double occupation_counts = 0.0; // int sum_i counts_i g_i dt, count units
        uint64_t events = 0;
    };

    // Single-site models with no motion and no macroscopic clusters cover the
    // costly acceptance workloads; a dedicated loop avoids the generic
    // channel scan without changing the event law.
    RunResult run_single_site(std::vector<int64_t> counts, double horizon,
                              rng::Stream& stream, const double* g) const {
        RunResult out;
        const double branch = site[0].branch;
        const double death = site[0].death;
        const double per_particle = site[0].per_particle();
        const double imm = imm_single_rate;
        const double gv = g ? g[0] : 0.0;

        int64_t n_alive = counts[0];
        double t = 0.0;
        for (;;) {
            double rate_particles = static_cast<double>(n_alive) * per_particle;
            double total_rate = rate_particles + imm;
            if (total_rate <= 0.0) break;
            double dt = stream.exponential() / total_rate;
            if (t + dt >= horizon) {
                if (g) out.occupation_counts += static_cast<double>(n_alive) * gv * (horizon - t);
                t = horizon;
                break;
            }
            if (g) out.occupation_counts += static_cast<double>(n_alive) * gv * dt;
            t += dt;
            ++out.events;

            uint64_t word = stream.next_u64();
            double u = static_cast<double>(word >> 11) * 0x1.0p-53 * total_rate;
            double n_d = static_cast<double>(n_alive);
            if (u < n_d * branch) {
                n_alive += (word & 1) ? 1 : -1;
            } else if (u < n_d * (branch + death)) {
                --n_alive;
            } else if (u < rate_particles) {
                ++n_alive;
            } else {
                ++n_alive; // single immigrant
            }
            if (n_alive > kParticleCap)
                throw std::runtime_error("particle engine: particle count exceeded 1e8");
        }
        counts[0] = n_alive;
        out.counts = std::move(counts);
        return out;
    }

    // g: per-site occupation weight or nullptr. record: sorted snapshot times.
    RunResult run(std::vector<int64_t> counts, double horizon, rng::Stream& stream,
                  const double* g, const std::vector<double>* record,
                  std::vector<std::vector<int64_t>>* snapshots) const {
        if (d == 1 && !record && site[0].motion == 0.0 && cluster_rates.empty())
            return run_single_site(std::move(counts), horizon, stream, g);
        RunResult out;
        double total_particles = 0.0;
        double rate_particles = 0.0;
        double sg = 0.0;
        int64_t alive = 0;
        for (int i = 0; i < d; ++i) {
            alive += counts[i];
            rate_particles += static_cast<double>(counts[i]) * site[i].per_particle();
            if (g) sg += static_cast<double>(counts[i]) * g[i];
        }
        total_particles = static_cast<double>(alive);

        double t = 0.0;
        size_t rec_idx = 0;
        uint64_t cluster_counter = 0;
        uint64_t since_refresh = 0;

        auto snapshot_until = [&](double up_to) {
            if (!record) return;
            while (rec_idx < record->size() && (*record)[rec_idx] <= up_to) {
                snapshots->push_back(counts);
                ++rec_idx;
            }
        };

        for (;;) {
            double total_rate = rate_particles + imm_total;
            if (total_rate <= 0.0) {
                snapshot_until(horizon);
                break;
            }
            double dt = stream.exponential() / total_rate;
            double t_next = t + dt;
            if (t_next >= horizon) {
                if (g) out.occupation_counts += sg * (horizon - t);
                snapshot_until(horizon);
                break;
            }
            if (g) out.occupation_counts += sg * dt;
            snapshot_until(t_next);
            t = t_next;
            ++out.events;

            double u = stream.uniform() * total_rate;
            if (u < rate_particles) {
                // particle event: locate the site
                int i = d - 1;
                double acc = 0.0;
                for (int s = 0; s < d; ++s) {
                    acc += static_cast<double>(counts[s]) * site[s].per_particle();
                    if (u < acc) { i = s; break; }
                }
                double v = stream.uniform() * site[i].per_particle();
                if (v < site[i].motion) {
                    // chain jump
                    double w = stream.uniform() * site[i].motion;
                    int target = jump_cdf[i].empty() ? i : jump_cdf[i].back().second;
                    for (const auto& [cum, j] : jump_cdf[i]) {
                        if (w < cum) { target = j; break; }
                    }
                    --counts[i];
                    ++counts[target];
                    rate_particles += site[target].per_particle() - site[i].per_particle();
                    if (g) sg += g[target] - g[i];
                } else if (v < site[i].motion + site[i].branch) {
                    // binary branching: 0 or 2 offspring, fair coin
                    if (stream.next_u64() >> 63) {
                        ++counts[i];
                        rate_particles += site[i].per_particle();
                        total_particles += 1.0;
                        if (g) sg += g[i];
                    } else {
                        --counts[i];
                        rate_particles -= site[i].per_particle();
                        total_particles -= 1.0;
                        if (g) sg -= g[i];
                    }
                } else if (v < site[i].motion + site[i].branch + site[i].death) {
                    --counts[i];
                    rate_particles -= site[i].per_particle();
                    total_particles -= 1.0;
                    if (g) sg -= g[i];
                } else {
                    ++counts[i];
                    rate_particles += site[i].per_particle();
                    total_particles += 1.0;
                    if (g) sg += g[i];
                }
            } else {
                // immigration event
                double v = u - rate_particles;
                if (v < imm_single_rate) {
                    double w = stream.uniform() * imm->kappa_rate.total();
                    int target = d - 1;
                    for (int s = 0; s < d; ++s) {
                        if (w < kappa_cum[s]) { target = s; break; }
                    }
                    ++counts[target];
                    rate_particles += site[target].per_particle();
                    total_particles += 1.0;
                    if (g) sg += g[target];
                } else {
                    v -= imm_single_rate;
                    size_t a = cluster_rates.size() - 1;
                    double acc = 0.0;
                    for (size_t s = 0; s < cluster_rates.size(); ++s) {
                        acc += cluster_rates[s];
                        if (v < acc) { a = s; break; }
                    }
                    rng::Stream cluster_stream = stream.substream(0x636c7573ULL + cluster_counter++);
                    auto add = round_to_counts(imm->cluster_atoms[a].seed.masses(), n, cluster_stream);
                    for (int s = 0; s < d; ++s) {
                        if (add[s] == 0) continue;
                        counts[s] += add[s];
                        rate_particles += static_cast<double>(add[s]) * site[s].per_particle();
                        total_particles += static_cast<double>(add[s]);
                        if (g) sg += static_cast<double>(add[s]) * g[s];
                    }
                }
            }

            if (total_particles > static_cast<double>(kParticleCap))
                throw std::runtime_error("particle engine: particle count exceeded 1e8");

            // periodic exact refresh of the incrementally maintained rates
            if ((++since_refresh & 0xffff) == 0) {
                rate_particles = 0.0;
                sg = 0.0;
                total_particles = 0.0;
                for (int i = 0; i < d; ++i) {
                    rate_particles += static_cast<double>(counts[i]) * site[i].per_particle();
                    total_particles += static_cast<double>(counts[i]);
                    if (g) sg += static_cast<double>(counts[i]) * g[i];
                }
            }
        }
        out.counts = std::move(counts);
        return out;
    }
};

FiniteMeasure counts_to_measure(const std::vector<int64_t>& counts, double n, SiteSetPtr sites) {
    Eigen::VectorXd m(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) m(i) = static_cast<double>(counts[i]) / n;
    return FiniteMeasure(std::move(sites), m);
}

} // namespace

bool ImmigrationSpec::is_zero() const {
    if (kappa_rate.total() > 0.0) return false;
    for (const auto& atom : cluster_atoms)
        if (atom.rate > 0.0) return false;
    return true;
}

ImmigrationSpec ImmigrationSpec::none(SiteSetPtr sites) {
    return ImmigrationSpec{FiniteMeasure::zero(std::move(sites)), {}};
}

ClusterRetryExhausted::ClusterRetryExhausted(int attempts)
    : std::runtime_error("sample_cluster: no surviving cluster in " + std::to_string(attempts) +
                         " attempts") {}

FiniteMeasure simulate_superprocess(const BranchingMechanism& mech, const MotionModel& motion,
                                    const FiniteMeasure& mu0, double horizon, int64_t n,
                                    uint64_t seed) {
    return simulate_immigration(mech, motion, ImmigrationSpec::none(motion.sites()), mu0, horizon,
                                n, seed);
}

FiniteMeasure simulate_immigration(const BranchingMechanism& mech, const MotionModel& motion,
                                   const ImmigrationSpec& imm, const FiniteMeasure& mu0,
                                   double horizon, int64_t n, uint64_t seed) {
    if (horizon < 0.0) throw std::invalid_argument("simulate: horizon must be >= 0");
    Engine engine(mech, motion, &imm, n);
    rng::Stream stream(seed);
    auto counts = round_to_counts(mu0.masses(), static_cast<double>(n), stream);
    auto result = engine.run(std::move(counts), horizon, stream, nullptr, nullptr, nullptr);
    return counts_to_measure(result.counts, static_cast<double>(n), motion.sites());
}

OccupationSample occupation_sample(const BranchingMechanism& mech, const MotionModel& motion,
                                   const FiniteMeasure& mu0,
                                   const std::optional<ImmigrationSpec>& imm,
                                   const TestFunction& f, const TestFunction& g, double horizon,
                                   int64_t n, uint64_t seed) {
    if (horizon < 0.0) throw std::invalid_argument("occupation_sample: horizon must be >= 0");
    ImmigrationSpec zero = ImmigrationSpec::none(motion.sites());
    const ImmigrationSpec& use = imm ? *imm : zero;
    Engine engine(mech, motion, &use, n);
    rng::Stream stream(seed);
    auto counts = round_to_counts(mu0.masses(), static_cast<double>(n), stream);
    std::vector<double> gvals(g.values().data(), g.values().data() + g.dim());
    auto result = engine.run(std::move(counts), horizon, stream, gvals.data(), nullptr, nullptr);
    FiniteMeasure final_state =
        counts_to_measure(result.counts, static_cast<double>(n), motion.sites());
    OccupationSample out{integrate(final_state, f),
                         result.occupation_counts / static_cast<double>(n), final_state,
                         result.events};
    return out;
}

ClusterEvent sample_cluster(const BranchingMechanism& mech, const MotionModel& motion,
                            int birth_site, double horizon, int64_t n, uint64_t seed,
                            int max_attempts) {
    if (birth_site < 0 || birth_site >= motion.dim())
        throw std::invalid_argument("sample_cluster: birth site out of range");
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_cluster: horizon must be > 0");
    Engine engine(mech, motion, nullptr, n);

    // geometric probe grid horizon/2^10, ..., horizon/2, horizon
    std::vector<double> record;
    for (int j = 10; j >= 0; --j) record.push_back(horizon * std::ldexp(1.0, -j));

    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        rng::Stream stream(rng::mix(seed, static_cast<uint64_t>(attempt)));
        std::vector<int64_t> counts(motion.dim(), 0);
        counts[birth_site] = 1;
        std::vector<std::vector<int64_t>> snaps;
        auto result = engine.run(std::move(counts), horizon, stream, nullptr, &record, &snaps);
        int64_t alive = 0;
        for (int64_t c : result.counts) alive += c;
        if (alive == 0) continue;

        ClusterEvent ev;
        ev.birth_time = 0.0;
        ev.birth_site = birth_site;
        ev.attempts = attempt;
        Eigen::VectorXd m0 = Eigen::VectorXd::Zero(motion.dim());
        m0(birth_site) = 1.0 / static_cast<double>(n);
        ev.path.emplace_back(0.0, FiniteMeasure(motion.sites(), m0));
        for (size_t j = 0; j < snaps.size(); ++j)
            ev.path.emplace_back(record[j],
                                 counts_to_measure(snaps[j], static_cast<double>(n), motion.sites()));
        return ev;
    }
    throw ClusterRetryExhausted(max_attempts);
}

FiniteMeasure simulate_stationary(const BranchingMechanism& mech, const MotionModel& motion,
                                  const ImmigrationSpec& imm, double window, int64_t n,
                                  uint64_t seed) {
    double min_b = mech.drift().minCoeff();
    if (!(min_b > 0.0))
        throw std::invalid_argument(
            "simulate_stationary: mechanism must be strictly subcritical (min_x b(x) > 0); "
            "with b <= 0 the window average never settles");
    if (!(window > 0.0)) throw std::invalid_argument("simulate_stationary: window must be > 0");
    return simulate_immigration(mech, motion, imm, FiniteMeasure::zero(motion.sites()), window, n,
                                seed);
}

} // namespace mvb
