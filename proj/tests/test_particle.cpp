#include <doctest.h>

#include "mvb/particle.hpp"
#include "mvb/sc_semigroup.hpp"
#include "test_helpers.hpp"

#include <algorithm>
#include <cmath>

using namespace mvb;
using namespace mvbtest;

namespace {

struct McSummary {
    double mean, se;
};

McSummary summarize(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double se = std::sqrt(ss / (v.size() - 1.0) / v.size());
    return {mean, se};
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

} // namespace

TEST_CASE("pure motion conserves every particle") {
    auto motion = two_state(1.5);
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 0.0);
    FiniteMeasure mu0(motion.sites(), vec({1.0, 0.5}));
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        auto m = simulate_superprocess(mech, motion, mu0, 2.0, 100, seed);
        CHECK(m.total() == doctest::Approx(1.5).epsilon(1e-14)); // counts exactly conserved
    }
}

TEST_CASE("pure motion matches the chain marginal in mean") {
    auto motion = two_state(1.0);
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 0.0);
    FiniteMeasure mu0(motion.sites(), vec({1.0, 0.0}));
    int reps = 800;
    std::vector<double> site0(reps);
    for (int i = 0; i < reps; ++i)
        site0[i] = simulate_superprocess(mech, motion, mu0, 0.7, 50, replicate_seed(5, i))[0];
    auto s = summarize(site0);
    double expected = 0.5 * (1.0 + std::exp(-2.0 * 0.7)); // P(at start site)
    CHECK(std::abs(s.mean - expected) <= 4.0 * s.se);
}

TEST_CASE("null initial measure stays null") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    auto m = simulate_superprocess(mech, motion, FiniteMeasure::zero(motion.sites()), 1.0, 1000,
                                   99);
    CHECK(m.total() == 0.0);
}

TEST_CASE("jump mechanisms are rejected by the particle layer") {
    auto motion = still_site();
    BranchingMechanism mech(motion.sites(), vec({0.0}), vec({0.0}), {{{1.0, 1.0}}});
    FiniteMeasure mu0(motion.sites(), vec({1.0}));
    CHECK_THROWS_AS(simulate_superprocess(mech, motion, mu0, 1.0, 100, 1),
                    std::invalid_argument);
}

TEST_CASE("particle count overflow guard") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), -30.0, 0.0);
    FiniteMeasure mu0(motion.sites(), vec({9.9e7}));
    CHECK_THROWS_AS(simulate_superprocess(mech, motion, mu0, 1.0, 1, 7), std::runtime_error);
}

TEST_CASE("superprocess Laplace functional against the Riccati closed form") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    FiniteMeasure mu0(motion.sites(), vec({1.0}));
    int reps = 1000;
    std::vector<double> laplace(reps), mass(reps);
    for (int i = 0; i < reps; ++i) {
        auto m = simulate_superprocess(mech, motion, mu0, 1.0, 200, replicate_seed(42, i));
        mass[i] = m.total();
        laplace[i] = std::exp(-mass[i]);
    }
    auto ls = summarize(laplace);
    CHECK(std::abs(ls.mean - std::exp(-0.5)) <= 3.0 * ls.se);
    auto ms = summarize(mass);
    CHECK(std::abs(ms.mean - 1.0) <= 4.0 * ms.se); // critical: mean mass preserved
}

TEST_CASE("first moments track the mean flow on a two-state model") {
    auto motion = two_state(0.8);
    BranchingMechanism mech(motion.sites(), vec({0.4, -0.3}), vec({0.7, 1.0}), {});
    FiniteMeasure mu0(motion.sites(), vec({0.8, 0.4}));
    TestFunction f(motion.sites(), vec({1.0, 0.6}));
    double analytic = integrate(moment_flow(mech, motion, mu0, 0.9), f);
    int reps = 800;
    std::vector<double> vals(reps);
    for (int i = 0; i < reps; ++i) {
        auto m = simulate_superprocess(mech, motion, mu0, 0.9, 150, replicate_seed(17, i));
        vals[i] = integrate(m, f);
    }
    auto s = summarize(vals);
    CHECK(std::abs(s.mean - analytic) <= 4.0 * s.se);
}

TEST_CASE("all-zero immigration is the identical code path") {
    auto motion = two_state(1.0);
    auto mech = quadratic_mechanism(motion.sites(), 0.1, 0.8);
    FiniteMeasure mu0(motion.sites(), vec({1.0, 0.2}));
    auto a = simulate_superprocess(mech, motion, mu0, 1.0, 120, 31);
    auto b = simulate_immigration(mech, motion, ImmigrationSpec::none(motion.sites()), mu0, 1.0,
                                  120, 31);
    CHECK((a.masses() - b.masses()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deterministic replay, seed sensitivity") {
    auto motion = two_state(1.0);
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    FiniteMeasure mu0(motion.sites(), vec({0.7, 0.7}));
    auto a = simulate_superprocess(mech, motion, mu0, 1.0, 100, 1234);
    auto b = simulate_superprocess(mech, motion, mu0, 1.0, 100, 1234);
    auto c = simulate_superprocess(mech, motion, mu0, 1.0, 100, 1235);
    CHECK((a.masses() - b.masses()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.masses() - c.masses()).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("immigration Laplace against the CIR-type closed form") {
    // one site, phi = z^2, immigrant intensity k = 1: E e^{-Y_t(1)} = (1+t)^{-1}
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    ImmigrationSpec imm{FiniteMeasure(motion.sites(), vec({1.0})), {}};
    FiniteMeasure mu0 = FiniteMeasure::zero(motion.sites());
    int reps = 1200;
    std::vector<double> laplace(reps);
    for (int i = 0; i < reps; ++i) {
        auto m = simulate_immigration(mech, motion, imm, mu0, 1.0, 200, replicate_seed(7, i));
        laplace[i] = std::exp(-m.total());
    }
    auto s = summarize(laplace);
    CHECK(std::abs(s.mean - 0.5) <= 3.0 * s.se);
}

TEST_CASE("macroscopic clusters match the analytic atom functional") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    ImmigrationSpec imm{FiniteMeasure::zero(motion.sites()),
                        {{1.0, FiniteMeasure(motion.sites(), vec({1.0}))}}};
    // analytic: exp(-int_0^1 (1 - e^{-V_s 1}) ds) from the entrance-law atom
    EntranceLawSpec entrance{
        PEntranceLaw::closed(FiniteMeasure::zero(motion.sites())),
        {{1.0, PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.0})))}}};
    SCSemigroupSpec spec{entrance, mech, motion};
    auto f1 = TestFunction::constant(motion.sites(), 1.0);
    double analytic = std::exp(-sc_log_laplace(spec, f1, 1.0, 1e-3));

    int reps = 1200;
    std::vector<double> laplace(reps);
    for (int i = 0; i < reps; ++i) {
        auto m = simulate_immigration(mech, motion, imm, FiniteMeasure::zero(motion.sites()), 1.0,
                                      200, replicate_seed(70, i));
        laplace[i] = std::exp(-m.total());
    }
    auto s = summarize(laplace);
    CHECK(std::abs(s.mean - analytic) <= 3.0 * s.se);
}

TEST_CASE("immigration decomposes into native mass plus pure immigration") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    ImmigrationSpec imm{FiniteMeasure(motion.sites(), vec({0.8})), {}};
    FiniteMeasure mu0(motion.sites(), vec({1.0}));
    int reps = 1500;
    std::vector<double> full(reps), native(reps), pure(reps);
    for (int i = 0; i < reps; ++i) {
        full[i] = std::exp(
            -simulate_immigration(mech, motion, imm, mu0, 1.0, 150, replicate_seed(100, i))
                 .total());
        native[i] = std::exp(
            -simulate_superprocess(mech, motion, mu0, 1.0, 150, replicate_seed(200, i)).total());
        pure[i] = std::exp(-simulate_immigration(mech, motion, imm,
                                                 FiniteMeasure::zero(motion.sites()), 1.0, 150,
                                                 replicate_seed(300, i))
                                .total());
    }
    auto sf = summarize(full), sn = summarize(native), sp = summarize(pure);
    double lhs = -std::log(sf.mean);
    double rhs = -std::log(sn.mean) - std::log(sp.mean);
    double combined = std::sqrt(std::pow(sf.se / sf.mean, 2) + std::pow(sn.se / sn.mean, 2) +
                                std::pow(sp.se / sp.mean, 2));
    CHECK(std::abs(lhs - rhs) <= 3.0 * combined);
}

TEST_CASE("doubling the scaling level preserves the Laplace law (KS)") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    FiniteMeasure mu0(motion.sites(), vec({1.0}));
    int reps = 800;
    std::vector<double> coarse(reps), fine(reps);
    for (int i = 0; i < reps; ++i) {
        coarse[i] =
            std::exp(-simulate_superprocess(mech, motion, mu0, 1.0, 150, replicate_seed(1, i))
                          .total());
        fine[i] =
            std::exp(-simulate_superprocess(mech, motion, mu0, 1.0, 300, replicate_seed(2, i))
                          .total());
    }
    double d = two_sample_ks(coarse, fine);
    double crit = 1.628 * std::sqrt(2.0 / reps); // alpha = 0.01
    CHECK(d <= crit);
}

TEST_CASE("occupation integral") {
    auto motion = still_site();
    auto mech_free = quadratic_mechanism(motion.sites(), 0.0, 0.0);

    SUBCASE("piecewise-constant occupancy integrates exactly for frozen mass") {
        FiniteMeasure one(motion.sites(), vec({1.0}));
        auto g1 = TestFunction::constant(motion.sites(), 1.0);
        auto sample = occupation_sample(mech_free, motion, one, std::nullopt,
                                        TestFunction::zero(motion.sites()), g1, 2.5, 4, 11);
        CHECK(sample.integral_g == doctest::Approx(2.5).epsilon(1e-14));
    }

    SUBCASE("g = 0 leaves the event stream untouched") {
        auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
        FiniteMeasure mu0(motion.sites(), vec({1.0}));
        auto s = occupation_sample(mech, motion, mu0, std::nullopt,
                                   TestFunction::constant(motion.sites(), 1.0),
                                   TestFunction::zero(motion.sites()), 1.0, 100, 77);
        auto m = simulate_superprocess(mech, motion, mu0, 1.0, 100, 77);
        CHECK(s.integral_g == 0.0);
        CHECK(s.final_state.total() == m.total());
    }

    SUBCASE("tanh closed form for the occupation Laplace") {
        auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
        FiniteMeasure mu0(motion.sites(), vec({1.0}));
        int reps = 1200;
        std::vector<double> joint(reps);
        for (int i = 0; i < reps; ++i) {
            auto s = occupation_sample(mech, motion, mu0, std::nullopt,
                                       TestFunction::zero(motion.sites()),
                                       TestFunction::constant(motion.sites(), 1.0), 1.0, 200,
                                       replicate_seed(55, i));
            joint[i] = std::exp(-(s.value_f + s.integral_g));
        }
        auto st = summarize(joint);
        CHECK(std::abs(st.mean - std::exp(-std::tanh(1.0))) <= 3.0 * st.se); // ~0.46687
    }
}

TEST_CASE("sampled clusters") {
    auto motion = two_state(1.0);
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);

    SUBCASE("at a vanishing probe the cluster is exactly the birth atom") {
        auto ev = sample_cluster(mech, motion, 1, 1e-9, 1000, 5);
        CHECK(ev.path.front().first == 0.0);
        CHECK(ev.path.back().second[1] == doctest::Approx(1e-3).epsilon(1e-15));
        CHECK(ev.path.back().second[0] == 0.0);
        CHECK(ev.path.back().second.total() > 0.0);
    }

    SUBCASE("retained clusters stay concentrated near birth") {
        int clusters = 200;
        double conc = 0.0;
        for (int k = 0; k < clusters; ++k) {
            auto ev = sample_cluster(mech, motion, 0, 0.01, 1000, replicate_seed(9000, k));
            const auto& probe = ev.path.back().second;
            CHECK(probe.total() > 0.0);
            conc += probe[0] / probe.total();
        }
        CHECK(conc / clusters >= 0.95);
    }

    SUBCASE("paths are alive on the whole recorded stretch") {
        auto ev = sample_cluster(mech, motion, 0, 0.05, 500, 21);
        for (const auto& [t, m] : ev.path) CHECK(m.total() > 0.0);
        CHECK(std::is_sorted(ev.path.begin(), ev.path.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; }));
    }

    SUBCASE("retry cap is enforced") {
        // survival to t=1 at n=5000 has probability ~2e-4
        CHECK_THROWS_AS(sample_cluster(mech, motion, 0, 1.0, 5000, 13, 20),
                        ClusterRetryExhausted);
    }
}

TEST_CASE("stationary window read") {
    auto motion = still_site();

    SUBCASE("non-subcritical mechanisms are rejected with guidance") {
        auto critical = quadratic_mechanism(motion.sites(), 0.0, 1.0);
        ImmigrationSpec imm{FiniteMeasure(motion.sites(), vec({1.0})), {}};
        CHECK_THROWS_WITH_AS(simulate_stationary(critical, motion, imm, 10.0, 100, 1),
                             doctest::Contains("subcritical"), std::invalid_argument);
    }

    SUBCASE("zero immigration gives the null measure almost surely") {
        auto mech = quadratic_mechanism(motion.sites(), 1.0, 1.0);
        auto m = simulate_stationary(mech, motion, ImmigrationSpec::none(motion.sites()), 5.0,
                                     100, 3);
        CHECK(m.total() == 0.0);
    }

    SUBCASE("subcritical window read matches the Exp(1) stationary law in mean") {
        auto mech = quadratic_mechanism(motion.sites(), 1.0, 1.0);
        ImmigrationSpec imm{FiniteMeasure(motion.sites(), vec({1.0})), {}};
        int reps = 400;
        std::vector<double> mass(reps), mass_shifted(reps);
        for (int i = 0; i < reps; ++i) {
            mass[i] =
                simulate_stationary(mech, motion, imm, 8.0, 100, replicate_seed(1000, i)).total();
            mass_shifted[i] =
                simulate_stationary(mech, motion, imm, 9.0, 100, replicate_seed(2000, i)).total();
        }
        auto s = summarize(mass);
        CHECK(std::abs(s.mean - 1.0) <= 4.0 * s.se);
        // stationarity: reads at different window lengths share the law
        auto s2 = summarize(mass_shifted);
        double combined = std::sqrt(s.se * s.se + s2.se * s2.se);
        CHECK(std::abs(s.mean - s2.mean) <= 3.0 * combined);
    }
}
