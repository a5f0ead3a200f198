#include <doctest.h>

#include "mvb/sc_semigroup.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace mvb;
using namespace mvbtest;

namespace {

// one site, Q = 0, phi(z) = z^2, kappa closed by rate k: the workhorse model
SCSemigroupSpec riccati_spec(double k) {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    EntranceLawSpec entrance{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({k}))), {}};
    return SCSemigroupSpec{entrance, mech, motion};
}

SCSemigroupSpec logistic_spec(double b, double c, double k) {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), b, c);
    EntranceLawSpec entrance{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({k}))), {}};
    return SCSemigroupSpec{entrance, mech, motion};
}

// the mixed two-state ingredient family shared with the bundled config
struct MixedFixture {
    MotionModel motion = two_state(1.0);
    BranchingMechanism mech{motion.sites(), vec({0.2, 0.1}), vec({0.6, 0.8}), {}};
    TestFunction f{motion.sites(), vec({1.0, 0.5})};
    InhomogeneousSCSpec spec;

    MixedFixture() {
        auto sites = motion.sites();
        EntranceLawSpec open_law{PEntranceLaw::closed(FiniteMeasure(sites, vec({0.5, 0.5}))), {}};
        spec.step_open.push_back({0.25, open_law});

        ClosedInitialLaw closed_law{FiniteMeasure(sites, vec({0.2, 0.1})),
                                    {{0.4, FiniteMeasure(sites, vec({0.3, 0.3}))}}};
        spec.step_closed.push_back({0.5, closed_law});

        EntranceLawSpec cont_law{PEntranceLaw::closed(FiniteMeasure(sites, vec({0.3, 0.7}))),
                                 {{0.5, PEntranceLaw::closed(FiniteMeasure(sites, vec({0.2, 0.2})))}}};
        spec.continuous = ContinuousPart{{{0.0, 1.0, 1.0}}, cont_law};
    }
};

} // namespace

TEST_CASE("entrance log-Laplace functional") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    auto f1 = TestFunction::constant(motion.sites(), 1.0);

    SUBCASE("no atoms reduces to the s-functional") {
        EntranceLawSpec spec{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.0}))), {}};
        CHECK(std::abs(entrance_log_laplace(spec, mech, motion, f1, 1.0, 1e-3) - 0.5) <= 1e-6);
    }
    SUBCASE("single atom contributes 1 - e^{-S}") {
        EntranceLawSpec spec{PEntranceLaw::closed(FiniteMeasure::zero(motion.sites())),
                             {{1.0, PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.0})))}}};
        double v = entrance_log_laplace(spec, mech, motion, f1, 1.0, 1e-3);
        CHECK(std::abs(v - (1.0 - std::exp(-0.5))) <= 1e-6); // ~0.39347
    }
    SUBCASE("vanishes at f = 0 and decreases along the ladder") {
        EntranceLawSpec spec{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.0}))),
                             {{0.5, PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({2.0})))}}};
        CHECK(entrance_log_laplace(spec, mech, motion, TestFunction::zero(motion.sites()), 1.0,
                                   1e-3) == 0.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double lam : {1.0, 0.1, 0.01}) {
            double v = entrance_log_laplace(spec, mech, motion,
                                            TestFunction::constant(motion.sites(), lam), 1.0, 1e-3);
            CHECK(v >= 0.0);
            CHECK(v < prev);
            prev = v;
        }
        CHECK(prev <= 0.02); // -> 0 as f -> 0
    }
}

TEST_CASE("homogeneous J functional") {
    auto f1 = TestFunction::constant(SiteSet::indexed(1), 1.0);

    SUBCASE("Riccati closed form: J_1 = log 2") {
        auto spec = riccati_spec(1.0);
        CHECK(std::abs(sc_log_laplace(spec, f1, 1.0, 1e-3) - std::log(2.0)) <= 1e-5);
    }
    SUBCASE("t = 0 gives 0") {
        CHECK(sc_log_laplace(riccati_spec(1.0), f1, 0.0, 1e-3) == 0.0);
    }
    SUBCASE("linearity in the closed entrance seed") {
        double j1 = sc_log_laplace(riccati_spec(1.0), f1, 1.0, 1e-3);
        double j2 = sc_log_laplace(riccati_spec(2.0), f1, 1.0, 1e-3);
        CHECK(std::abs(j2 - 2.0 * j1) <= 1e-10);
        CHECK(std::abs(j2 - 2.0 * std::log(2.0)) <= 2e-5);
    }
    SUBCASE("spot check accepts the Riccati spec") {
        CHECK_NOTHROW(spot_check_entrance(riccati_spec(1.0), 1e-3));
    }
}

TEST_CASE("skew identity for the homogeneous family") {
    auto spec = riccati_spec(1.0);
    auto f1 = TestFunction::constant(spec.motion.sites(), 1.0);

    SUBCASE("closed-form cross check log 3 = log(3/2) + log 2") {
        CHECK(std::abs(sc_log_laplace(spec, f1, 2.0, 1e-3) - std::log(3.0)) <= 1e-5);
        auto half = TestFunction::constant(spec.motion.sites(), 0.5); // V_1 f
        CHECK(std::abs(sc_log_laplace(spec, half, 1.0, 1e-3) - std::log(1.5)) <= 1e-5);
        CHECK(skew_identity_residual(spec, f1, 1.0, 1.0, 1e-3) <= 1e-5);
    }
    SUBCASE("r = 0 leaves no residual") {
        CHECK(skew_identity_residual(spec, f1, 0.0, 0.7, 1e-3) <= 1e-9);
    }
    SUBCASE("f = 0 leaves exactly zero") {
        CHECK(skew_identity_residual(spec, TestFunction::zero(spec.motion.sites()), 1.0, 1.0,
                                     1e-3) == 0.0);
    }
}

TEST_CASE("transition log-Laplace of the immigration semigroup") {
    auto spec = riccati_spec(1.0);
    auto f1 = TestFunction::constant(spec.motion.sites(), 1.0);
    FiniteMeasure mu(spec.motion.sites(), vec({1.0}));

    CHECK(transition_log_laplace(mu, spec, f1, 0.0, 1e-3) == 1.0); // mu(f) at t=0
    CHECK(std::abs(transition_log_laplace(FiniteMeasure::zero(spec.motion.sites()), spec, f1, 1.0,
                                          1e-3) -
                   std::log(2.0)) <= 1e-5);
    CHECK(std::abs(transition_log_laplace(mu, spec, f1, 1.0, 1e-3) - (0.5 + std::log(2.0))) <=
          1e-5);
}

TEST_CASE("log-Laplace functionals add under convolution and split infinitely divisibly") {
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.3, 0.9);
    auto f = TestFunction::constant(motion.sites(), 1.4);

    EntranceLawSpec a{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({0.7}))),
                      {{0.6, PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.1})))}}};
    EntranceLawSpec b{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({0.4}))),
                      {{1.2, PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({0.2})))}}};

    SUBCASE("merged spec equals the sum of functionals") {
        EntranceLawSpec merged{
            PEntranceLaw::closed(FiniteMeasure(
                motion.sites(), a.kappa.mu0.masses() + b.kappa.mu0.masses())),
            {a.atoms[0], b.atoms[0]}};
        double sum = entrance_log_laplace(a, mech, motion, f, 1.0, 1e-3) +
                     entrance_log_laplace(b, mech, motion, f, 1.0, 1e-3);
        double whole = entrance_log_laplace(merged, mech, motion, f, 1.0, 1e-3);
        CHECK(std::abs(whole - sum) <= 1e-12);
    }

    SUBCASE("n-fold split reproduces the functional") {
        const int n = 7;
        EntranceLawSpec piece{
            PEntranceLaw::closed(FiniteMeasure(motion.sites(), a.kappa.mu0.masses() / n)),
            {{a.atoms[0].weight / n, a.atoms[0].law}}};
        double whole = entrance_log_laplace(a, mech, motion, f, 1.0, 1e-3);
        double split = n * entrance_log_laplace(piece, mech, motion, f, 1.0, 1e-3);
        CHECK(std::abs(whole - split) <= 1e-12 * std::max(1.0, whole));
    }
}

TEST_CASE("inhomogeneous assembly") {
    MixedFixture fix;

    SUBCASE("no ingredients means the unit mass at the null measure") {
        InhomogeneousSCSpec empty;
        CHECK(inhomogeneous_log_laplace(empty, fix.mech, fix.motion, fix.f, 0.0, 1.0, 1e-3) ==
              0.0);
    }

    SUBCASE("a single open step atom evaluates at horizon t - s0") {
        InhomogeneousSCSpec one;
        one.step_open.push_back(fix.spec.step_open[0]);
        double whole = inhomogeneous_log_laplace(one, fix.mech, fix.motion, fix.f, 0.0, 1.0, 1e-3);
        double direct = entrance_log_laplace(fix.spec.step_open[0].law, fix.mech, fix.motion,
                                             fix.f, 0.75, 1e-3);
        CHECK(whole == doctest::Approx(direct).epsilon(1e-12));
    }

    SUBCASE("constant-rate diffuse part collapses to the homogeneous functional") {
        InhomogeneousSCSpec cont;
        EntranceLawSpec law{PEntranceLaw::closed(FiniteMeasure(fix.motion.sites(), vec({0.3, 0.7}))),
                            {}};
        cont.continuous = ContinuousPart{{{-5.0, 5.0, 1.0}}, law};
        double inhom =
            inhomogeneous_log_laplace(cont, fix.mech, fix.motion, fix.f, 0.25, 1.25, 1e-3);
        SCSemigroupSpec hom{law, fix.mech, fix.motion};
        double direct = sc_log_laplace(hom, fix.f, 1.0, 1e-3);
        CHECK(std::abs(inhom - direct) <= 1e-8);
    }

    SUBCASE("half-open membership is exact at the endpoints") {
        InhomogeneousSCSpec open_only;
        open_only.step_open.push_back({0.5, fix.spec.step_open[0].law});
        // r on the atom time includes it
        CHECK(inhomogeneous_log_laplace(open_only, fix.mech, fix.motion, fix.f, 0.5, 1.0, 1e-3) >
              0.0);
        // t on the atom time excludes it
        CHECK(inhomogeneous_log_laplace(open_only, fix.mech, fix.motion, fix.f, 0.0, 0.5, 1e-3) ==
              0.0);

        InhomogeneousSCSpec closed_only;
        closed_only.step_closed.push_back(fix.spec.step_closed[0]);
        // r on the atom time excludes it
        CHECK(inhomogeneous_log_laplace(closed_only, fix.mech, fix.motion, fix.f, 0.5, 1.0,
                                        1e-3) == 0.0);
        // t on the atom time includes it (horizon-zero closed value)
        double at_t = inhomogeneous_log_laplace(closed_only, fix.mech, fix.motion, fix.f, 0.0, 0.5,
                                                1e-3);
        CHECK(at_t == doctest::Approx(fix.spec.step_closed[0].law.log_laplace(fix.f.values()))
                          .epsilon(1e-12));
    }
}

TEST_CASE("inhomogeneous composition axiom") {
    MixedFixture fix;

    SUBCASE("degenerate splits leave no residual") {
        CHECK(sc_axiom_residual(fix.spec, fix.mech, fix.motion, fix.f, 0.0, 0.0, 1.0, 1e-3) <=
              1e-9);
        CHECK(sc_axiom_residual(fix.spec, fix.mech, fix.motion, fix.f, 0.0, 1.0, 1.0, 1e-3) <=
              1e-9);
    }
    SUBCASE("mixed family satisfies the axiom") {
        CHECK(sc_axiom_residual(fix.spec, fix.mech, fix.motion, fix.f, 0.0, 0.5, 1.0, 1e-3) <=
              1e-5);
        CHECK(sc_axiom_residual(fix.spec, fix.mech, fix.motion, fix.f, 0.0, 0.25, 0.75, 1e-3) <=
              1e-5);
    }
    SUBCASE("f = 0 leaves exactly zero") {
        CHECK(sc_axiom_residual(fix.spec, fix.mech, fix.motion,
                                TestFunction::zero(fix.motion.sites()), 0.0, 0.5, 1.0,
                                1e-3) == 0.0);
    }
}

TEST_CASE("long-time limit of the J functional") {
    auto f1 = TestFunction::constant(SiteSet::indexed(1), 1.0);

    SUBCASE("subcritical logistic converges to (k/c) log(1 + c/b)") {
        auto spec = logistic_spec(1.0, 1.0, 1.0);
        auto res = longtime_decompose(spec, f1, 1e-7, 1e-3);
        CHECK(!res.diverged);
        CHECK(std::abs(res.value - std::log(2.0)) <= 1e-5);
    }
    SUBCASE("critical model is flagged divergent") {
        auto spec = riccati_spec(1.0);
        auto res = longtime_decompose(spec, f1, 1e-7, 5e-3);
        CHECK(res.diverged);
    }
    SUBCASE("supercritical drift is flagged divergent") {
        auto spec = logistic_spec(-0.5, 1.0, 1.0);
        auto res = longtime_decompose(spec, f1, 1e-7, 5e-3);
        CHECK(res.diverged);
    }
    SUBCASE("f = 0 converges to 0 immediately") {
        auto spec = logistic_spec(1.0, 1.0, 1.0);
        auto res = longtime_decompose(spec, TestFunction::zero(spec.motion.sites()), 1e-7, 1e-3);
        CHECK(!res.diverged);
        CHECK(res.value == 0.0);
    }
}

TEST_CASE("occupation immigration exponent matches the log cosh closed form") {
    // kappa rate 1, f = 0, g = 1 on the still site with phi = z^2:
    // S_r(kappa, 0, 1) = tanh r, so the exponent integrates to log cosh 1
    auto motion = still_site();
    auto mech = quadratic_mechanism(motion.sites(), 0.0, 1.0);
    EntranceLawSpec spec{PEntranceLaw::closed(FiniteMeasure(motion.sites(), vec({1.0}))), {}};
    double v = occupation_immigration_exponent(spec, mech, motion,
                                               TestFunction::zero(motion.sites()),
                                               TestFunction::constant(motion.sites(), 1.0), 1.0,
                                               1e-3);
    CHECK(std::abs(v - std::log(std::cosh(1.0))) <= 1e-6); // ~0.43378
}
