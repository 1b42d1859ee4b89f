#include <doctest.h>

#include <cmath>

#include "exptwist/checks.hpp"
#include "exptwist/oracles.hpp"
#include "exptwist/stats.hpp"
#include "test_support.hpp"

using namespace exptwist;
using testing::vec1;

namespace {

TwistedModel gaussian_twist() {
    const oracles::GaussianQuadratic oracle;
    return TwistedModel{testing::brownian(), oracle.as_value()};
}

TwistedModel poisson_twist() {
    const oracles::PoissonExponential oracle;
    return TwistedModel{testing::poisson_unit(), oracle.as_value()};
}

}  // namespace

TEST_SUITE("generator_check") {

TEST_CASE("carre du champ of the identity is sigma^2") {
    const auto model = make_model("bm", {{"sigma", 2.0}});
    const auto id = TestFunction::coordinate(1, 0);
    CHECK(carre_du_champ(model, id, id, 0.3, vec1(0.4)) ==
          doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("carre du champ kills constants") {
    const auto model = make_model("ou", {{"theta", 1.0}, {"sigma", 1.0}});
    const auto c = TestFunction::constant(3.0);
    const auto id = TestFunction::coordinate(1, 0);
    CHECK(std::abs(carre_du_champ(model, c, id, 0.3, vec1(0.4))) < 1e-8);
}

TEST_CASE("jump part matches lambda E[(dphi)(dpsi)] on the Poisson model") {
    const auto model = testing::poisson_unit(2.0);
    const auto id = TestFunction::coordinate(1, 0);
    CHECK(carre_du_champ(model, id, id, 0.1, vec1(1.0)) ==
          doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("carre du champ is symmetric") {
    const auto model = make_model("ou", {{"theta", 0.8}, {"sigma", 1.3}});
    const auto phi = TestFunction::from_value(
        [](double t, const Vec& x) { return x(0) * x(0) + t; });
    const auto psi = TestFunction::from_value(
        [](double, const Vec& x) { return x(0) * x(0) * x(0); });
    const double a = carre_du_champ(model, phi, psi, 0.4, vec1(0.6));
    const double b = carre_du_champ(model, psi, phi, 0.4, vec1(0.6));
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("diffusion closed form: grad phi . a grad psi on polynomials") {
    const auto model = make_model("bm", {{"sigma", 1.5}});
    const auto phi = TestFunction::from_value(
        [](double, const Vec& x) { return x(0) * x(0); });
    const auto psi = TestFunction::from_value(
        [](double, const Vec& x) { return 2.0 * x(0) + 1.0; });
    FdOptions fd;
    fd.fd_step = 1e-4;
    for (double x : {-1.0, 0.3, 2.0}) {
        const double got = carre_du_champ(model, phi, psi, 0.2, vec1(x), fd);
        const double expected = (2.0 * x) * (1.5 * 1.5) * 2.0;
        CHECK(std::abs(got - expected) < 1e-6);
    }
}

TEST_CASE("twisted generator reduces to the reference one for null costs") {
    TwistedModel twisted{make_model("ou", {{"theta", 1.0}, {"sigma", 1.0}}),
                         *oracles::resolve_hint("null")};
    const auto phi = TestFunction::from_value(
        [](double t, const Vec& x) { return std::cos(x(0)) + t * x(0); });
    for (double x : {-0.5, 0.0, 1.2}) {
        const double a = twisted_generator_apply(twisted, phi, 0.3, vec1(x));
        const double b = eval_generator(twisted.base, phi, 0.3, vec1(x));
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("twisted generator of the identity is the corrected drift") {
    const auto twisted = gaussian_twist();
    const auto id = TestFunction::coordinate(1, 0);
    CHECK(twisted_generator_apply(twisted, id, 0.0, vec1(1.0)) ==
          doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("twisted Poisson generator of the identity is the twisted rate") {
    const auto twisted = poisson_twist();
    const auto id = TestFunction::coordinate(1, 0);
    for (double x : {0.0, 1.0, 3.0}) {
        CHECK(twisted_generator_apply(twisted, id, 0.4, vec1(x)) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("twist consistency: a_Q* - a_P equals the Gamma correction") {
    const auto twisted = gaussian_twist();
    const auto phi = TestFunction::from_value(
        [](double, const Vec& x) { return x(0) * x(0); });
    for (double x : {-1.0, 0.5, 1.5}) {
        const Vec p = vec1(x);
        const double lhs = twisted_generator_apply(twisted, phi, 0.2, p) -
                           eval_generator(twisted.base, phi, 0.2, p);
        const double v = twisted.value(0.2, p);
        const double rhs =
            (2.0 * x) * generalized_gradient(twisted, 0.2, p)(0) / v;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("martingale residual passes on the null model") {
    TwistedModel twisted{testing::brownian(), *oracles::resolve_hint("null")};
    const auto report =
        martingale_residual(twisted, TestFunction::coordinate(1, 0),
                            TimeGrid(1.0, 100), 4000, {501, 0}, 5);
    CHECK(report.pass);
}

TEST_CASE("martingale residual: pass with b*, fail with the uncorrected drift") {
    const auto twisted = gaussian_twist();
    const TimeGrid grid(1.0, 200);
    const auto id = TestFunction::coordinate(1, 0);

    const auto good =
        martingale_residual(twisted, id, grid, 5000, {502, 0}, 6);
    CHECK(good.pass);

    MartingaleOptions wrong;
    wrong.simulation_drift_override = twisted.base.drift;  // forgets Gamma(v)/v
    const auto bad =
        martingale_residual(twisted, id, grid, 5000, {502, 0}, 6, wrong);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_z > good.max_z);
}

TEST_CASE("martingale residual covers twisted jumps") {
    const auto twisted = poisson_twist();
    const auto report =
        martingale_residual(twisted, TestFunction::coordinate(1, 0),
                            TimeGrid(1.0, 100), 4000, {503, 0}, 4);
    CHECK(report.pass);
}

TEST_CASE("martingale residual handles state-dependent intensities") {
    // rate lambda(x) = 1 + 0.5/(1+x^2); two independent routes again: the
    // thinning simulation versus the generator's kernel integral
    auto model = testing::poisson_unit(1.0);
    model.jump->intensity = [](double, const Vec& x) {
        return 1.0 + 0.5 / (1.0 + x(0) * x(0));
    };
    AnalyticValue v;  // mild state-dependent tilt
    v.value = [](double, const Vec& x) {
        return std::exp(-0.2 * std::abs(x(0))) * 0.9 + 0.05;
    };
    TwistedModel twisted{model, v};
    const auto report =
        martingale_residual(twisted, TestFunction::coordinate(1, 0),
                            TimeGrid(1.0, 200), 4000, {509, 0}, 4);
    CHECK(report.pass);
}

TEST_CASE("PDE residual of the Gaussian oracle is finite-difference small") {
    const oracles::GaussianQuadratic oracle;
    const ValueSource source = oracle.as_value();
    std::vector<std::pair<double, Vec>> probes;
    for (double t : {0.1, 0.5, 0.9})
        for (double x : {-1.0, 0.0, 1.0, 2.0}) probes.emplace_back(t, vec1(x));
    PdeOptions opt;
    opt.fd_step = 1e-4;
    const auto report = pde_residual(source, testing::brownian(),
                                     testing::quadratic_cost(), probes, opt);
    CHECK(report.max_abs_residual < 1e-6);
}

TEST_CASE("PDE residual of the Poisson oracle uses the jump generator") {
    const oracles::PoissonExponential oracle;
    const ValueSource source = oracle.as_value();
    std::vector<std::pair<double, Vec>> probes;
    for (double t : {0.1, 0.5, 0.9})
        for (double x : {0.0, 1.0, 2.0}) probes.emplace_back(t, vec1(x));
    PdeOptions opt;
    opt.fd_step = 1e-4;
    const auto report = pde_residual(source, testing::poisson_unit(),
                                     testing::linear_cost(std::log(2.0), 2.0),
                                     probes, opt);
    CHECK(report.max_abs_residual < 1e-8);
}

TEST_CASE("null-cost surface has zero residual everywhere") {
    SpaceBox box{vec1(-3.0), vec1(3.0), {9}};
    const auto surface =
        build_value_surface(testing::brownian(), testing::null_cost(),
                            TimeGrid(1.0, 20), box, 5, 16, {504, 0});
    PdeOptions opt;
    opt.sim_dt = 0.05;
    const auto report = pde_residual(surface, testing::brownian(),
                                     testing::null_cost(), {}, opt);
    CHECK(report.pass);
    CHECK(report.max_abs_residual == 0.0);
}

TEST_CASE("Monte Carlo surface residuals stay inside the propagated band") {
    SpaceBox box{vec1(-4.0), vec1(4.0), {21}};
    const TimeGrid grid(1.0, 100);
    const auto surface =
        build_value_surface(testing::brownian(), testing::quadratic_cost(), grid,
                            box, 11, 1500, {505, 0});
    PdeOptions opt;
    opt.sim_dt = grid.dt();
    const auto report =
        pde_residual(surface, testing::brownian(), testing::quadratic_cost(), {}, opt);
    CHECK(report.nodes.size() > 0);
    CHECK(report.pass);
}

TEST_CASE("integrability probe is zero for the null twist") {
    TwistedModel twisted{testing::brownian(), *oracles::resolve_hint("null")};
    const auto report =
        integrability_probe(twisted, TimeGrid(1.0, 50), 500, 1.5, {506, 0});
    CHECK(report.estimate == 0.0);
}

TEST_CASE("integrability probe matches the Gaussian-marginal quadrature oracle") {
    const auto twisted = gaussian_twist();
    const TimeGrid grid(1.0, 200);
    const auto report =
        integrability_probe(twisted, grid, 4000, 1.5, {507, 0});

    // oracle: int_0^1 E|X_t|^1.5 / (2-t)^1.5 dt with X_t ~ N(0, t(2-t)/2)
    // under the twist; Simpson quadrature, E|Z|^p in closed form.
    const double p = 1.5;
    const double abs_moment = abs_normal_moment(p);
    auto integrand = [&](double t) {
        const double s = t * (2.0 - t) / 2.0;
        return abs_moment * std::pow(s, 0.5 * p) / std::pow(2.0 - t, p);
    };
    const int m = 2000;
    double oracle = integrand(0.0) + integrand(1.0);
    for (int i = 1; i < m; ++i) {
        const double t = static_cast<double>(i) / m;
        oracle += (i % 2 == 1 ? 4.0 : 2.0) * integrand(t);
    }
    oracle /= 3.0 * m;

    CHECK(std::abs(report.estimate - oracle) < 3.0 * report.stderr + 0.01);
    CHECK(report.relative_drift < 0.1);
}

TEST_CASE("probe rejects exponents outside (1,2)") {
    const auto twisted = gaussian_twist();
    CHECK_THROWS_AS(
        integrability_probe(twisted, TimeGrid(1.0, 10), 10, 2.5, {1, 0}),
        std::invalid_argument);
}

}  // TEST_SUITE
