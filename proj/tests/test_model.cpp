#include <doctest.h>

#include <cmath>

#include "exptwist/errors.hpp"
#include "exptwist/generator.hpp"
#include "exptwist/model.hpp"
#include "test_support.hpp"

using namespace exptwist;
using testing::vec1;

namespace {

std::vector<std::pair<double, Vec>> probes_01() {
    return {{0.0, vec1(0.0)}, {1.0, vec1(1.0)}};
}

}  // namespace

TEST_SUITE("model_core") {

TEST_CASE("validate accepts the basic quadratic model") {
    const auto model = testing::brownian();
    const auto cost = testing::quadratic_cost(1.0);
    const auto report = validate_model(model, cost, TimeGrid(1.0, 10), probes_01());
    CHECK(report.valid());
}

TEST_CASE("validate flags a negative terminal cost") {
    auto model = testing::brownian();
    CostSpec cost;
    cost.terminal = [](const Vec&) { return -1.0; };
    const auto report = validate_model(model, cost, TimeGrid(1.0, 10), probes_01());
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations) found |= v.what.find("g < 0") == 0;
    CHECK(found);
}

TEST_CASE("validate flags a negative jump intensity") {
    auto model = testing::poisson_unit();
    model.jump->intensity = [](double, const Vec&) { return -2.0; };
    const auto report =
        validate_model(model, testing::null_cost(), TimeGrid(1.0, 10), probes_01());
    REQUIRE_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
        found |= v.what.find("intensity negative") != std::string::npos;
    CHECK(found);
}

TEST_CASE("validate reports evaluator failures with the probe") {
    auto model = testing::brownian();
    model.drift = [](double t, const Vec&) -> Vec {
        if (t > 0.5) throw std::runtime_error("boom");
        return Vec::Zero(1);
    };
    const auto report =
        validate_model(model, testing::null_cost(), TimeGrid(1.0, 10), probes_01());
    REQUIRE_FALSE(report.valid());
    CHECK(report.violations.front().t == doctest::Approx(1.0));
    CHECK(report.violations.front().what.find("boom") != std::string::npos);
}

TEST_CASE("validate flags non-finite coefficients") {
    auto model = testing::brownian();
    model.diffusion = [](double, const Vec&) {
        return Mat::Constant(1, 1, std::numeric_limits<double>::infinity());
    };
    const auto report =
        validate_model(model, testing::null_cost(), TimeGrid(1.0, 10), probes_01());
    CHECK_FALSE(report.valid());
}

TEST_CASE("generator of x^2 under unit Brownian motion is 1") {
    const auto model = testing::brownian();
    const auto phi =
        TestFunction::from_value([](double, const Vec& x) { return x(0) * x(0); });
    CHECK(eval_generator(model, phi, 0.3, vec1(0.7)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("generator picks up a constant drift through the gradient") {
    const auto model = make_model("const_drift", {{"mu", 2.5}, {"sigma", 1.0}});
    const auto phi = TestFunction::coordinate(1, 0);
    CHECK(eval_generator(model, phi, 0.1, vec1(-0.4)) == doctest::Approx(2.5));
}

TEST_CASE("generator jump term: rate 2, unit jumps, identity") {
    // a(phi) = lambda (phi(x+1) - phi(x)) = 2 for phi = id
    auto model = testing::poisson_unit(2.0);
    const auto phi = TestFunction::coordinate(1, 0);
    CHECK(eval_generator(model, phi, 0.2, vec1(3.0)) == doctest::Approx(2.0));
}

TEST_CASE("generator is linear in the test function") {
    const auto model = make_model("ou", {{"theta", 1.3}, {"sigma", 0.8}});

    // derivatives supplied: linearity holds to rounding
    TestFunction phi1;
    phi1.value = [](double t, const Vec& x) { return x(0) * x(0) + t; };
    phi1.time_deriv = [](double, const Vec&) { return 1.0; };
    phi1.gradient = [](double, const Vec& x) { return vec1(2.0 * x(0)); };
    phi1.hessian = [](double, const Vec&) { return Mat::Constant(1, 1, 2.0); };
    TestFunction phi2;
    phi2.value = [](double t, const Vec& x) { return std::sin(x(0)) + t * x(0); };
    phi2.time_deriv = [](double, const Vec& x) { return x(0); };
    phi2.gradient = [](double t, const Vec& x) { return vec1(std::cos(x(0)) + t); };
    phi2.hessian = [](double, const Vec& x) {
        return Mat::Constant(1, 1, -std::sin(x(0)));
    };

    TestFunction combo;
    combo.value = [&](double t, const Vec& x) {
        return 2.0 * phi1.value(t, x) - 3.0 * phi2.value(t, x);
    };
    combo.time_deriv = [&](double t, const Vec& x) {
        return 2.0 * phi1.time_deriv(t, x) - 3.0 * phi2.time_deriv(t, x);
    };
    combo.gradient = [&](double t, const Vec& x) {
        return Vec(2.0 * phi1.gradient(t, x) - 3.0 * phi2.gradient(t, x));
    };
    combo.hessian = [&](double t, const Vec& x) {
        return Mat(2.0 * phi1.hessian(t, x) - 3.0 * phi2.hessian(t, x));
    };

    const double t = 0.4;
    const Vec x = vec1(0.9);
    const double lhs = eval_generator(model, combo, t, x);
    const double rhs =
        2.0 * eval_generator(model, phi1, t, x) - 3.0 * eval_generator(model, phi2, t, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    // pure finite-difference route: linear up to second-difference roundoff
    const auto fd1 = TestFunction::from_value(phi1.value);
    const auto fd2 = TestFunction::from_value(phi2.value);
    const auto fd_combo = TestFunction::linear_combination(2.0, fd1, -3.0, fd2);
    const double fd_lhs = eval_generator(model, fd_combo, t, x);
    const double fd_rhs =
        2.0 * eval_generator(model, fd1, t, x) - 3.0 * eval_generator(model, fd2, t, x);
    CHECK(std::abs(fd_lhs - fd_rhs) < 1e-6);
}

TEST_CASE("generator kills constants") {
    const auto model = make_model("ou", {{"theta", 0.7}, {"sigma", 1.1}});
    const auto phi = TestFunction::from_value([](double, const Vec&) { return 42.0; });
    CHECK(std::abs(eval_generator(model, phi, 0.5, vec1(1.0))) < 1e-8);
}

TEST_CASE("finite differences converge at second order on x^4") {
    const auto model = testing::brownian();
    const auto phi = TestFunction::from_value(
        [](double, const Vec& x) { return std::pow(x(0), 4.0); });
    const Vec x = vec1(1.3);
    const double exact = 0.5 * 12.0 * 1.3 * 1.3;  // 1/2 sigma^2 phi''
    FdOptions coarse, fine;
    coarse.fd_step = 0.2;
    fine.fd_step = 0.1;
    const double err_coarse = std::abs(eval_generator(model, phi, 0.2, x, coarse) - exact);
    const double err_fine = std::abs(eval_generator(model, phi, 0.2, x, fine) - exact);
    const double ratio = err_coarse / err_fine;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("non-finite stencil raises a numerical error") {
    const auto model = testing::brownian();
    const auto phi = TestFunction::from_value([](double, const Vec& x) {
        return x(0) > 1.0 ? std::numeric_limits<double>::infinity() : x(0);
    });
    CHECK_THROWS_AS(eval_generator(model, phi, 0.2, vec1(1.0)), NumericalError);
}

TEST_CASE("Gaussian jump law expectation uses quadrature") {
    // E[q^2] for q ~ N(m, s^2) is m^2 + s^2
    auto model = make_model("cpg", {{"lambda", 1.0}, {"jump_mean", 0.3},
                                    {"jump_std", 0.7}});
    const double got = jump_size_expectation(
        *model.jump, 0.0, vec1(0.0), [](const Vec& q) { return q(0) * q(0); });
    CHECK(got == doctest::Approx(0.3 * 0.3 + 0.7 * 0.7).epsilon(1e-10));
}

}  // TEST_SUITE
