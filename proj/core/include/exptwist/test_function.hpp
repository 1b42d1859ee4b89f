#pragma once

#include <functional>

#include "exptwist/model.hpp"

namespace exptwist {

// Scalar test function phi(t,x). Derivatives are optional: the generator
// falls back to central finite differences for any that are missing.
struct TestFunction {
    ScalarField value;
    ScalarField time_deriv;
    std::function<Vec(double, const Vec&)> gradient;
    std::function<Mat(double, const Vec&)> hessian;

    double operator()(double t, const Vec& x) const { return value(t, x); }

    static TestFunction from_value(ScalarField v) {
        TestFunction f;
        f.value = std::move(v);
        return f;
    }

    // phi(t,x) = x_i, with exact derivatives.
    static TestFunction coordinate(Eigen::Index dim, Eigen::Index i) {
        TestFunction f;
        f.value = [i](double, const Vec& x) { return x(i); };
        f.time_deriv = [](double, const Vec&) { return 0.0; };
        f.gradient = [dim, i](double, const Vec&) {
            Vec g = Vec::Zero(dim);
            g(i) = 1.0;
            return g;
        };
        f.hessian = [dim](double, const Vec&) { return Mat::Zero(dim, dim); };
        return f;
    }

    static TestFunction constant(double c) {
        TestFunction f;
        f.value = [c](double, const Vec&) { return c; };
        f.time_deriv = [](double, const Vec&) { return 0.0; };
        return f;
    }

    // Pointwise product; derivatives intentionally dropped so evaluation goes
    // through the same finite-difference path as any opaque function.
    static TestFunction product(const TestFunction& a, const TestFunction& b) {
        TestFunction f;
        f.value = [av = a.value, bv = b.value](double t, const Vec& x) {
            return av(t, x) * bv(t, x);
        };
        return f;
    }

    static TestFunction linear_combination(double alpha, const TestFunction& a,
                                           double beta, const TestFunction& b) {
        TestFunction f;
        f.value = [alpha, av = a.value, beta, bv = b.value](double t, const Vec& x) {
            return alpha * av(t, x) + beta * bv(t, x);
        };
        return f;
    }
};

}  // namespace exptwist
