#pragma once

#include <cmath>

#include "exptwist/families.hpp"
#include "exptwist/model.hpp"

namespace exptwist::testing {

inline Vec vec1(double x) {
    Vec v(1);
    v(0) = x;
    return v;
}

// Driftless 1-d Brownian motion, unit volatility.
inline ModelSpec brownian(double x0 = 0.0, double sigma = 1.0) {
    return make_model("bm", {{"sigma", sigma}, {"x0", x0}});
}

// g(x) = gamma x^2, no running cost.
inline CostSpec quadratic_cost(double gamma = 0.5, double sigma = 1.0,
                               double horizon = 1.0) {
    return make_cost("quadratic", {{"gamma", gamma}}, "bm", {{"sigma", sigma}},
                     horizon);
}

// Unit-jump Poisson process with rate lambda.
inline ModelSpec poisson_unit(double lambda = 2.0, double x0 = 0.0) {
    return make_model("poisson_unit", {{"lambda", lambda}, {"x0", x0}});
}

inline CostSpec linear_cost(double coeff, double lambda, double horizon = 1.0) {
    return make_cost("linear", {{"coeff", coeff}}, "poisson_unit",
                     {{"lambda", lambda}}, horizon);
}

inline CostSpec null_cost() { return make_cost("null", {}, "bm", {}, 1.0); }

}  // namespace exptwist::testing
