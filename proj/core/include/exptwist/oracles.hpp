#pragma once

#include <optional>
#include <string>

#include "exptwist/model.hpp"
#include "exptwist/value_surface.hpp"

namespace exptwist::oracles {

// Closed-form value function for driftless Brownian motion in d=1 with
// terminal cost g(x) = gamma x^2 and f = 0:
//   v(t,x) = (1 + 2 gamma s2 tau)^{-1/2} exp(-gamma x^2 / (1 + 2 gamma s2 tau)),
// where tau = T - t and s2 = sigma^2. Everything downstream (normalizer,
// twisted terminal law, entropy, optimal cost) follows from it.
struct GaussianQuadratic {
    double gamma = 0.5;
    double sigma = 1.0;
    double horizon = 1.0;

    double denom(double t) const {
        return 1.0 + 2.0 * gamma * sigma * sigma * (horizon - t);
    }
    double value(double t, double x) const {
        return std::exp(-gamma * x * x / denom(t)) / std::sqrt(denom(t));
    }
    // dv/dx and d log v/dx
    double grad(double t, double x) const {
        return value(t, x) * grad_log(t, x);
    }
    double grad_log(double t, double x) const { return -2.0 * gamma * x / denom(t); }

    // -log E[exp(-gamma X_T^2)] from X_0 = x0
    double minus_log_z(double x0) const { return -std::log(value(0.0, x0)); }
    // terminal law under the twist started at x0
    double twisted_terminal_mean(double x0) const { return x0 / denom(0.0); }
    double twisted_terminal_var() const { return sigma * sigma * horizon / denom(0.0); }
    // E_{Q*}[phi] with phi = gamma X_T^2
    double mean_phi_twisted(double x0) const {
        const double m = twisted_terminal_mean(x0);
        return gamma * (twisted_terminal_var() + m * m);
    }
    double entropy(double x0) const {
        return minus_log_z(x0) - mean_phi_twisted(x0);
    }
    // Var of X_t under the twist started at 0
    double twisted_marginal_var(double t) const {
        const double s2 = sigma * sigma;
        return s2 * t * denom(t) / denom(0.0);
    }

    AnalyticValue as_value() const {
        AnalyticValue av;
        av.value = [*this](double t, const Vec& x) { return value(t, x(0)); };
        av.gradient = [*this](double t, const Vec& x) {
            Vec g(1);
            g(0) = grad(t, x(0));
            return g;
        };
        return av;
    }
};

// Closed-form value function for a unit-jump Poisson process with rate
// lambda, f = 0 and g(x) = c x:
//   v(t,x) = exp(-c x - lambda (T-t)(1 - e^{-c})).
struct PoissonExponential {
    double lambda = 2.0;
    double c = 0.6931471805599453;  // ln 2
    double horizon = 1.0;

    double value(double t, double x) const {
        return std::exp(-c * x - lambda * (horizon - t) * (1.0 - std::exp(-c)));
    }
    double value_ratio() const { return std::exp(-c); }  // v(t,x+1)/v(t,x)
    double twisted_rate() const { return lambda * value_ratio(); }
    double minus_log_z(double x0) const { return -std::log(value(0.0, x0)); }
    double mean_jump_count_twisted() const { return twisted_rate() * horizon; }

    AnalyticValue as_value() const {
        AnalyticValue av;
        av.value = [*this](double t, const Vec& x) { return value(t, x(0)); };
        av.gradient = [*this](double t, const Vec& x) {
            Vec g(1);
            g(0) = -c * value(t, x(0));
            return g;
        };
        return av;
    }
};

// Resolves a CostSpec::analytic_hint; empty optional when the hint is unknown
// or empty. Hints produced by the built-in families:
//   "gaussian_quadratic:<gamma>:<sigma>:<T>"
//   "poisson_exponential:<lambda>:<c>:<T>"
//   "null"
std::optional<AnalyticValue> resolve_hint(const std::string& hint);

}  // namespace exptwist::oracles
