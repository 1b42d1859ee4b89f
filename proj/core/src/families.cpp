#include "exptwist/families.hpp"

#include <cmath>
#include <cstdio>

#include "exptwist/errors.hpp"

namespace exptwist {

namespace {

double get(const Params& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

InitialLaw make_initial(const Params& params, Eigen::Index dim) {
    const double x0 = get(params, "x0", 0.0);
    const double init_std = get(params, "init_std", 0.0);
    Vec start = Vec::Constant(dim, x0);
    if (init_std <= 0.0) return PointMass{start};
    SampledLaw law;
    law.sampler = [start, init_std](PathRng& rng) {
        std::normal_distribution<double> normal(0.0, init_std);
        Vec x = start;
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += normal(rng);
        return x;
    };
    law.density = [start, init_std](double, const Vec& x) {
        const double d2 = (x - start).squaredNorm() / (init_std * init_std);
        const double norm = std::pow(2.0 * M_PI * init_std * init_std,
                                     -0.5 * static_cast<double>(x.size()));
        return norm * std::exp(-0.5 * d2);
    };
    return law;
}

ModelSpec diffusion_model(Eigen::Index dim, DriftFn drift, double sigma,
                          const Params& params) {
    ModelSpec model;
    model.dim = dim;
    model.drift = std::move(drift);
    model.diffusion = [sigma, dim](double, const Vec&) {
        return Mat(sigma * Mat::Identity(dim, dim));
    };
    model.initial_law = make_initial(params, dim);
    return model;
}

}  // namespace

ModelSpec make_model(const std::string& family, const Params& params) {
    const auto dim = static_cast<Eigen::Index>(get(params, "dim", 1.0));
    if (dim < 1) throw ConfigError("model dim must be >= 1");

    if (family == "bm") {
        const double sigma = get(params, "sigma", 1.0);
        return diffusion_model(
            dim, [dim](double, const Vec&) { return Vec(Vec::Zero(dim)); }, sigma,
            params);
    }
    if (family == "const_drift") {
        const double mu = get(params, "mu", 1.0);
        const double sigma = get(params, "sigma", 1.0);
        return diffusion_model(
            dim, [mu, dim](double, const Vec&) { return Vec(Vec::Constant(dim, mu)); },
            sigma, params);
    }
    if (family == "linear_drift") {
        const double slope = get(params, "slope", -1.0);
        const double sigma = get(params, "sigma", 1.0);
        return diffusion_model(
            dim, [slope](double, const Vec& x) { return Vec(slope * x); }, sigma,
            params);
    }
    if (family == "ou") {
        const double theta = get(params, "theta", 1.0);
        const double mean = get(params, "mean", 0.0);
        const double sigma = get(params, "sigma", 1.0);
        return diffusion_model(
            dim,
            [theta, mean, dim](double, const Vec& x) {
                return Vec(theta * (Vec::Constant(dim, mean) - x));
            },
            sigma, params);
    }
    if (family == "poisson_unit") {
        if (dim != 1) throw ConfigError("poisson_unit requires dim = 1");
        const double lambda = get(params, "lambda", 1.0);
        ModelSpec model = diffusion_model(
            1, [](double, const Vec&) { return Vec(Vec::Zero(1)); }, 0.0, params);
        JumpSpec jump;
        jump.intensity = [lambda](double, const Vec&) { return lambda; };
        jump.size_law = DiscreteJumpLaw{{{Vec::Ones(1), 1.0}}};
        model.jump = jump;
        return model;
    }
    if (family == "cpg") {
        if (dim != 1) throw ConfigError("cpg requires dim = 1");
        const double lambda = get(params, "lambda", 1.0);
        const double jump_mean = get(params, "jump_mean", 0.0);
        const double jump_std = get(params, "jump_std", 1.0);
        const double sigma = get(params, "sigma", 0.0);
        ModelSpec model = diffusion_model(
            1, [](double, const Vec&) { return Vec(Vec::Zero(1)); }, sigma, params);
        JumpSpec jump;
        jump.intensity = [lambda](double, const Vec&) { return lambda; };
        jump.size_law = GaussianJumpLaw{jump_mean, jump_std};
        model.jump = jump;
        return model;
    }
    throw ConfigError("unknown model family: " + family);
}

CostSpec make_cost(const std::string& family, const Params& params,
                   const std::string& model_family, const Params& model_params,
                   double horizon) {
    CostSpec cost;
    const double f_const = get(params, "f_const", 0.0);
    if (f_const < 0.0) throw ConfigError("f_const must be >= 0");
    if (f_const > 0.0)
        cost.running = [f_const](double, const Vec&) { return f_const; };

    auto number = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    if (family == "null") {
        cost.analytic_hint = f_const == 0.0 ? "null" : "";
        return cost;
    }
    if (family == "quadratic") {
        const double gamma = get(params, "gamma", 0.5);
        if (gamma < 0.0) throw ConfigError("quadratic cost needs gamma >= 0");
        cost.terminal = [gamma](const Vec& x) { return gamma * x.squaredNorm(); };
        if (model_family == "bm" && f_const == 0.0) {
            const double sigma = get(model_params, "sigma", 1.0);
            cost.analytic_hint = "gaussian_quadratic:" + number(gamma) + ":" +
                                 number(sigma) + ":" + number(horizon);
        }
        return cost;
    }
    if (family == "linear") {
        const double coeff = get(params, "coeff", std::log(2.0));
        if (coeff < 0.0) throw ConfigError("linear cost needs coeff >= 0");
        cost.terminal = [coeff](const Vec& x) { return coeff * x(0); };
        if (model_family == "poisson_unit" && f_const == 0.0) {
            const double lambda = get(model_params, "lambda", 1.0);
            cost.analytic_hint = "poisson_exponential:" + number(lambda) + ":" +
                                 number(coeff) + ":" + number(horizon);
        }
        return cost;
    }
    throw ConfigError("unknown cost family: " + family);
}

const std::vector<std::string>& model_families() {
    static const std::vector<std::string> families{
        "bm", "const_drift", "linear_drift", "ou", "poisson_unit", "cpg"};
    return families;
}

const std::vector<std::string>& cost_families() {
    static const std::vector<std::string> families{"null", "quadratic", "linear"};
    return families;
}

std::vector<std::string> model_family_keys(const std::string& family) {
    if (family == "bm") return {"sigma", "x0", "dim", "init_std"};
    if (family == "const_drift") return {"mu", "sigma", "x0", "dim", "init_std"};
    if (family == "linear_drift") return {"slope", "sigma", "x0", "dim", "init_std"};
    if (family == "ou") return {"theta", "mean", "sigma", "x0", "dim", "init_std"};
    if (family == "poisson_unit") return {"lambda", "x0"};
    if (family == "cpg") return {"lambda", "jump_mean", "jump_std", "sigma", "x0"};
    throw ConfigError("unknown model family: " + family);
}

std::vector<std::string> cost_family_keys(const std::string& family) {
    if (family == "null") return {"f_const"};
    if (family == "quadratic") return {"gamma", "f_const"};
    if (family == "linear") return {"coeff", "f_const"};
    throw ConfigError("unknown cost family: " + family);
}

}  // namespace exptwist
