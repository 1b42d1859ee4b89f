#include "exptwist/twist.hpp"

#include <cmath>

#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"

namespace exptwist {

double TwistedModel::value(double t, const Vec& x) const {
    if (const auto* surface = std::get_if<ValueSurface>(&value_source))
        return surface->value_at(t, x);
    const double v = std::get<AnalyticValue>(value_source).value(t, x);
    if (!std::isfinite(v))
        throw NumericalError("TwistedModel::value: non-finite value");
    return std::max(eps_v, v);
}

bool TwistedModel::has_analytic_gradient() const {
    const auto* analytic = std::get_if<AnalyticValue>(&value_source);
    return analytic && static_cast<bool>(analytic->gradient);
}

Vec generalized_gradient(const TwistedModel& twisted, double t, const Vec& x,
                         double fd_step) {
    const Mat sigma = twisted.base.diffusion(t, x);
    const Mat a = sigma * sigma.transpose();
    if (a.cwiseAbs().maxCoeff() == 0.0) return Vec::Zero(x.size());

    if (const auto* analytic = std::get_if<AnalyticValue>(&twisted.value_source);
        analytic && analytic->gradient) {
        return a * analytic->gradient(t, x);
    }

    double h = fd_step > 0.0 ? fd_step
                             : (twisted.fd_step > 0.0 ? twisted.fd_step
                                                      : 1e-4 * (1.0 + x.norm()));
    if (const auto* surface = std::get_if<ValueSurface>(&twisted.value_source))
        h = std::max(h, surface->min_cell());

    Vec grad(x.size());
    Vec xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        const double fp = twisted.value(t, xp);
        const double fm = twisted.value(t, xm);
        grad(i) = (fp - fm) / (2.0 * h);
        if (!std::isfinite(grad(i)))
            throw NumericalError("generalized_gradient: non-finite stencil, values " +
                                 std::to_string(fm) + ", " + std::to_string(fp));
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return a * grad;
}

Vec twisted_drift(const TwistedModel& twisted, double t, const Vec& x) {
    const Vec gamma = generalized_gradient(twisted, t, x);
    const double v = std::max(twisted.value(t, x), twisted.eps_v);
    return twisted.base.drift(t, x) + gamma / v;
}

std::optional<Vec> twisted_jump_proposal(const TwistedModel& twisted, double t,
                                         const Vec& x, PathRng& rng) {
    if (!twisted.base.has_jumps())
        throw UnsupportedModelError("twisted_jump_proposal: model has no jumps");
    const auto& law = twisted.base.jump->size_law;
    Vec q;
    if (const auto* discrete = std::get_if<DiscreteJumpLaw>(&law)) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double u = unif(rng);
        q = discrete->atoms.back().first;
        for (const auto& [atom, p] : discrete->atoms) {
            if (u < p) {
                q = atom;
                break;
            }
            u -= p;
        }
    } else if (const auto* gauss = std::get_if<GaussianJumpLaw>(&law)) {
        std::normal_distribution<double> normal(gauss->mean, gauss->stddev);
        q = Vec(1);
        q(0) = normal(rng);
    } else {
        q = std::get<SampledJumpLaw>(law).sampler(t, x, rng);
    }

    const double p_accept = twisted.value(t, x + q);
    if (p_accept < 0.0 || p_accept > 1.0 + 1e-12)
        throw InvariantViolation(
            "twisted_jump_proposal: acceptance probability outside [0,1]: " +
            std::to_string(p_accept));
    if (p_accept >= 1.0) return q;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(rng) < p_accept) return q;
    return std::nullopt;
}

Vec sample_initial_twisted(const TwistedModel& twisted, PathRng& rng) {
    if (const auto* point = std::get_if<PointMass>(&twisted.base.initial_law))
        return point->x0;  // nu = delta_{x0} regardless of v
    const auto& law = std::get<SampledLaw>(twisted.base.initial_law);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    constexpr std::size_t kMaxProposals = 10'000'000;
    for (std::size_t n = 0; n < kMaxProposals; ++n) {
        const Vec x = law.sampler(rng);
        const double p = twisted.value(0.0, x);
        if (p > 1.0 + 1e-12)
            throw InvariantViolation(
                "sample_initial_twisted: acceptance probability > 1");
        if (p >= 1.0 || unif(rng) < p) return x;
    }
    throw DegenerateTwistError(
        "sample_initial_twisted: acceptance rate below 1e-6 over 1e7 proposals");
}

SimHooks twisted_hooks(const TwistedModel& twisted) {
    SimHooks hooks;
    hooks.drift_override = [&twisted](double t, const Vec& x) {
        return twisted_drift(twisted, t, x);
    };
    if (twisted.base.has_jumps()) {
        hooks.proposal_rate = [&twisted](double t, const Vec& x) {
            const double lambda = twisted.base.jump->intensity(t, x);
            return lambda / std::max(twisted.value(t, x), twisted.eps_v);
        };
        hooks.jump_accept = [&twisted](double t, const Vec& x, const Vec& q) {
            const double p = twisted.value(t, x + q);
            if (p < 0.0 || p > 1.0 + 1e-12)
                throw InvariantViolation(
                    "twisted jump acceptance outside [0,1]: " + std::to_string(p));
            return p;
        };
    }
    hooks.initial_override = [&twisted](PathRng& rng) {
        return sample_initial_twisted(twisted, rng);
    };
    return hooks;
}

PathBundle simulate_twisted(const TwistedModel& twisted, const TimeGrid& grid,
                            std::size_t n_paths, const SeedSpec& seed) {
    return sample_paths(twisted.base, grid, n_paths, seed, twisted_hooks(twisted));
}

void for_each_twisted_path(const TwistedModel& twisted, const TimeGrid& grid,
                           std::size_t n_paths, const SeedSpec& seed,
                           const std::function<void(std::size_t, const Path&)>& fn,
                           unsigned n_threads) {
    for_each_path(twisted.base, grid, n_paths, seed, twisted_hooks(twisted), fn,
                  n_threads);
}

void dump_drift_field_csv(const TwistedModel& twisted,
                          const std::vector<double>& times,
                          const std::vector<Vec>& points,
                          const std::filesystem::path& path) {
    const Eigen::Index d = twisted.base.dim;
    std::vector<std::string> cols{"t"};
    for (Eigen::Index i = 0; i < d; ++i) cols.push_back("x_" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < d; ++i)
        cols.push_back("bstar_" + std::to_string(i + 1));
    csv::Writer writer(cols);
    for (double t : times) {
        for (const Vec& x : points) {
            const Vec bstar = twisted_drift(twisted, t, x);
            std::vector<double> row{t};
            for (Eigen::Index i = 0; i < d; ++i) row.push_back(x(i));
            for (Eigen::Index i = 0; i < d; ++i) row.push_back(bstar(i));
            writer.add_row(row);
        }
    }
    writer.write_file(path);
}

}  // namespace exptwist
