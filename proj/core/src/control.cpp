#include "exptwist/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"
#include "exptwist/stats.hpp"

namespace exptwist {

Vec optimal_control(const TwistedModel& twisted, double t, const Vec& x) {
    const Mat sigma = twisted.base.diffusion(t, x);
    const double v = std::max(twisted.value(t, x), twisted.eps_v);
    const Vec rhs = generalized_gradient(twisted, t, x) / v;

    Eigen::JacobiSVD<Mat> svd(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().maxCoeff();
    const double smin = svd.singularValues().minCoeff();
    const bool singular = smax == 0.0 || smax / smin > 1e10;

    Vec u;
    if (!singular) {
        u = sigma.fullPivLu().solve(rhs);
    } else if (twisted.has_analytic_gradient()) {
        const auto& analytic = std::get<AnalyticValue>(twisted.value_source);
        u = sigma.transpose() * (analytic.gradient(t, x) / v);
    } else {
        throw UnsupportedModelError(
            "optimal_control: singular diffusion and no analytic gradient");
    }

    const double residual = (sigma * u - rhs).norm();
    if (!singular && residual > 1e-8 * (1.0 + rhs.norm()))
        throw NumericalError("optimal_control: solve residual " +
                             std::to_string(residual));
    return u;
}

ControlPolicy optimal_control_policy(const TwistedModel& twisted) {
    ControlPolicy policy;
    policy.name = "optimal";
    policy.provenance = std::holds_alternative<AnalyticValue>(twisted.value_source)
                            ? "analytic"
                            : "from-value-surface";
    policy.feedback = [&twisted](double t, const Vec& x) {
        return optimal_control(twisted, t, x);
    };
    return policy;
}

ControlPolicy zero_policy(Eigen::Index dim) {
    ControlPolicy policy;
    policy.name = "zero";
    policy.feedback = [dim](double, const Vec&) { return Vec(Vec::Zero(dim)); };
    return policy;
}

CostFunctionalResult cost_functional(const ModelSpec& model, const CostSpec& cost,
                                     const ControlPolicy& policy,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     const SeedSpec& seed) {
    SimHooks hooks;
    hooks.drift_override = [&model, &policy](double t, const Vec& x) {
        return Vec(model.drift(t, x) + model.diffusion(t, x) * policy.feedback(t, x));
    };

    const double dt = grid.dt();
    std::vector<double> costs(n_paths, std::numeric_limits<double>::quiet_NaN());
    for_each_path(model, grid, n_paths, seed, hooks,
                  [&](std::size_t i, const Path& p) {
                      if (p.diverged) return;
                      KahanSum acc;
                      for (std::size_t k = 0; k < p.n_steps(); ++k) {
                          const double t = grid.time(k);
                          const Vec x = p.states.col(static_cast<Eigen::Index>(k));
                          const Vec u = policy.feedback(t, x);
                          acc.add(cost.f(t, x) + 0.5 * u.squaredNorm());
                      }
                      const double total = acc.value() * dt + cost.g(p.terminal());
                      if (std::isfinite(total)) costs[i] = total;
                  });

    std::vector<double> retained;
    retained.reserve(n_paths);
    for (double c : costs)
        if (!std::isnan(c)) retained.push_back(c);
    if (retained.empty())
        throw EstimationFailure("cost_functional: every path diverged");

    CostFunctionalResult result;
    result.j.value = mean(retained);
    result.j.stderr = std_error(retained);
    result.diverged = n_paths - retained.size();
    return result;
}

void PolicyRanking::write_csv(const std::filesystem::path& path) const {
    csv::Writer writer({"policy_name", "J", "stderr", "gap_to_minus_logZ"});
    for (const auto& row : rows) {
        writer.add_row({row.name, csv::format_double(row.j),
                        csv::format_double(row.stderr),
                        csv::format_double(row.gap_to_minus_log_z)});
    }
    writer.write_file(path);
}

PolicyRanking compare_controls(const ModelSpec& model, const CostSpec& cost,
                               const std::vector<ControlPolicy>& policies,
                               const TimeGrid& grid, std::size_t n_paths,
                               const SeedSpec& seed,
                               std::optional<double> minus_log_z) {
    if (policies.empty())
        throw std::invalid_argument("compare_controls: no policies");

    PolicyRanking ranking;
    std::optional<std::size_t> optimal_idx;
    for (std::size_t i = 0; i < policies.size(); ++i) {
        // common random numbers: same seed for every policy
        const auto result = cost_functional(model, cost, policies[i], grid,
                                            n_paths, seed);
        PolicyRanking::Row row;
        row.name = policies[i].name;
        row.j = result.j.value;
        row.stderr = result.j.stderr;
        row.gap_to_minus_log_z =
            minus_log_z ? result.j.value - *minus_log_z : 0.0;
        ranking.rows.push_back(row);
        if (!optimal_idx && policies[i].provenance != "user-supplied")
            optimal_idx = i;
    }

    if (optimal_idx) {
        const auto& best = ranking.rows[*optimal_idx];
        for (std::size_t i = 0; i < ranking.rows.size(); ++i) {
            if (i == *optimal_idx) continue;
            auto& row = ranking.rows[i];
            const double combined =
                std::sqrt(row.stderr * row.stderr + best.stderr * best.stderr);
            if (row.j < best.j - 3.0 * combined) row.red_flag = true;
        }
    }

    std::stable_sort(ranking.rows.begin(), ranking.rows.end(),
                     [](const auto& a, const auto& b) { return a.j < b.j; });
    return ranking;
}

}  // namespace exptwist
