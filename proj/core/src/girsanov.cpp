#include "exptwist/girsanov.hpp"

#include <cmath>
#include <limits>

#include "exptwist/errors.hpp"
#include "exptwist/stats.hpp"

namespace exptwist {

double path_cost(const Path& path, const CostSpec& cost, const TimeGrid& grid) {
    if (path.n_steps() != grid.n_steps())
        throw std::invalid_argument("path_cost: path not aligned with grid");
    const double dt = grid.dt();
    KahanSum running;
    if (cost.running) {
        for (std::size_t k = 0; k < grid.n_steps(); ++k)
            running.add(cost.f(grid.time(k),
                               path.states.col(static_cast<Eigen::Index>(k))));
    }
    return running.value() * dt + cost.g(path.terminal());
}

WeightedEnsemble normalize_weights(std::span<const double> costs) {
    if (costs.empty())
        throw std::invalid_argument("normalize_weights: no costs");
    double min_cost = costs[0];
    for (double c : costs) {
        if (!std::isfinite(c))
            throw std::invalid_argument("normalize_weights: non-finite cost");
        min_cost = std::min(min_cost, c);
    }

    WeightedEnsemble ens;
    ens.costs.assign(costs.begin(), costs.end());
    ens.weights.resize(costs.size());
    KahanSum total;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        ens.weights[i] = std::exp(-(costs[i] - min_cost));  // in (0, 1]
        total.add(ens.weights[i]);
    }
    const double sum_shifted = total.value();
    if (!(sum_shifted > 0.0))
        throw DegenerateEnsembleError(
            "normalize_weights: all weights underflowed to zero");

    const double n = static_cast<double>(costs.size());
    const double mean_shifted = sum_shifted / n;
    ens.log_z_hat = -min_cost + std::log(mean_shifted);
    ens.z_hat = std::exp(ens.log_z_hat);
    for (double& w : ens.weights) w /= mean_shifted;
    return ens;
}

double effective_sample_size(const WeightedEnsemble& ensemble) {
    KahanSum s1, s2;
    for (double d : ensemble.weights) {
        s1.add(d);
        s2.add(d * d);
    }
    return s1.value() * s1.value() / s2.value();
}

Estimate weighted_expectation(const WeightedEnsemble& ensemble,
                              std::span<const double> h) {
    if (h.size() != ensemble.size())
        throw std::invalid_argument("weighted_expectation: statistic size mismatch");
    const double n = static_cast<double>(ensemble.size());
    KahanSum sw, swh;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!std::isfinite(h[i]))
            throw std::invalid_argument("weighted_expectation: non-finite statistic");
        sw.add(ensemble.weights[i]);
        swh.add(ensemble.weights[i] * h[i]);
    }
    Estimate est;
    est.value = swh.value() / sw.value();
    // delta method for the self-normalized ratio
    KahanSum dev;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double r = ensemble.weights[i] * (h[i] - est.value);
        dev.add(r * r);
    }
    est.stderr = std::sqrt(dev.value()) / n;
    return est;
}

namespace {

// log D_i through the exact algebraic identity log D = -(phi - min) - log(mean
// shifted weight); avoids evaluating log of an underflowed weight.
std::vector<double> log_weights(const WeightedEnsemble& ens) {
    double min_cost = ens.costs[0];
    for (double c : ens.costs) min_cost = std::min(min_cost, c);
    const double log_mean_shifted = ens.log_z_hat + min_cost;
    std::vector<double> lw(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i)
        lw[i] = -(ens.costs[i] - min_cost) - log_mean_shifted;
    return lw;
}

}  // namespace

double entropy_estimate(const WeightedEnsemble& ensemble) {
    const auto lw = log_weights(ensemble);
    KahanSum s;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        const double d = ensemble.weights[i];
        if (d > 0.0) s.add(d * lw[i]);
    }
    return s.value() / static_cast<double>(ensemble.size());
}

EntropyReport variational_report(const WeightedEnsemble& ensemble) {
    EntropyReport report;
    report.n_paths = ensemble.size();
    report.z_hat = ensemble.z_hat;
    report.minus_log_z = -ensemble.log_z_hat;

    const auto phi = weighted_expectation(ensemble, ensemble.costs);
    report.mean_phi_qstar = phi.value;
    report.mean_phi_se = phi.stderr;
    report.entropy = entropy_estimate(ensemble);
    report.gap = report.minus_log_z - (report.mean_phi_qstar + report.entropy);
    report.ess = effective_sample_size(ensemble);

    // SE of -log z_hat: delta method on the mean weight
    {
        KahanSum dev;
        const double n = static_cast<double>(ensemble.size());
        for (double d : ensemble.weights) dev.add((d - 1.0) * (d - 1.0));
        report.minus_log_z_se = std::sqrt(dev.value()) / n;  // sd(D)/sqrt(N) / 1
    }
    // SE of the plug-in entropy: H = -A/B - log B with A = mean(w phi),
    // B = mean(w), propagated through the sample covariance of (w phi, w).
    {
        const double n = static_cast<double>(ensemble.size());
        KahanSum saa, sab, sbb;
        const double a_mean = report.mean_phi_qstar;  // = mean(D phi)
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            const double da = ensemble.weights[i] * ensemble.costs[i] - a_mean;
            const double db = ensemble.weights[i] - 1.0;
            saa.add(da * da);
            sab.add(da * db);
            sbb.add(db * db);
        }
        const double ga = -1.0;           // dH/dA at (A,B)=(mean, 1)
        const double gb = a_mean - 1.0;   // dH/dB
        const double var =
            (ga * ga * saa.value() + 2.0 * ga * gb * sab.value() +
             gb * gb * sbb.value()) /
            (n * n);
        report.entropy_se = std::sqrt(std::max(0.0, var));
    }

    if (std::abs(report.gap) > 1e-10)
        throw InvariantViolation("variational_report: plug-in gap exceeds 1e-10");
    return report;
}

PathFunctionals collect_path_functionals(const ModelSpec& model,
                                         const CostSpec& cost,
                                         const TimeGrid& grid,
                                         std::size_t n_paths,
                                         const SeedSpec& seed,
                                         const SimHooks& hooks) {
    std::vector<double> costs(n_paths);
    Mat terminals(model.dim, static_cast<Eigen::Index>(n_paths));
    std::vector<double> jumps(n_paths, 0.0);
    std::vector<unsigned char> keep(n_paths, 1);

    for_each_path(model, grid, n_paths, seed, hooks,
                  [&](std::size_t i, const Path& p) {
                      const double phi = p.diverged
                                             ? std::numeric_limits<double>::quiet_NaN()
                                             : path_cost(p, cost, grid);
                      if (!std::isfinite(phi)) {
                          keep[i] = 0;
                          return;
                      }
                      costs[i] = phi;
                      terminals.col(static_cast<Eigen::Index>(i)) = p.terminal();
                      jumps[i] = static_cast<double>(p.jump_marks.size());
                  });

    PathFunctionals out;
    std::size_t retained = 0;
    for (std::size_t i = 0; i < n_paths; ++i) retained += keep[i];
    out.costs.reserve(retained);
    out.jump_counts.reserve(retained);
    out.terminals.resize(model.dim, static_cast<Eigen::Index>(retained));
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (!keep[i]) continue;
        out.costs.push_back(costs[i]);
        out.jump_counts.push_back(jumps[i]);
        out.terminals.col(col++) = terminals.col(static_cast<Eigen::Index>(i));
    }
    out.dropped = n_paths - retained;
    return out;
}

}  // namespace exptwist
