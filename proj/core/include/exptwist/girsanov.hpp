#pragma once

#include <span>
#include <vector>

#include "exptwist/model.hpp"
#include "exptwist/sampler.hpp"

namespace exptwist {

// Reference paths reweighted into Q*-expectations. weights are the
// normalized Girsanov densities D_i = e^{-phi_i} / mean(e^{-phi}), mean 1.
struct WeightedEnsemble {
    std::vector<double> costs;    // retained path costs phi_i
    std::vector<double> weights;  // D_i > 0, mean(D) = 1
    double z_hat = 1.0;           // mean raw weight, in (0,1] for f,g >= 0
    double log_z_hat = 0.0;
    std::size_t excluded = 0;     // non-finite costs dropped upstream

    std::size_t size() const { return weights.size(); }
};

struct Estimate {
    double value = 0.0;
    double stderr = 0.0;
};

struct EntropyReport {
    std::size_t n_paths = 0;
    double z_hat = 1.0;
    double minus_log_z = 0.0;
    double mean_phi_qstar = 0.0;
    double mean_phi_se = 0.0;
    double entropy = 0.0;
    double entropy_se = 0.0;
    double minus_log_z_se = 0.0;
    double gap = 0.0;  // minus_log_z - (mean_phi_qstar + entropy)
    double ess = 0.0;
};

// phi(X) = sum_k f(t_k, X_k) dt + g(X_T), left-endpoint quadrature (k < n).
double path_cost(const Path& path, const CostSpec& cost, const TimeGrid& grid);

// Weights are normalized in log space (max-log shift), so large costs cannot
// underflow the normalizer.
WeightedEnsemble normalize_weights(std::span<const double> costs);

// (sum w)^2 / sum w^2, in [1, N].
double effective_sample_size(const WeightedEnsemble& ensemble);

// Self-normalized estimate of E_{Q*}[h] with delta-method standard error.
Estimate weighted_expectation(const WeightedEnsemble& ensemble,
                              std::span<const double> h);

// Plug-in H(Q*|P) = mean(D log D), 0 log 0 := 0.
double entropy_estimate(const WeightedEnsemble& ensemble);

// Fills the full report; the plug-in gap vanishes identically because
// log D_i = -phi_i - log z_hat, so any |gap| beyond rounding is a bug.
EntropyReport variational_report(const WeightedEnsemble& ensemble);

// --- sampling glue ---------------------------------------------------------

// Per-path functionals gathered in one streaming pass; diverged paths and
// non-finite costs are dropped and counted.
struct PathFunctionals {
    std::vector<double> costs;
    Mat terminals;  // dim x n_retained
    std::vector<double> jump_counts;
    std::size_t dropped = 0;
};

PathFunctionals collect_path_functionals(const ModelSpec& model,
                                         const CostSpec& cost,
                                         const TimeGrid& grid,
                                         std::size_t n_paths,
                                         const SeedSpec& seed,
                                         const SimHooks& hooks = {});

}  // namespace exptwist
