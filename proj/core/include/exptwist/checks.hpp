#pragma once

#include <filesystem>

#include "exptwist/generator.hpp"
#include "exptwist/twist.hpp"

namespace exptwist {

// Carre du champ Gamma(phi,psi) = a(phi psi) - psi a(phi) - phi a(psi),
// evaluated through the generator. For pure diffusions this equals
// grad phi . sigma sigma^T grad psi; jumps add
// lambda E_q[(phi(x+q)-phi(x))(psi(x+q)-psi(x))].
double carre_du_champ(const ModelSpec& model, const TestFunction& phi,
                      const TestFunction& psi, double t, const Vec& x,
                      const FdOptions& opt = {});

// Action of the twisted generator a^{Q*}(phi): base continuous terms with
// drift b + Gamma(v)/v plus the jump integral against the twisted kernel
// (v(t,x+q)/v(t,x)) L(t,x,dq).
double twisted_generator_apply(const TwistedModel& twisted, const TestFunction& phi,
                               double t, const Vec& x, const FdOptions& opt = {});

// --- binned martingale residual test ---------------------------------------

struct ResidualReport {
    struct Bin {
        double lo;
        double hi;
        double mean;
        double stderr;
        std::size_t count;
        double z;  // (|mean| - allowance)+ / stderr
    };
    std::vector<Bin> bins;
    double max_z = 0.0;
    double threshold = 4.0;
    bool pass = false;
    std::size_t merged_bins = 0;

    void write_csv(const std::filesystem::path& path) const;
};

struct MartingaleOptions {
    // Euler increments are martingale only up to the drift freeze; the bin
    // mean gets an allowance of bias_allowance * dt before z-scoring.
    double bias_allowance = 0.1;
    double z_threshold = 4.0;
    std::size_t pilot_paths = 1000;
    // Replaces the simulation drift while the generator stays twisted;
    // used to verify the test rejects a deliberately uncorrected drift.
    DriftFn simulation_drift_override;
};

// Simulates under Q* and bins the increments
//   phi(t_{k+1}, X_{k+1}) - phi(t_k, X_k) - a^{Q*}(phi)(t_k, X_k) dt
// by quantiles of the first state coordinate at t_k. Passes when every
// binned |mean|, less the discretization allowance, stays below
// z_threshold standard errors.
ResidualReport martingale_residual(const TwistedModel& twisted,
                                   const TestFunction& phi, const TimeGrid& grid,
                                   std::size_t n_paths, const SeedSpec& seed,
                                   std::size_t n_bins,
                                   const MartingaleOptions& opt = {});

// --- PDE residual -----------------------------------------------------------

struct NodeResidualReport {
    struct Node {
        double t;
        Vec x;
        double residual;
        double tolerance;  // 0 when the caller applies its own
    };
    std::vector<Node> nodes;
    std::size_t skipped = 0;  // stencil or jump target left the box
    double max_abs_residual = 0.0;
    bool pass = true;

    void write_csv(const std::filesystem::path& path) const;
};

struct PdeOptions {
    double fd_step = 1e-4;
    // Analytic mode: absolute per-node tolerance (0 = report only).
    double abs_tol = 0.0;
    // Tolerance for surface mode: c_bias*(sim_dt + h^2) + 3*propagated stderr.
    double c_bias = 1.0;
    double sim_dt = 0.0;  // dt of the sub-simulation that built the surface
};

// Residual a^P(v) - f v. Analytic sources are probed at the given points by
// finite differences; surface sources use node-value stencils on all interior
// grid nodes (probes ignored) with per-node tolerance bands.
NodeResidualReport pde_residual(const ValueSource& source, const ModelSpec& model,
                                const CostSpec& cost,
                                const std::vector<std::pair<double, Vec>>& probes,
                                const PdeOptions& opt = {});

// --- integrability of the drift correction ----------------------------------

struct IntegrabilityReport {
    double estimate = 0.0;
    double stderr = 0.0;
    double estimate_doubled = 0.0;  // same statistic at 2N paths
    double relative_drift = 0.0;
};

// Monte Carlo estimate of E_{Q*}[ int_0^T |Gamma(v)/v|^p dt ] for p in (1,2),
// plus its value when the path count doubles.
IntegrabilityReport integrability_probe(const TwistedModel& twisted,
                                        const TimeGrid& grid, std::size_t n_paths,
                                        double p, const SeedSpec& seed);

}  // namespace exptwist
