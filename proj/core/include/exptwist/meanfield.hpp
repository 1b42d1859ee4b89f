#pragma once

#include <filesystem>
#include <functional>

#include "exptwist/girsanov.hpp"

namespace exptwist {

// Nonlinear entropic problem inf_Q F(E_Q[phi]) + H(Q|P) for convex
// differentiable F, solved through its linearization: the optimum is the
// exponential twist with scalar multiplier c = F'(E_{Q*_c}[phi]).
struct MeanFieldProblem {
    std::function<double(double)> objective;    // F
    std::function<double(double)> derivative;   // F'
    double damping = 0.5;                       // theta in (0, 1]
    double tol = 1e-3;
    std::size_t max_iter = 30;
};

struct LinearizedTwist {
    WeightedEnsemble ensemble;  // weights from costs c * phi
    Estimate mean_phi;          // E_{Q*_c}[phi]
};

// Twist with cost c*phi by reweighting the supplied reference path costs.
LinearizedTwist linearized_twist_from_costs(double c,
                                            std::span<const double> base_costs);

// Spec-shaped variant: samples reference paths itself.
LinearizedTwist linearized_twist(const MeanFieldProblem& problem, double c,
                                 const ModelSpec& model, const CostSpec& cost,
                                 const TimeGrid& grid, std::size_t n_paths,
                                 const SeedSpec& seed);

struct FixedPointTrace {
    struct Iterate {
        double c;
        double m;          // E_{Q*_c}[phi]
        double m_se;
        double objective;  // F(m) + H(Q*_c | P)
        double entropy;
    };
    std::vector<Iterate> iterates;
    double c_star = 0.0;
    double m_star = 0.0;
    double m_star_se = 0.0;
    bool converged = false;
    bool clamped = false;  // F' went negative and c was clamped at 0

    void write_csv(const std::filesystem::path& path) const;
};

// Damped iteration c_{k+1} = (1-theta) c_k + theta F'(m(c_k)) under common
// random numbers (one reference ensemble reused across iterations). A
// non-converged run returns the full trace with converged=false; it is never
// reported as an answer.
FixedPointTrace fixed_point_solve(const MeanFieldProblem& problem,
                                  const ModelSpec& model, const CostSpec& cost,
                                  const TimeGrid& grid, std::size_t n_paths,
                                  const SeedSpec& seed);

}  // namespace exptwist
