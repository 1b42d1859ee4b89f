#include "exptwist/meanfield.hpp"

#include <cmath>

#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"

namespace exptwist {

LinearizedTwist linearized_twist_from_costs(double c,
                                            std::span<const double> base_costs) {
    if (c < 0.0)
        throw std::invalid_argument(
            "linearized_twist: multiplier must be >= 0 to keep c*phi lower bounded");
    std::vector<double> scaled(base_costs.size());
    for (std::size_t i = 0; i < base_costs.size(); ++i) scaled[i] = c * base_costs[i];

    LinearizedTwist out;
    try {
        out.ensemble = normalize_weights(scaled);
    } catch (const DegenerateEnsembleError& e) {
        throw DegenerateEnsembleError(std::string(e.what()) +
                                      " (multiplier c=" + std::to_string(c) + ")");
    }
    out.mean_phi = weighted_expectation(out.ensemble, base_costs);
    return out;
}

LinearizedTwist linearized_twist(const MeanFieldProblem&, double c,
                                 const ModelSpec& model, const CostSpec& cost,
                                 const TimeGrid& grid, std::size_t n_paths,
                                 const SeedSpec& seed) {
    const auto data = collect_path_functionals(model, cost, grid, n_paths, seed);
    return linearized_twist_from_costs(c, data.costs);
}

void FixedPointTrace::write_csv(const std::filesystem::path& path) const {
    csv::Writer writer({"iter", "c", "m", "objective", "entropy"});
    for (std::size_t k = 0; k < iterates.size(); ++k) {
        const auto& it = iterates[k];
        writer.add_row(std::vector<double>{static_cast<double>(k), it.c, it.m,
                                           it.objective, it.entropy});
    }
    writer.write_file(path);
}

FixedPointTrace fixed_point_solve(const MeanFieldProblem& problem,
                                  const ModelSpec& model, const CostSpec& cost,
                                  const TimeGrid& grid, std::size_t n_paths,
                                  const SeedSpec& seed) {
    if (!(problem.damping > 0.0 && problem.damping <= 1.0))
        throw std::invalid_argument("fixed_point_solve: damping outside (0,1]");
    if (!problem.derivative)
        throw std::invalid_argument("fixed_point_solve: F' required");

    // common random numbers: one reference ensemble for every iteration
    const auto data = collect_path_functionals(model, cost, grid, n_paths, seed);

    FixedPointTrace trace;
    auto evaluate = [&](double c) {
        const auto lin = linearized_twist_from_costs(c, data.costs);
        FixedPointTrace::Iterate it;
        it.c = c;
        it.m = lin.mean_phi.value;
        it.m_se = lin.mean_phi.stderr;
        it.entropy = entropy_estimate(lin.ensemble);
        it.objective = (problem.objective ? problem.objective(it.m) : 0.0) +
                       it.entropy;
        return it;
    };

    // start from the multiplier suggested by the reference measure (c = 0)
    double c = problem.derivative(evaluate(0.0).m);
    if (c < 0.0) {
        c = 0.0;
        trace.clamped = true;
    }

    for (std::size_t k = 0; k < problem.max_iter; ++k) {
        const auto it = evaluate(c);
        trace.iterates.push_back(it);
        double next = (1.0 - problem.damping) * c +
                      problem.damping * problem.derivative(it.m);
        if (next < 0.0) {
            next = 0.0;
            trace.clamped = true;
        }
        const bool done = std::abs(next - c) < problem.tol;
        c = next;
        if (done) {
            trace.converged = true;
            break;
        }
    }

    const auto& last = trace.iterates.back();
    trace.c_star = c;
    trace.m_star = last.m;
    trace.m_star_se = last.m_se;
    return trace;
}

}  // namespace exptwist
