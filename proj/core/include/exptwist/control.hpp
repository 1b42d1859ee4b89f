#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "exptwist/girsanov.hpp"
#include "exptwist/twist.hpp"

namespace exptwist {

// Feedback control u(t,x); the controlled dynamics have drift b + sigma u.
struct ControlPolicy {
    std::string name;
    std::function<Vec(double, const Vec&)> feedback;
    // "from-value-surface" | "analytic" | "user-supplied"
    std::string provenance = "user-supplied";
};

// Solves sigma(t,x) u = Gamma(v)(t,x)/v(t,x) by pivoted LU; a condition
// number above 1e10 counts as singular, in which case an analytic gradient is
// required (then u = sigma^T grad log v directly).
Vec optimal_control(const TwistedModel& twisted, double t, const Vec& x);

ControlPolicy optimal_control_policy(const TwistedModel& twisted);
ControlPolicy zero_policy(Eigen::Index dim);

// J(u) = E[ sum f dt + 1/2 sum |u|^2 dt + g(X_T) ] under drift b + sigma u.
// Diverged paths are excluded and counted via the returned report.
struct CostFunctionalResult {
    Estimate j;
    std::size_t diverged = 0;
};
CostFunctionalResult cost_functional(const ModelSpec& model, const CostSpec& cost,
                                     const ControlPolicy& policy,
                                     const TimeGrid& grid, std::size_t n_paths,
                                     const SeedSpec& seed);

struct PolicyRanking {
    struct Row {
        std::string name;
        double j = 0.0;
        double stderr = 0.0;
        double gap_to_minus_log_z = 0.0;
        bool red_flag = false;  // beats the optimal policy beyond 3 combined SE
    };
    std::vector<Row> rows;  // sorted by J ascending

    void write_csv(const std::filesystem::path& path) const;
};

// Evaluates all policies under common random numbers (shared seed). When
// minus_log_z is supplied, the gap column is filled and any policy beating
// the non-user-supplied (optimal) policy by more than 3 combined SE is
// red-flagged.
PolicyRanking compare_controls(const ModelSpec& model, const CostSpec& cost,
                               const std::vector<ControlPolicy>& policies,
                               const TimeGrid& grid, std::size_t n_paths,
                               const SeedSpec& seed,
                               std::optional<double> minus_log_z = std::nullopt);

}  // namespace exptwist
