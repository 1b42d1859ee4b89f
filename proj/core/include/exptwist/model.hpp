#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "exptwist/grid.hpp"
#include "exptwist/rng.hpp"

namespace exptwist {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using DiffusionFn = std::function<Mat(double t, const Vec& x)>;
using ScalarField = std::function<double(double t, const Vec& x)>;
using TerminalCost = std::function<double(const Vec& x)>;
using RateFn = std::function<double(double t, const Vec& x)>;

// --- jump size laws -------------------------------------------------------

// Finite list of atoms; probabilities sum to 1, no atom at the origin.
struct DiscreteJumpLaw {
    std::vector<std::pair<Vec, double>> atoms;
};

// One-dimensional Gaussian jump sizes.
struct GaussianJumpLaw {
    double mean = 0.0;
    double stddev = 1.0;
};

// Opaque sampler; generator expectations over it fall back to fixed-seed
// Monte Carlo.
struct SampledJumpLaw {
    std::function<Vec(double t, const Vec& x, PathRng&)> sampler;
};

using JumpSizeLaw = std::variant<DiscreteJumpLaw, GaussianJumpLaw, SampledJumpLaw>;

// Finite-activity kernel L(t,x,dq) = lambda(t,x) * rho(t,x,dq).
struct JumpSpec {
    RateFn intensity;
    JumpSizeLaw size_law;
    bool finite_activity = true;
};

// --- initial law ----------------------------------------------------------

struct PointMass {
    Vec x0;
};

struct SampledLaw {
    std::function<Vec(PathRng&)> sampler;
    ScalarField density;  // optional (t ignored); empty if unknown
};

using InitialLaw = std::variant<PointMass, SampledLaw>;

// --- model and cost -------------------------------------------------------

// Reference dynamics: dX = b dt + sigma dW + finite-activity jumps, X_0 ~ mu.
// Specs are immutable after construction and shared freely across threads;
// the callables must be pure functions of (t, x).
struct ModelSpec {
    Eigen::Index dim = 1;
    DriftFn drift;
    DiffusionFn diffusion;
    std::optional<JumpSpec> jump;
    InitialLaw initial_law = PointMass{Vec::Zero(1)};

    bool has_jumps() const { return jump.has_value(); }
};

// Running cost f >= 0 and terminal cost g >= 0. analytic_hint names a known
// closed-form value function ("" when none); resolved in oracles.hpp.
struct CostSpec {
    ScalarField running;
    TerminalCost terminal;
    std::string analytic_hint;

    bool is_null() const { return !running && !terminal; }
    double f(double t, const Vec& x) const { return running ? running(t, x) : 0.0; }
    double g(const Vec& x) const { return terminal ? terminal(x) : 0.0; }
};

// --- validation -----------------------------------------------------------

struct ValidationReport {
    struct Entry {
        std::string what;
        double t;
        Vec x;
    };
    std::vector<Entry> violations;

    bool valid() const { return violations.empty(); }
    std::string to_string() const;
};

// Probes the model invariants (finiteness of b/sigma/f/g, sigma*sigma^T PSD,
// nonnegative intensity, size law normalized, no atom at 0) at the given
// (t,x) points. Evaluator exceptions become diagnostic entries.
ValidationReport validate_model(const ModelSpec& model, const CostSpec& cost,
                                const TimeGrid& grid,
                                const std::vector<std::pair<double, Vec>>& probes);

}  // namespace exptwist
