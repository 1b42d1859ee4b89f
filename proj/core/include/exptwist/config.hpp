#pragma once

#include <optional>
#include <string>

#include "exptwist/families.hpp"
#include "exptwist/grid.hpp"
#include "exptwist/rng.hpp"

namespace exptwist {

enum class Pipeline { Value, Twist, Reweight, Control, Checks, MeanField };

std::string to_string(Pipeline p);

struct SurfaceSettings {
    std::size_t time_nodes = 21;
    Eigen::Index nodes_per_axis = 41;
    std::size_t n_sub = 2000;
    double box_halfwidth = 0.0;  // 0 = default box rule
};

struct CheckSettings {
    bool inject_uncorrected_drift = false;
    std::size_t n_bins = 8;
    std::size_t n_paths = 0;  // 0 = run n_paths
};

struct MeanFieldSettings {
    std::string f_family = "half_square";  // half_square | linear | zero
    double coeff = 1.0;
    double damping = 0.5;
    double tol = 1e-3;
    std::size_t max_iter = 30;
};

// Parsed and validated experiment description. Defaults are materialized at
// parse time so echoing the config reproduces the effective settings.
struct RunConfig {
    std::string model_family;
    Params model_params;
    std::string cost_family;
    Params cost_params;
    double horizon = 1.0;
    std::size_t n_steps = 100;
    std::size_t n_paths = 1000;
    SeedSpec seed;
    Pipeline pipeline = Pipeline::Reweight;
    std::string output_dir = "out";
    SurfaceSettings surface;
    CheckSettings checks;
    MeanFieldSettings meanfield;

    TimeGrid grid() const { return TimeGrid(horizon, n_steps); }
    ModelSpec build_model() const { return make_model(model_family, model_params); }
    CostSpec build_cost() const {
        return make_cost(cost_family, cost_params, model_family, model_params,
                         horizon);
    }

    // Effective settings in config syntax, defaults included.
    std::string echo() const;
};

// Flat-section key=value text ("[section]" headers, '#' comments). Unknown
// sections or keys, missing required keys and malformed values raise
// ConfigError with 1-based line context. The resulting model/cost pair is
// probe-validated before returning.
//
// [model] family + family parameters      [cost] family + parameters
// [grid] horizon, n_steps                 [run] pipeline, n_paths, seed,
//                                               stream, output_dir
// [surface] time_nodes, nodes_per_axis, n_sub, box_halfwidth
// [checks] inject_uncorrected_drift, n_bins, n_paths
// [meanfield] f, coeff, damping, tol, max_iter
//
// When [run] has no seed, the EXPTWIST_SEED environment variable (if set)
// supplies the default.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

}  // namespace exptwist
