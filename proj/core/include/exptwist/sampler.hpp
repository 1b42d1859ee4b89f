#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "exptwist/model.hpp"

namespace exptwist {

// State magnitude beyond which a path is flagged diverged and frozen.
inline constexpr double kDivergenceGuard = 1e12;

// One discretized path: states(:,k) is X at grid time k. jump_marks records
// (arrival step index, jump size) with strictly increasing indices.
struct Path {
    Mat states;  // dim x (n_steps + 1)
    std::vector<std::pair<std::size_t, Vec>> jump_marks;
    bool diverged = false;

    Eigen::Index dim() const { return states.rows(); }
    std::size_t n_steps() const {
        return static_cast<std::size_t>(states.cols()) - 1;
    }
    Vec terminal() const { return states.col(states.cols() - 1); }
};

struct PathBundle {
    TimeGrid grid;
    Eigen::Index dim = 1;
    std::vector<Path> paths;

    std::size_t size() const { return paths.size(); }
    std::size_t divergence_count() const;
};

// Optional overrides threaded through the simulation kernel. A hook that is
// not set consumes no randomness, so a twisted run with trivial hooks is
// draw-for-draw identical to the reference run.
struct SimHooks {
    // Replaces the model drift b.
    DriftFn drift_override;
    // Replaces the jump proposal rate (reference: model intensity).
    RateFn proposal_rate;
    // Acceptance probability for a proposed jump q from state (t,x).
    // Values >= 1 accept without consuming a uniform.
    std::function<double(double t, const Vec& x, const Vec& q)> jump_accept;
    // Replaces the model initial law.
    std::function<Vec(PathRng&)> initial_override;
};

// Simulates paths path_index = 0..n_paths-1, invoking fn(index, path) once
// per path. Paths are Euler-Maruyama with thinned jumps applied after the
// diffusion sub-step; per-path RNG derivation makes the result independent
// of thread count. The Path reference passed to fn is a reusable buffer:
// copy out anything that must survive the call. fn may run concurrently for
// different indices and must only touch per-index state.
void for_each_path(const ModelSpec& model, const TimeGrid& grid,
                   std::size_t n_paths, const SeedSpec& seed,
                   const SimHooks& hooks,
                   const std::function<void(std::size_t, const Path&)>& fn,
                   unsigned n_threads = 0);

// Full-storage variant.
PathBundle sample_paths(const ModelSpec& model, const TimeGrid& grid,
                        std::size_t n_paths, const SeedSpec& seed,
                        const SimHooks& hooks = {});

// One CSV row per (path, time): path_id,t,x_1..x_d.
void dump_paths_csv(const PathBundle& bundle, const std::filesystem::path& path);

}  // namespace exptwist
