#pragma once

#include <filesystem>
#include <variant>

#include "exptwist/model.hpp"
#include "exptwist/sampler.hpp"
#include "exptwist/value_surface.hpp"

namespace exptwist {

using ValueSource = std::variant<ValueSurface, AnalyticValue>;

// The twisted dynamics: drift b + Gamma(v)/v, jump proposals thinned by the
// value ratio, and the reweighted initial law nu(dx) = v(0,x) mu(dx) / Z.
// With f = g = 0 (v identically 1) every correction vanishes exactly and
// simulation reproduces the reference sampler draw for draw.
struct TwistedModel {
    ModelSpec base;
    ValueSource value_source;
    double eps_v = kValueFloor;
    // Step for finite-difference gradients of the value source; never below
    // one surface grid cell (differencing interpolated data finer than the
    // cell just returns interpolation slopes).
    double fd_step = 0.0;

    // v(t,x), clamped to [eps_v, inf).
    double value(double t, const Vec& x) const;
    bool has_analytic_gradient() const;
};

// Gamma(v)(t,x) = sigma sigma^T(t,x) grad_x v(t,x); identically zero for
// vanishing diffusion (pure-jump models have no continuous correction).
Vec generalized_gradient(const TwistedModel& twisted, double t, const Vec& x,
                         double fd_step = 0.0);

// b(t,x) + Gamma(v)(t,x) / max(v(t,x), eps_v).
Vec twisted_drift(const TwistedModel& twisted, double t, const Vec& x);

// One thinning proposal under the enhanced rate lambda / max(v, eps_v):
// draws q ~ rho and accepts with probability v(t, x+q), which is a valid
// acceptance probability because v <= 1. Returns the jump if accepted.
std::optional<Vec> twisted_jump_proposal(const TwistedModel& twisted, double t,
                                         const Vec& x, PathRng& rng);

// Rejection sampling of nu: draw x ~ mu, accept with probability v(0,x).
Vec sample_initial_twisted(const TwistedModel& twisted, PathRng& rng);

// Hooks that realize the twisted dynamics in the path sampler.
SimHooks twisted_hooks(const TwistedModel& twisted);

// Direct simulation under Q* by delegation to the reference sampler with
// twisted hooks.
PathBundle simulate_twisted(const TwistedModel& twisted, const TimeGrid& grid,
                            std::size_t n_paths, const SeedSpec& seed);

void for_each_twisted_path(const TwistedModel& twisted, const TimeGrid& grid,
                           std::size_t n_paths, const SeedSpec& seed,
                           const std::function<void(std::size_t, const Path&)>& fn,
                           unsigned n_threads = 0);

// CSV t,x_1..x_d,bstar_1..bstar_d over a grid of probe points.
void dump_drift_field_csv(const TwistedModel& twisted,
                          const std::vector<double>& times,
                          const std::vector<Vec>& points,
                          const std::filesystem::path& path);

}  // namespace exptwist
