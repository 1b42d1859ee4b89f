#pragma once

#include <filesystem>
#include <vector>

#include "exptwist/model.hpp"

namespace exptwist {

// Floor applied before any division by the value function. The density
// process is strictly positive, but a Monte Carlo estimate can underflow.
inline constexpr double kValueFloor = 1e-12;

// Closed-form value function; gradient may be empty (finite differences then).
struct AnalyticValue {
    ScalarField value;
    std::function<Vec(double, const Vec&)> gradient;
};

// Axis-aligned box with a tensor grid of nodes.
struct SpaceBox {
    Vec lo;
    Vec hi;
    std::vector<Eigen::Index> nodes_per_axis;

    Eigen::Index dim() const { return lo.size(); }
    double cell(Eigen::Index axis) const {
        return (hi(axis) - lo(axis)) /
               static_cast<double>(nodes_per_axis[static_cast<std::size_t>(axis)] - 1);
    }
    double coord(Eigen::Index axis, Eigen::Index node) const {
        const Eigen::Index n = nodes_per_axis[static_cast<std::size_t>(axis)];
        return node == n - 1 ? hi(axis)
                             : lo(axis) + static_cast<double>(node) * cell(axis);
    }
    Eigen::Index n_space_nodes() const {
        Eigen::Index n = 1;
        for (auto c : nodes_per_axis) n *= c;
        return n;
    }
};

// x0 +/- 6(|sigma| sqrt(T) + |b| T) per axis, probed at (0, x0); 41 nodes per
// axis for d <= 2, 11 above.
SpaceBox default_box(const ModelSpec& model, const TimeGrid& grid, const Vec& x0);

struct ValueEstimate {
    double value = 1.0;
    double stderr = 0.0;
};

// Gridded estimate of v(t,x) = E^{t,x}[exp(-int f - g(X_T))] with multilinear
// interpolation. Values live in [eps_v, 1]; the terminal row is exp(-g)
// exactly. The grid representative is one choice of version of v; the
// function is only determined up to dt x law null sets.
class ValueSurface {
public:
    ValueSurface() = default;
    ValueSurface(std::vector<double> time_nodes, SpaceBox box, double eps_v = kValueFloor);

    // Multilinear in (t,x); x outside the box is clamped to the nearest face.
    // Always >= eps_v.
    double value_at(double t, const Vec& x) const;

    double node_value(std::size_t t_idx, Eigen::Index space_idx) const {
        return values_[t_idx * static_cast<std::size_t>(box_.n_space_nodes()) +
                       static_cast<std::size_t>(space_idx)];
    }
    double node_stderr(std::size_t t_idx, Eigen::Index space_idx) const {
        return stderrs_[t_idx * static_cast<std::size_t>(box_.n_space_nodes()) +
                        static_cast<std::size_t>(space_idx)];
    }
    void set_node(std::size_t t_idx, Eigen::Index space_idx, double v, double se);

    Vec space_node(Eigen::Index flat) const;
    const std::vector<double>& time_nodes() const { return time_nodes_; }
    const SpaceBox& box() const { return box_; }
    double eps_v() const { return eps_v_; }
    double min_cell() const;

    double excursion_fraction = 0.0;  // fraction of sub-path states outside the box

    void dump_csv(const std::filesystem::path& path) const;
    static ValueSurface load_csv(const std::filesystem::path& path,
                                 double eps_v = kValueFloor);

private:
    std::vector<double> time_nodes_;
    SpaceBox box_;
    std::vector<double> values_;
    std::vector<double> stderrs_;
    double eps_v_ = kValueFloor;
};

// Nested Monte Carlo estimate of v at one point: n_sub sub-paths on steps of
// about grid.dt() from (t,x) to T, exp(-sum f dt - g) averaged, clamped to
// [eps_v, 1]. Left-endpoint quadrature matches the Euler discretization.
ValueEstimate estimate_value_point(const ModelSpec& model, const CostSpec& cost,
                                   double t, const Vec& x, std::size_t n_sub,
                                   const TimeGrid& grid, const SeedSpec& seed,
                                   unsigned n_threads = 0);

// Fills a surface node by node with independent per-node seeds; the terminal
// row is set analytically. n_time_nodes are evenly spaced grid times
// including 0 and T.
ValueSurface build_value_surface(const ModelSpec& model, const CostSpec& cost,
                                 const TimeGrid& grid, const SpaceBox& box,
                                 std::size_t n_time_nodes, std::size_t n_sub,
                                 const SeedSpec& seed);

inline double interpolate_value(const ValueSurface& surface, double t, const Vec& x) {
    return surface.value_at(t, x);
}

}  // namespace exptwist
