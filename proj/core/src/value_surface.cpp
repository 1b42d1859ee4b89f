#include "exptwist/value_surface.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>

#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"
#include "exptwist/parallel.hpp"
#include "exptwist/sampler.hpp"
#include "exptwist/stats.hpp"

namespace exptwist {

SpaceBox default_box(const ModelSpec& model, const TimeGrid& grid, const Vec& x0) {
    const double T = grid.horizon();
    const Mat sigma = model.diffusion(0.0, x0);
    const Vec b = model.drift(0.0, x0);
    const double spread = 6.0 * (sigma.norm() * std::sqrt(T) + b.norm() * T);
    SpaceBox box;
    box.lo = x0.array() - spread;
    box.hi = x0.array() + spread;
    const Eigen::Index nodes = model.dim <= 2 ? 41 : 11;
    box.nodes_per_axis.assign(static_cast<std::size_t>(model.dim), nodes);
    return box;
}

ValueSurface::ValueSurface(std::vector<double> time_nodes, SpaceBox box, double eps_v)
    : time_nodes_(std::move(time_nodes)), box_(std::move(box)), eps_v_(eps_v) {
    if (time_nodes_.size() < 2)
        throw std::invalid_argument("ValueSurface: need at least two time nodes");
    for (auto n : box_.nodes_per_axis)
        if (n < 2) throw std::invalid_argument("ValueSurface: need >= 2 nodes per axis");
    const std::size_t total =
        time_nodes_.size() * static_cast<std::size_t>(box_.n_space_nodes());
    values_.assign(total, 1.0);
    stderrs_.assign(total, 0.0);
}

void ValueSurface::set_node(std::size_t t_idx, Eigen::Index space_idx, double v,
                            double se) {
    const std::size_t at = t_idx * static_cast<std::size_t>(box_.n_space_nodes()) +
                           static_cast<std::size_t>(space_idx);
    values_[at] = v;
    stderrs_[at] = se;
}

Vec ValueSurface::space_node(Eigen::Index flat) const {
    Vec x(box_.dim());
    Eigen::Index rem = flat;
    for (Eigen::Index axis = box_.dim() - 1; axis >= 0; --axis) {
        const Eigen::Index n = box_.nodes_per_axis[static_cast<std::size_t>(axis)];
        x(axis) = box_.coord(axis, rem % n);
        rem /= n;
    }
    return x;
}

double ValueSurface::min_cell() const {
    double m = box_.cell(0);
    for (Eigen::Index a = 1; a < box_.dim(); ++a) m = std::min(m, box_.cell(a));
    return m;
}

double ValueSurface::value_at(double t, const Vec& x) const {
    // time bracket
    const auto& ts = time_nodes_;
    std::size_t ti = 0;
    double tfrac = 0.0;
    if (t <= ts.front()) {
        ti = 0;
    } else if (t >= ts.back()) {
        ti = ts.size() - 2;
        tfrac = 1.0;
    } else {
        while (ti + 2 < ts.size() && ts[ti + 1] <= t) ++ti;
        tfrac = (t - ts[ti]) / (ts[ti + 1] - ts[ti]);
    }

    // per-axis bracket with clamping to the box faces
    const Eigen::Index d = box_.dim();
    std::vector<Eigen::Index> lo_idx(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    for (Eigen::Index a = 0; a < d; ++a) {
        const Eigen::Index n = box_.nodes_per_axis[static_cast<std::size_t>(a)];
        double c = x(a);
        if (c <= box_.lo(a)) {
            lo_idx[static_cast<std::size_t>(a)] = 0;
            frac[static_cast<std::size_t>(a)] = 0.0;
        } else if (c >= box_.hi(a)) {
            lo_idx[static_cast<std::size_t>(a)] = n - 2;
            frac[static_cast<std::size_t>(a)] = 1.0;
        } else {
            const double pos = (c - box_.lo(a)) / box_.cell(a);
            Eigen::Index i = static_cast<Eigen::Index>(pos);
            if (i > n - 2) i = n - 2;
            lo_idx[static_cast<std::size_t>(a)] = i;
            frac[static_cast<std::size_t>(a)] = pos - static_cast<double>(i);
        }
    }

    auto corner_value = [&](std::size_t t_idx, unsigned mask) {
        Eigen::Index flat = 0;
        for (Eigen::Index a = 0; a < d; ++a) {
            const Eigen::Index n = box_.nodes_per_axis[static_cast<std::size_t>(a)];
            const Eigen::Index idx = lo_idx[static_cast<std::size_t>(a)] +
                                     ((mask >> a) & 1u ? 1 : 0);
            flat = flat * n + idx;
        }
        return node_value(t_idx, flat);
    };

    auto blend_space = [&](std::size_t t_idx) {
        double acc = 0.0;
        const unsigned corners = 1u << d;
        for (unsigned mask = 0; mask < corners; ++mask) {
            double w = 1.0;
            for (Eigen::Index a = 0; a < d; ++a) {
                const double f = frac[static_cast<std::size_t>(a)];
                w *= ((mask >> a) & 1u) ? f : (1.0 - f);
            }
            if (w != 0.0) acc += w * corner_value(t_idx, mask);
        }
        return acc;
    };

    const double v0 = blend_space(ti);
    const double v = tfrac == 0.0
                         ? v0
                         : (1.0 - tfrac) * v0 + tfrac * blend_space(ti + 1);
    return std::max(eps_v_, v);
}

ValueEstimate estimate_value_point(const ModelSpec& model, const CostSpec& cost,
                                   double t, const Vec& x, std::size_t n_sub,
                                   const TimeGrid& grid, const SeedSpec& seed,
                                   unsigned n_threads) {
    const double T = grid.horizon();
    if (t < 0.0 || t > T)
        throw std::invalid_argument("estimate_value_point: t outside [0, T]");
    const double remaining = T - t;
    if (remaining <= 0.0)
        return {std::clamp(std::exp(-cost.g(x)), kValueFloor, 1.0), 0.0};
    if (n_sub < 2)
        throw std::invalid_argument("estimate_value_point: n_sub must be >= 2");

    const auto m = static_cast<std::size_t>(
        std::max(1.0, std::round(remaining / grid.dt())));
    const TimeGrid sub_grid(remaining, m);
    const double sub_dt = sub_grid.dt();

    // time-shifted copy of the dynamics started at (t, x)
    ModelSpec sub = model;
    sub.initial_law = PointMass{x};
    sub.drift = [t, base = model.drift](double s, const Vec& y) { return base(t + s, y); };
    sub.diffusion = [t, base = model.diffusion](double s, const Vec& y) {
        return base(t + s, y);
    };
    if (model.has_jumps()) {
        sub.jump->intensity = [t, base = model.jump->intensity](double s, const Vec& y) {
            return base(t + s, y);
        };
        if (const auto* sampled = std::get_if<SampledJumpLaw>(&model.jump->size_law)) {
            sub.jump->size_law = SampledJumpLaw{
                [t, base = sampled->sampler](double s, const Vec& y, PathRng& rng) {
                    return base(t + s, y, rng);
                }};
        }
    }

    std::vector<double> draws(n_sub);
    std::atomic<std::size_t> diverged{0};
    for_each_path(
        sub, sub_grid, n_sub, seed, {},
        [&](std::size_t i, const Path& p) {
            if (p.diverged) {
                diverged.fetch_add(1, std::memory_order_relaxed);
                draws[i] = std::numeric_limits<double>::quiet_NaN();
                return;
            }
            KahanSum running;
            for (std::size_t k = 0; k < p.n_steps(); ++k)
                running.add(cost.f(t + sub_grid.time(k),
                                   p.states.col(static_cast<Eigen::Index>(k))));
            draws[i] = std::exp(-running.value() * sub_dt - cost.g(p.terminal()));
        },
        n_threads);

    if (diverged.load() == n_sub)
        throw EstimationFailure("estimate_value_point: all sub-paths diverged");
    if (diverged.load() > 0) {
        std::erase_if(draws, [](double v) { return std::isnan(v); });
    }

    ValueEstimate est;
    est.value = std::clamp(mean(draws), kValueFloor, 1.0);
    est.stderr = std_error(draws);
    return est;
}

ValueSurface build_value_surface(const ModelSpec& model, const CostSpec& cost,
                                 const TimeGrid& grid, const SpaceBox& box,
                                 std::size_t n_time_nodes, std::size_t n_sub,
                                 const SeedSpec& seed) {
    if (n_time_nodes < 2)
        throw std::invalid_argument("build_value_surface: need >= 2 time nodes");
    std::vector<double> time_nodes(n_time_nodes);
    for (std::size_t i = 0; i < n_time_nodes; ++i)
        time_nodes[i] = grid.horizon() * static_cast<double>(i) /
                        static_cast<double>(n_time_nodes - 1);
    time_nodes.back() = grid.horizon();

    ValueSurface surface(time_nodes, box);
    const Eigen::Index n_space = box.n_space_nodes();

    // terminal row is analytic
    for (Eigen::Index s = 0; s < n_space; ++s) {
        const double v = std::exp(-cost.g(surface.space_node(s)));
        surface.set_node(n_time_nodes - 1, s, std::max(kValueFloor, v), 0.0);
    }

    const std::size_t n_jobs = (n_time_nodes - 1) * static_cast<std::size_t>(n_space);
    std::string first_error;
    std::mutex error_mutex;
    parallel_for(
        n_jobs,
        [&](std::size_t job) {
            const std::size_t t_idx = job / static_cast<std::size_t>(n_space);
            const auto s_idx =
                static_cast<Eigen::Index>(job % static_cast<std::size_t>(n_space));
            const Vec x = surface.space_node(s_idx);
            try {
                const auto est =
                    estimate_value_point(model, cost, time_nodes[t_idx], x, n_sub,
                                         grid, seed.substream(job + 1), 1);
                surface.set_node(t_idx, s_idx, est.value, est.stderr);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) {
                    first_error = "node (t=" + std::to_string(time_nodes[t_idx]) +
                                  ", flat=" + std::to_string(s_idx) + "): " + e.what();
                }
            }
        },
        /*block=*/8);
    if (!first_error.empty())
        throw EstimationFailure("build_value_surface: " + first_error);

    // excursion diagnostic: fraction of reference-path states outside the box
    {
        const std::size_t probes = 256;
        std::vector<double> outside(probes, 0.0);
        for_each_path(model, grid, probes, seed.substream(0), {},
                      [&](std::size_t i, const Path& p) {
                          std::size_t count = 0;
                          const auto cols = p.states.cols();
                          for (Eigen::Index k = 0; k < cols; ++k) {
                              const Vec x = p.states.col(k);
                              for (Eigen::Index a = 0; a < box.dim(); ++a)
                                  if (x(a) < box.lo(a) || x(a) > box.hi(a)) {
                                      ++count;
                                      break;
                                  }
                          }
                          outside[i] = static_cast<double>(count) /
                                       static_cast<double>(cols);
                      });
        surface.excursion_fraction = mean(outside);
    }
    return surface;
}

void ValueSurface::dump_csv(const std::filesystem::path& path) const {
    std::vector<std::string> cols{"t"};
    for (Eigen::Index a = 0; a < box_.dim(); ++a)
        cols.push_back("x_" + std::to_string(a + 1));
    cols.push_back("v");
    cols.push_back("stderr");
    csv::Writer writer(cols);
    for (std::size_t ti = 0; ti < time_nodes_.size(); ++ti) {
        for (Eigen::Index s = 0; s < box_.n_space_nodes(); ++s) {
            std::vector<double> row{time_nodes_[ti]};
            const Vec x = space_node(s);
            for (Eigen::Index a = 0; a < x.size(); ++a) row.push_back(x(a));
            row.push_back(node_value(ti, s));
            row.push_back(node_stderr(ti, s));
            writer.add_row(row);
        }
    }
    writer.write_file(path);
}

ValueSurface ValueSurface::load_csv(const std::filesystem::path& path, double eps_v) {
    const auto table = csv::read_file(path);
    if (table.columns.size() < 4 || table.columns.front() != "t")
        throw std::runtime_error("ValueSurface::load_csv: unexpected header");
    const Eigen::Index d = static_cast<Eigen::Index>(table.columns.size()) - 3;
    const std::size_t v_col = static_cast<std::size_t>(d) + 1;

    std::vector<double> time_nodes;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const double t = table.number(r, 0);
        if (time_nodes.empty() || t != time_nodes.back()) time_nodes.push_back(t);
    }

    const std::size_t per_time = table.rows.size() / time_nodes.size();
    if (per_time * time_nodes.size() != table.rows.size())
        throw std::runtime_error("ValueSurface::load_csv: ragged node table");

    // per-axis node coordinates from the first time block
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < per_time; ++r) {
        for (Eigen::Index a = 0; a < d; ++a) {
            const double c = table.number(r, static_cast<std::size_t>(a) + 1);
            auto& ax = axes[static_cast<std::size_t>(a)];
            if (std::find(ax.begin(), ax.end(), c) == ax.end()) ax.push_back(c);
        }
    }

    SpaceBox box;
    box.lo = Vec(d);
    box.hi = Vec(d);
    for (Eigen::Index a = 0; a < d; ++a) {
        const auto& ax = axes[static_cast<std::size_t>(a)];
        box.lo(a) = ax.front();
        box.hi(a) = ax.back();
        box.nodes_per_axis.push_back(static_cast<Eigen::Index>(ax.size()));
    }
    if (static_cast<std::size_t>(box.n_space_nodes()) != per_time)
        throw std::runtime_error("ValueSurface::load_csv: not a tensor grid");

    ValueSurface surface(time_nodes, box, eps_v);
    for (std::size_t ti = 0; ti < time_nodes.size(); ++ti) {
        for (std::size_t s = 0; s < per_time; ++s) {
            const std::size_t r = ti * per_time + s;
            surface.set_node(ti, static_cast<Eigen::Index>(s),
                             table.number(r, v_col), table.number(r, v_col + 1));
        }
    }
    return surface;
}

}  // namespace exptwist
