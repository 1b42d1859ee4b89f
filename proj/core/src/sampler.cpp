#include "exptwist/sampler.hpp"

#include <cmath>
#include <random>

#include "exptwist/csv.hpp"
#include "exptwist/parallel.hpp"

namespace exptwist {

std::size_t PathBundle::divergence_count() const {
    std::size_t n = 0;
    for (const auto& p : paths) n += p.diverged ? 1 : 0;
    return n;
}

namespace {

Vec draw_initial(const ModelSpec& model, const SimHooks& hooks, PathRng& rng) {
    if (hooks.initial_override) return hooks.initial_override(rng);
    if (const auto* point = std::get_if<PointMass>(&model.initial_law))
        return point->x0;
    return std::get<SampledLaw>(model.initial_law).sampler(rng);
}

Vec draw_jump_size(const JumpSizeLaw& law, double t, const Vec& x, PathRng& rng) {
    if (const auto* discrete = std::get_if<DiscreteJumpLaw>(&law)) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double u = unif(rng);
        for (const auto& [q, p] : discrete->atoms) {
            if (u < p) return q;
            u -= p;
        }
        return discrete->atoms.back().first;
    }
    if (const auto* gauss = std::get_if<GaussianJumpLaw>(&law)) {
        std::normal_distribution<double> normal(gauss->mean, gauss->stddev);
        Vec q(1);
        q(0) = normal(rng);
        return q;
    }
    return std::get<SampledJumpLaw>(law).sampler(t, x, rng);
}

void simulate_one(const ModelSpec& model, const TimeGrid& grid,
                  const SimHooks& hooks, PathRng& rng, Path& out) {
    const Eigen::Index d = model.dim;
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    out.states.resize(d, static_cast<Eigen::Index>(n) + 1);
    out.jump_marks.clear();
    out.diverged = false;

    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Vec x = draw_initial(model, hooks, rng);
    out.states.col(0) = x;

    const DriftFn& drift = hooks.drift_override ? hooks.drift_override : model.drift;
    Vec noise(d);
    Vec next(d);

    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);

        next = x + drift(t, x) * dt;
        const Mat sigma = model.diffusion(t, x);
        if (sigma.cwiseAbs().maxCoeff() > 0.0) {
            for (Eigen::Index i = 0; i < d; ++i) noise(i) = normal(rng);
            next.noalias() += sigma * (sqrt_dt * noise);
        }

        if (model.has_jumps()) {
            // proposal rate frozen at the step's left endpoint
            const double rate = hooks.proposal_rate ? hooks.proposal_rate(t, x)
                                                    : model.jump->intensity(t, x);
            if (rate > 0.0) {
                std::poisson_distribution<unsigned> pois(rate * dt);
                const unsigned n_prop = pois(rng);
                for (unsigned j = 0; j < n_prop; ++j) {
                    const Vec q = draw_jump_size(model.jump->size_law, t, x, rng);
                    bool accepted = true;
                    if (hooks.jump_accept) {
                        const double p = hooks.jump_accept(t, x, q);
                        if (p < 1.0) accepted = unif(rng) < p;
                    }
                    if (accepted) {
                        next += q;
                        out.jump_marks.emplace_back(k + 1, q);
                    }
                }
            }
        }

        if (!next.allFinite() || next.norm() > kDivergenceGuard) {
            out.diverged = true;
            for (std::size_t m = k + 1; m <= n; ++m)
                out.states.col(static_cast<Eigen::Index>(m)) = x;
            return;
        }
        x = next;
        out.states.col(static_cast<Eigen::Index>(k) + 1) = x;
    }
}

}  // namespace

void for_each_path(const ModelSpec& model, const TimeGrid& grid,
                   std::size_t n_paths, const SeedSpec& seed,
                   const SimHooks& hooks,
                   const std::function<void(std::size_t, const Path&)>& fn,
                   unsigned n_threads) {
    if (n_paths < 1) throw std::invalid_argument("for_each_path: n_paths must be >= 1");
    parallel_for(
        n_paths,
        [&](std::size_t i) {
            thread_local Path buffer;
            PathRng rng = derive_path_seed(seed, i);
            simulate_one(model, grid, hooks, rng, buffer);
            fn(i, buffer);
        },
        /*block=*/1024, n_threads);
}

PathBundle sample_paths(const ModelSpec& model, const TimeGrid& grid,
                        std::size_t n_paths, const SeedSpec& seed,
                        const SimHooks& hooks) {
    PathBundle bundle{grid, model.dim, std::vector<Path>(n_paths)};
    for_each_path(model, grid, n_paths, seed, hooks,
                  [&](std::size_t i, const Path& p) { bundle.paths[i] = p; });
    return bundle;
}

void dump_paths_csv(const PathBundle& bundle, const std::filesystem::path& path) {
    std::vector<std::string> cols{"path_id", "t"};
    for (Eigen::Index i = 0; i < bundle.dim; ++i)
        cols.push_back("x_" + std::to_string(i + 1));
    csv::Writer writer(cols);
    const auto times = bundle.grid.times();
    for (std::size_t p = 0; p < bundle.paths.size(); ++p) {
        const auto& states = bundle.paths[p].states;
        for (std::size_t k = 0; k < times.size(); ++k) {
            std::vector<std::string> row{std::to_string(p),
                                         csv::format_double(times[k])};
            for (Eigen::Index i = 0; i < bundle.dim; ++i)
                row.push_back(csv::format_double(states(i, static_cast<Eigen::Index>(k))));
            writer.add_row(row);
        }
    }
    writer.write_file(path);
}

}  // namespace exptwist
