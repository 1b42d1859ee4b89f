#include "exptwist/checks.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"
#include "exptwist/stats.hpp"

namespace exptwist {

double carre_du_champ(const ModelSpec& model, const TestFunction& phi,
                      const TestFunction& psi, double t, const Vec& x,
                      const FdOptions& opt) {
    const TestFunction product = TestFunction::product(phi, psi);
    const double a_prod = eval_generator(model, product, t, x, opt);
    const double a_phi = eval_generator(model, phi, t, x, opt);
    const double a_psi = eval_generator(model, psi, t, x, opt);
    return a_prod - psi(t, x) * a_phi - phi(t, x) * a_psi;
}

double twisted_generator_apply(const TwistedModel& twisted, const TestFunction& phi,
                               double t, const Vec& x, const FdOptions& opt) {
    const ModelSpec& model = twisted.base;
    const double dphi_dt = time_derivative(phi, t, x, opt);
    const Vec grad = space_gradient(phi, t, x, opt);
    const Vec bstar = twisted_drift(twisted, t, x);
    const Mat sigma = model.diffusion(t, x);
    const Mat a = sigma * sigma.transpose();

    double acc = dphi_dt + grad.dot(bstar);
    if (a.cwiseAbs().maxCoeff() > 0.0) {
        const Mat hess = space_hessian(phi, t, x, opt);
        acc += 0.5 * (a.array() * hess.array()).sum();
    }

    if (model.has_jumps()) {
        const double lambda = model.jump->intensity(t, x);
        if (lambda > 0.0) {
            const double v0 = std::max(twisted.value(t, x), twisted.eps_v);
            const double base = phi(t, x);
            acc += lambda / v0 *
                   jump_size_expectation(
                       *model.jump, t, x,
                       [&](const Vec& q) {
                           return twisted.value(t, x + q) * (phi(t, x + q) - base);
                       },
                       opt);
        }
    }
    if (!std::isfinite(acc))
        throw NumericalError("twisted_generator_apply: non-finite result");
    return acc;
}

// --- martingale residual ----------------------------------------------------

void ResidualReport::write_csv(const std::filesystem::path& path) const {
    csv::Writer writer({"bin_lo", "bin_hi", "mean", "stderr", "z"});
    for (const auto& b : bins)
        writer.add_row(std::vector<double>{b.lo, b.hi, b.mean, b.stderr, b.z});
    writer.write_file(path);
}

ResidualReport martingale_residual(const TwistedModel& twisted,
                                   const TestFunction& phi, const TimeGrid& grid,
                                   std::size_t n_paths, const SeedSpec& seed,
                                   std::size_t n_bins,
                                   const MartingaleOptions& opt) {
    if (n_bins < 3)
        throw std::invalid_argument("martingale_residual: need n_bins >= 3");

    SimHooks hooks = twisted_hooks(twisted);
    if (opt.simulation_drift_override)
        hooks.drift_override = opt.simulation_drift_override;

    // pilot pass pins the quantile bin edges
    std::vector<double> pilot;
    pilot.reserve(opt.pilot_paths * grid.n_steps());
    {
        std::vector<std::vector<double>> slots(opt.pilot_paths);
        for_each_path(twisted.base, grid, opt.pilot_paths, seed.substream(0xb1),
                      hooks, [&](std::size_t i, const Path& p) {
                          auto& s = slots[i];
                          s.resize(grid.n_steps());
                          for (std::size_t k = 0; k < grid.n_steps(); ++k)
                              s[k] = p.states(0, static_cast<Eigen::Index>(k));
                      });
        for (auto& s : slots) pilot.insert(pilot.end(), s.begin(), s.end());
    }
    const auto edges = quantile_edges(std::move(pilot), n_bins);

    auto bin_of = [&](double x0) {
        std::size_t b = 0;
        while (b < edges.size() && x0 > edges[b]) ++b;
        return b;
    };

    // per-path partials keep the reduction deterministic
    struct Partial {
        double sum = 0.0;
        double sumsq = 0.0;
        std::size_t count = 0;
    };
    std::vector<std::vector<Partial>> partials(
        n_paths, std::vector<Partial>(n_bins));
    const double dt = grid.dt();
    const FdOptions fd;

    for_each_path(twisted.base, grid, n_paths, seed, hooks,
                  [&](std::size_t i, const Path& p) {
                      if (p.diverged) return;
                      auto& mine = partials[i];
                      for (std::size_t k = 0; k < grid.n_steps(); ++k) {
                          const double t = grid.time(k);
                          const Vec x = p.states.col(static_cast<Eigen::Index>(k));
                          const Vec xn =
                              p.states.col(static_cast<Eigen::Index>(k) + 1);
                          const double incr =
                              phi(grid.time(k + 1), xn) - phi(t, x) -
                              twisted_generator_apply(twisted, phi, t, x, fd) * dt;
                          auto& cell = mine[bin_of(x(0))];
                          cell.sum += incr;
                          cell.sumsq += incr * incr;
                          cell.count += 1;
                      }
                  });

    std::vector<Partial> totals(n_bins);
    for (const auto& mine : partials)
        for (std::size_t b = 0; b < n_bins; ++b) {
            totals[b].sum += mine[b].sum;
            totals[b].sumsq += mine[b].sumsq;
            totals[b].count += mine[b].count;
        }

    ResidualReport report;
    report.threshold = opt.z_threshold;
    const double allowance = opt.bias_allowance * dt;
    const double lo_edge = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n_bins; ++b) {
        // merge empty bins into the next nonempty one
        if (totals[b].count == 0) {
            if (b + 1 < n_bins) {
                totals[b + 1].sum += totals[b].sum;
                totals[b + 1].sumsq += totals[b].sumsq;
                totals[b + 1].count += totals[b].count;
            }
            report.merged_bins += 1;
            continue;
        }
        ResidualReport::Bin bin;
        bin.lo = b == 0 ? lo_edge : edges[b - 1];
        bin.hi = b == n_bins - 1 ? std::numeric_limits<double>::infinity()
                                 : edges[b];
        const double n = static_cast<double>(totals[b].count);
        bin.mean = totals[b].sum / n;
        const double var =
            std::max(0.0, totals[b].sumsq / n - bin.mean * bin.mean);
        bin.stderr = std::sqrt(var / n);
        bin.count = totals[b].count;
        const double excess = std::max(0.0, std::abs(bin.mean) - allowance);
        bin.z = bin.stderr > 0.0
                    ? excess / bin.stderr
                    : (excess > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        report.max_z = std::max(report.max_z, bin.z);
        report.bins.push_back(bin);
    }
    report.pass = report.max_z < report.threshold;
    return report;
}

// --- PDE residual -----------------------------------------------------------

void NodeResidualReport::write_csv(const std::filesystem::path& path) const {
    if (nodes.empty()) {
        csv::Writer writer({"t", "x_1", "residual", "tolerance"});
        writer.write_file(path);
        return;
    }
    const Eigen::Index d = nodes.front().x.size();
    std::vector<std::string> cols{"t"};
    for (Eigen::Index a = 0; a < d; ++a) cols.push_back("x_" + std::to_string(a + 1));
    cols.push_back("residual");
    cols.push_back("tolerance");
    csv::Writer writer(cols);
    for (const auto& node : nodes) {
        std::vector<double> row{node.t};
        for (Eigen::Index a = 0; a < d; ++a) row.push_back(node.x(a));
        row.push_back(node.residual);
        row.push_back(node.tolerance);
        writer.add_row(row);
    }
    writer.write_file(path);
}

namespace {

NodeResidualReport pde_residual_analytic(const AnalyticValue& value,
                                         const ModelSpec& model,
                                         const CostSpec& cost,
                                         const std::vector<std::pair<double, Vec>>& probes,
                                         const PdeOptions& opt) {
    TestFunction v_fn;
    v_fn.value = value.value;
    if (value.gradient) v_fn.gradient = value.gradient;

    FdOptions fd;
    fd.fd_step = opt.fd_step;

    NodeResidualReport report;
    for (const auto& [t, x] : probes) {
        const double res =
            eval_generator(model, v_fn, t, x, fd) - cost.f(t, x) * value.value(t, x);
        NodeResidualReport::Node node{t, x, res, opt.abs_tol};
        report.max_abs_residual = std::max(report.max_abs_residual, std::abs(res));
        if (opt.abs_tol > 0.0 && std::abs(res) > opt.abs_tol) report.pass = false;
        report.nodes.push_back(std::move(node));
    }
    return report;
}

// Every term of the residual at an interior node is linear in the stored node
// values, so the statistical error propagates exactly through the stencil
// weights (node estimates are independent by construction).
NodeResidualReport pde_residual_surface(const ValueSurface& surface,
                                        const ModelSpec& model,
                                        const CostSpec& cost,
                                        const PdeOptions& opt) {
    NodeResidualReport report;
    const auto& ts = surface.time_nodes();
    const auto& box = surface.box();
    const Eigen::Index d = box.dim();
    const Eigen::Index n_space = box.n_space_nodes();

    std::vector<Eigen::Index> strides(static_cast<std::size_t>(d), 1);
    for (Eigen::Index a = d - 2; a >= 0; --a)
        strides[static_cast<std::size_t>(a)] =
            strides[static_cast<std::size_t>(a) + 1] *
            box.nodes_per_axis[static_cast<std::size_t>(a) + 1];

    auto multi_index = [&](Eigen::Index flat) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
        for (Eigen::Index a = 0; a < d; ++a) {
            idx[static_cast<std::size_t>(a)] = flat / strides[static_cast<std::size_t>(a)];
            flat %= strides[static_cast<std::size_t>(a)];
        }
        return idx;
    };

    double h2_sum = 0.0;
    for (Eigen::Index a = 0; a < d; ++a) h2_sum += box.cell(a) * box.cell(a);

    for (std::size_t ti = 1; ti + 1 < ts.size(); ++ti) {
        const double t = ts[ti];
        const double ht_f = ts[ti + 1] - ts[ti];
        const double ht_b = ts[ti] - ts[ti - 1];
        for (Eigen::Index s = 0; s < n_space; ++s) {
            const auto idx = multi_index(s);
            bool interior = true;
            for (Eigen::Index a = 0; a < d; ++a) {
                const auto i = idx[static_cast<std::size_t>(a)];
                if (i == 0 || i == box.nodes_per_axis[static_cast<std::size_t>(a)] - 1)
                    interior = false;
            }
            if (!interior) continue;

            const Vec x = surface.space_node(s);
            const Vec b = model.drift(t, x);
            const Mat sigma = model.diffusion(t, x);
            const Mat a_mat = sigma * sigma.transpose();

            // stencil weights on (time index, flat space index)
            std::map<std::pair<std::size_t, Eigen::Index>, double> weights;
            auto add = [&](std::size_t tj, Eigen::Index flat, double w) {
                weights[{tj, flat}] += w;
            };

            // time derivative (central; node rows may be unevenly spaced)
            add(ti + 1, s, 1.0 / (ht_f + ht_b));
            add(ti - 1, s, -1.0 / (ht_f + ht_b));

            for (Eigen::Index ax = 0; ax < d; ++ax) {
                const double h = box.cell(ax);
                const Eigen::Index stride = strides[static_cast<std::size_t>(ax)];
                add(ti, s + stride, b(ax) / (2.0 * h));
                add(ti, s - stride, -b(ax) / (2.0 * h));
                const double caa = 0.5 * a_mat(ax, ax);
                if (caa != 0.0) {
                    add(ti, s + stride, caa / (h * h));
                    add(ti, s, -2.0 * caa / (h * h));
                    add(ti, s - stride, caa / (h * h));
                }
            }
            bool skip = false;
            for (Eigen::Index ai = 0; ai < d && !skip; ++ai) {
                for (Eigen::Index aj = ai + 1; aj < d; ++aj) {
                    const double cij = a_mat(ai, aj);
                    if (cij == 0.0) continue;
                    const double hi = box.cell(ai), hj = box.cell(aj);
                    const Eigen::Index si = strides[static_cast<std::size_t>(ai)];
                    const Eigen::Index sj = strides[static_cast<std::size_t>(aj)];
                    const double w = cij / (4.0 * hi * hj);
                    add(ti, s + si + sj, w);
                    add(ti, s + si - sj, -w);
                    add(ti, s - si + sj, -w);
                    add(ti, s - si - sj, w);
                }
            }

            // jump term: discrete atoms resolved through interpolation weights
            if (model.has_jumps() && !skip) {
                const double lambda = model.jump->intensity(t, x);
                if (lambda > 0.0) {
                    const auto* discrete =
                        std::get_if<DiscreteJumpLaw>(&model.jump->size_law);
                    if (!discrete) {
                        ++report.skipped;
                        skip = true;
                    } else {
                        for (const auto& [q, prob] : discrete->atoms) {
                            const Vec target = x + q;
                            // locate target in the grid; outside box -> skip
                            std::vector<Eigen::Index> lo(static_cast<std::size_t>(d));
                            std::vector<double> frac(static_cast<std::size_t>(d));
                            for (Eigen::Index ax = 0; ax < d; ++ax) {
                                const double pos =
                                    (target(ax) - box.lo(ax)) / box.cell(ax);
                                const Eigen::Index n_ax =
                                    box.nodes_per_axis[static_cast<std::size_t>(ax)];
                                if (pos < 0.0 ||
                                    pos > static_cast<double>(n_ax - 1) + 1e-12) {
                                    skip = true;
                                    break;
                                }
                                Eigen::Index i = static_cast<Eigen::Index>(pos);
                                if (i > n_ax - 2) i = n_ax - 2;
                                lo[static_cast<std::size_t>(ax)] = i;
                                frac[static_cast<std::size_t>(ax)] =
                                    pos - static_cast<double>(i);
                            }
                            if (skip) break;
                            const unsigned corners = 1u << d;
                            for (unsigned mask = 0; mask < corners; ++mask) {
                                double w = lambda * prob;
                                Eigen::Index flat = 0;
                                for (Eigen::Index ax = 0; ax < d; ++ax) {
                                    const double fr = frac[static_cast<std::size_t>(ax)];
                                    const bool hi_corner = (mask >> ax) & 1u;
                                    w *= hi_corner ? fr : 1.0 - fr;
                                    flat = flat * box.nodes_per_axis
                                                      [static_cast<std::size_t>(ax)] +
                                           lo[static_cast<std::size_t>(ax)] +
                                           (hi_corner ? 1 : 0);
                                }
                                if (w != 0.0) add(ti, flat, w);
                            }
                            add(ti, s, -lambda * prob);
                        }
                    }
                }
            }
            if (skip) {
                ++report.skipped;
                continue;
            }

            add(ti, s, -cost.f(t, x));  // minus f v

            double residual = 0.0;
            double var = 0.0;
            for (const auto& [key, w] : weights) {
                residual += w * surface.node_value(key.first, key.second);
                const double se = surface.node_stderr(key.first, key.second);
                var += w * w * se * se;
            }

            const double ht = std::max(ht_f, ht_b);
            const double tol = opt.c_bias * (opt.sim_dt + h2_sum + ht * ht) +
                               3.0 * std::sqrt(var);
            report.max_abs_residual =
                std::max(report.max_abs_residual, std::abs(residual));
            if (std::abs(residual) > tol) report.pass = false;
            report.nodes.push_back({t, x, residual, tol});
        }
    }
    return report;
}

}  // namespace

NodeResidualReport pde_residual(const ValueSource& source, const ModelSpec& model,
                                const CostSpec& cost,
                                const std::vector<std::pair<double, Vec>>& probes,
                                const PdeOptions& opt) {
    if (const auto* analytic = std::get_if<AnalyticValue>(&source))
        return pde_residual_analytic(*analytic, model, cost, probes, opt);
    return pde_residual_surface(std::get<ValueSurface>(source), model, cost, opt);
}

// --- integrability ----------------------------------------------------------

IntegrabilityReport integrability_probe(const TwistedModel& twisted,
                                        const TimeGrid& grid, std::size_t n_paths,
                                        double p, const SeedSpec& seed) {
    if (!(p > 1.0 && p < 2.0))
        throw std::invalid_argument("integrability_probe: p must lie in (1,2)");

    const double dt = grid.dt();
    const std::size_t doubled = 2 * n_paths;
    std::vector<double> integrals(doubled, 0.0);
    for_each_twisted_path(
        twisted, grid, doubled, seed,
        [&](std::size_t i, const Path& path) {
            if (path.diverged) return;
            KahanSum acc;
            for (std::size_t k = 0; k < grid.n_steps(); ++k) {
                const double t = grid.time(k);
                const Vec x = path.states.col(static_cast<Eigen::Index>(k));
                const double v = std::max(twisted.value(t, x), twisted.eps_v);
                const Vec correction = generalized_gradient(twisted, t, x) / v;
                acc.add(std::pow(correction.norm(), p));
            }
            integrals[i] = acc.value() * dt;
        });

    IntegrabilityReport report;
    const std::span<const double> first(integrals.data(), n_paths);
    report.estimate = mean(first);
    report.stderr = std_error(first);
    report.estimate_doubled = mean(integrals);
    const double denom = std::max(std::abs(report.estimate), 1e-300);
    report.relative_drift =
        std::abs(report.estimate_doubled - report.estimate) / denom;
    return report;
}

}  // namespace exptwist
