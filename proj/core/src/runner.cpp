#include "exptwist/runner.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "exptwist/checks.hpp"
#include "exptwist/control.hpp"
#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"
#include "exptwist/girsanov.hpp"
#include "exptwist/meanfield.hpp"
#include "exptwist/oracles.hpp"
#include "exptwist/stats.hpp"
#include "exptwist/twist.hpp"

namespace exptwist {

namespace fs = std::filesystem;

bool ExperimentResult::all_pass() const {
    for (const auto& row : rows)
        if (!row.pass) return false;
    return true;
}

std::string file_sha256(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("file_sha256: cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("file_sha256: EVP context allocation failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        if (f.gcount() > 0)
            EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    hex << std::hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex.width(2);
        hex.fill('0');
        hex << static_cast<int>(digest[i]);
    }
    return hex.str();
}

namespace {

std::string hash_string(const std::string& text) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, text.data(), text.size());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    hex << std::hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex.width(2);
        hex.fill('0');
        hex << static_cast<int>(digest[i]);
    }
    return hex.str();
}

class Experiment {
public:
    explicit Experiment(const RunConfig& config)
        : config_(config),
          model_(config.build_model()),
          cost_(config.build_cost()),
          grid_(config.grid()),
          dir_(config.output_dir) {}

    ExperimentResult run() {
        fs::create_directories(dir_);
        try {
            switch (config_.pipeline) {
                case Pipeline::Value: pipeline_value(); break;
                case Pipeline::Twist: pipeline_twist(); break;
                case Pipeline::Reweight: pipeline_reweight(); break;
                case Pipeline::Control: pipeline_control(); break;
                case Pipeline::Checks: pipeline_checks(); break;
                case Pipeline::MeanField: pipeline_meanfield(); break;
            }
        } catch (const std::exception& e) {
            SummaryRow row;
            row.check = "runtime_error";
            row.pass = false;
            row.note = e.what();
            result_.rows.push_back(row);
            result_.exit_code = kExitRuntimeError;
        }
        finalize();
        if (result_.exit_code == kExitPass && !result_.all_pass())
            result_.exit_code = kExitCheckFailure;
        return std::move(result_);
    }

private:
    RunConfig config_;
    ModelSpec model_;
    CostSpec cost_;
    TimeGrid grid_;
    fs::path dir_;
    ExperimentResult result_;

    void check(const std::string& name, double value, double target,
               double tolerance, const std::string& note = "") {
        SummaryRow row{name, value, target, tolerance,
                       std::abs(value - target) <= tolerance, note};
        result_.rows.push_back(row);
    }
    void check_flag(const std::string& name, bool pass, const std::string& note = "") {
        SummaryRow row{name, pass ? 1.0 : 0.0, 1.0, 0.5, pass, note};
        result_.rows.push_back(row);
    }
    void metric(const std::string& name, double value, const std::string& note = "") {
        SummaryRow row{name, value, value, 0.0, true, note};
        result_.rows.push_back(row);
    }

    void record(const fs::path& name) { result_.outputs.push_back(dir_ / name); }

    Vec start_point() const {
        if (const auto* point = std::get_if<PointMass>(&model_.initial_law))
            return point->x0;
        return Vec::Zero(model_.dim);
    }

    SpaceBox surface_box() const {
        SpaceBox box = default_box(model_, grid_, start_point());
        if (config_.surface.box_halfwidth > 0.0) {
            box.lo = start_point().array() - config_.surface.box_halfwidth;
            box.hi = start_point().array() + config_.surface.box_halfwidth;
        }
        box.nodes_per_axis.assign(static_cast<std::size_t>(model_.dim),
                                  config_.surface.nodes_per_axis);
        return box;
    }

    ValueSource make_value_source() {
        if (auto analytic = oracles::resolve_hint(cost_.analytic_hint))
            return *analytic;
        return build_value_surface(model_, cost_, grid_, surface_box(),
                                   config_.surface.time_nodes, config_.surface.n_sub,
                                   config_.seed.substream(0x5f));
    }

    WeightedEnsemble reference_ensemble(const PathFunctionals& data) {
        if (data.costs.empty())
            throw EstimationFailure("no usable reference paths");
        return normalize_weights(data.costs);
    }

    void ensemble_invariant_rows(const WeightedEnsemble& ensemble,
                                 const EntropyReport& report) {
        check("variational_gap", report.gap, 0.0, 1e-10);
        check_flag("entropy_nonnegative", report.entropy >= -1e-12);
        const double n = static_cast<double>(ensemble.size());
        check_flag("ess_bounds", report.ess >= 1.0 - 1e-9 && report.ess <= n + 1e-9);
    }

    void write_report_csv(const EntropyReport& report, const fs::path& name) {
        write_report({report}, dir_ / name);
        record(name);
    }

    // --- pipelines ----------------------------------------------------------

    void pipeline_reweight() {
        const auto data = collect_path_functionals(model_, cost_, grid_,
                                                   config_.n_paths, config_.seed);
        const auto ensemble = reference_ensemble(data);
        const auto report = variational_report(ensemble);
        write_report_csv(report, "report.csv");
        metric("minus_log_Z", report.minus_log_z);
        metric("ess", report.ess);
        metric("dropped_paths", static_cast<double>(data.dropped));
        ensemble_invariant_rows(ensemble, report);
        if (auto analytic = oracles::resolve_hint(cost_.analytic_hint);
            analytic && std::holds_alternative<PointMass>(model_.initial_law)) {
            const double target = -std::log(analytic->value(0.0, start_point()));
            check("minus_log_Z_vs_oracle", report.minus_log_z, target,
                  3.0 * report.minus_log_z_se);
        }
    }

    void pipeline_value() {
        const auto surface = build_value_surface(
            model_, cost_, grid_, surface_box(), config_.surface.time_nodes,
            config_.surface.n_sub, config_.seed.substream(0x5f));
        surface.dump_csv(dir_ / "surface.csv");
        record("surface.csv");
        metric("excursion_fraction", surface.excursion_fraction);

        bool in_range = true;
        double terminal_err = 0.0;
        const std::size_t last = surface.time_nodes().size() - 1;
        for (Eigen::Index s = 0; s < surface.box().n_space_nodes(); ++s) {
            for (std::size_t ti = 0; ti <= last; ++ti) {
                const double v = surface.node_value(ti, s);
                if (v < surface.eps_v() || v > 1.0) in_range = false;
            }
            const double expected =
                std::max(surface.eps_v(), std::exp(-cost_.g(surface.space_node(s))));
            terminal_err = std::max(
                terminal_err, std::abs(surface.node_value(last, s) - expected));
        }
        check_flag("value_range", in_range);
        check("terminal_exactness", terminal_err, 0.0, 0.0);
    }

    void pipeline_twist() {
        TwistedModel twisted{model_, make_value_source()};

        // moments under direct twisted simulation
        const std::size_t n = config_.n_paths;
        std::vector<double> xt(n, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> jumps(n, 0.0);
        for_each_twisted_path(twisted, grid_, n, config_.seed.substream(0x7e),
                              [&](std::size_t i, const Path& p) {
                                  if (p.diverged) return;
                                  xt[i] = p.terminal()(0);
                                  jumps[i] = static_cast<double>(p.jump_marks.size());
                              });
        std::vector<double> xt_clean, xt2_clean;
        for (double v : xt)
            if (!std::isnan(v)) {
                xt_clean.push_back(v);
                xt2_clean.push_back(v * v);
            }
        if (xt_clean.empty()) throw EstimationFailure("all twisted paths diverged");
        const double tw_mean = mean(xt_clean), tw_mean_se = std_error(xt_clean);
        const double tw_m2 = mean(xt2_clean), tw_m2_se = std_error(xt2_clean);
        metric("twisted_mean_xt", tw_mean);
        metric("twisted_second_moment_xt", tw_m2);
        if (model_.has_jumps()) metric("twisted_mean_jump_count", mean(jumps));

        // agreement with reference reweighting
        const auto data = collect_path_functionals(model_, cost_, grid_,
                                                   config_.n_paths, config_.seed);
        const auto ensemble = reference_ensemble(data);
        const auto report = variational_report(ensemble);
        write_report_csv(report, "report.csv");
        metric("minus_log_Z", report.minus_log_z);
        ensemble_invariant_rows(ensemble, report);

        std::vector<double> h1(data.costs.size()), h2(data.costs.size());
        for (std::size_t i = 0; i < data.costs.size(); ++i) {
            const double v = data.terminals(0, static_cast<Eigen::Index>(i));
            h1[i] = v;
            h2[i] = v * v;
        }
        const auto rw_mean = weighted_expectation(ensemble, h1);
        const auto rw_m2 = weighted_expectation(ensemble, h2);
        check("twist_vs_reweight_mean", tw_mean, rw_mean.value,
              3.0 * std::hypot(tw_mean_se, rw_mean.stderr));
        check("twist_vs_reweight_second_moment", tw_m2, rw_m2.value,
              3.0 * std::hypot(tw_m2_se, rw_m2.stderr));

        // drift field over a coarse probe grid
        {
            std::vector<double> times{0.0, 0.5 * grid_.horizon(),
                                      0.9 * grid_.horizon()};
            std::vector<Vec> points;
            for (int i = -2; i <= 2; ++i)
                points.push_back(Vec::Constant(model_.dim, static_cast<double>(i)));
            dump_drift_field_csv(twisted, times, points, dir_ / "drift_field.csv");
            record("drift_field.csv");
        }

        if (cost_.is_null()) null_twist_rows(twisted);
    }

    void null_twist_rows(const TwistedModel& twisted) {
        // byte-identity of a twisted run against the reference sampler
        const std::size_t n = std::min<std::size_t>(config_.n_paths, 64);
        const auto ref = sample_paths(model_, grid_, n, config_.seed);
        const auto tw = simulate_twisted(twisted, grid_, n, config_.seed);
        bool identical = ref.paths.size() == tw.paths.size();
        for (std::size_t i = 0; identical && i < n; ++i) {
            const auto& a = ref.paths[i].states;
            const auto& b = tw.paths[i].states;
            identical = a.rows() == b.rows() && a.cols() == b.cols() &&
                        std::memcmp(a.data(), b.data(),
                                    sizeof(double) *
                                        static_cast<std::size_t>(a.size())) == 0;
        }
        check_flag("null_twist_byte_identical", identical);

        const Vec x = start_point();
        check("null_twist_gamma", generalized_gradient(twisted, 0.0, x).norm(), 0.0,
              0.0);
    }

    void pipeline_control() {
        if (model_.has_jumps())
            throw UnsupportedModelError(
                "control pipeline requires a pure diffusion model");
        TwistedModel twisted{model_, make_value_source()};
        const std::vector<ControlPolicy> policies{optimal_control_policy(twisted),
                                                  zero_policy(model_.dim)};

        const auto data = collect_path_functionals(
            model_, cost_, grid_, config_.n_paths, config_.seed.substream(0x11));
        const auto report = variational_report(reference_ensemble(data));

        const auto ranking =
            compare_controls(model_, cost_, policies, grid_, config_.n_paths,
                             config_.seed, report.minus_log_z);
        ranking.write_csv(dir_ / "ranking.csv");
        record("ranking.csv");

        double j_opt = 0.0, se_opt = 0.0;
        for (const auto& row : ranking.rows) {
            metric("J_" + row.name, row.j);
            check_flag("lower_bound_" + row.name,
                       row.j + 3.0 * row.stderr >= report.minus_log_z -
                           3.0 * report.minus_log_z_se,
                       "J(u) + 3SE >= -log Z");
            check_flag("no_red_flag_" + row.name, !row.red_flag);
            if (row.name == "optimal") {
                j_opt = row.j;
                se_opt = row.stderr;
            }
        }
        check("optimal_value_match", j_opt, report.minus_log_z,
              3.0 * std::hypot(se_opt, report.minus_log_z_se));
    }

    void pipeline_checks() {
        // plug-in identities on a reference ensemble
        const auto data = collect_path_functionals(model_, cost_, grid_,
                                                   config_.n_paths, config_.seed);
        const auto ensemble = reference_ensemble(data);
        const auto report = variational_report(ensemble);
        write_report_csv(report, "report.csv");
        ensemble_invariant_rows(ensemble, report);

        TwistedModel twisted{model_, make_value_source()};

        // martingale residual, optionally with the uncorrected drift injected
        {
            MartingaleOptions opt;
            if (config_.checks.inject_uncorrected_drift)
                opt.simulation_drift_override = model_.drift;
            const std::size_t n = config_.checks.n_paths > 0 ? config_.checks.n_paths
                                                             : config_.n_paths;
            const auto residual = martingale_residual(
                twisted, TestFunction::coordinate(model_.dim, 0), grid_, n,
                config_.seed.substream(0x31), config_.checks.n_bins, opt);
            residual.write_csv(dir_ / "martingale_residual.csv");
            record("martingale_residual.csv");
            metric("martingale_max_z", residual.max_z);
            check_flag("martingale_residual", residual.pass,
                       config_.checks.inject_uncorrected_drift
                           ? "uncorrected drift injected"
                           : "");
        }

        // carre du champ against the closed form at probe points
        {
            const auto phi = TestFunction::coordinate(model_.dim, 0);
            double worst = 0.0;
            for (double t : {0.0, 0.5 * grid_.horizon()}) {
                for (double s : {-1.0, 0.0, 1.5}) {
                    const Vec x = Vec::Constant(model_.dim, s);
                    const double gamma = carre_du_champ(model_, phi, phi, t, x);
                    const Mat sig = model_.diffusion(t, x);
                    double expected = (sig * sig.transpose())(0, 0);
                    if (model_.has_jumps())
                        expected += model_.jump->intensity(t, x) *
                                    jump_size_expectation(
                                        *model_.jump, t, x,
                                        [](const Vec& q) { return q(0) * q(0); });
                    worst = std::max(worst, std::abs(gamma - expected));
                }
            }
            check("carre_du_champ_closed_form", worst, 0.0, 1e-6);
        }

        // PDE residual of the value source
        {
            PdeOptions opt;
            opt.sim_dt = grid_.dt();
            const ValueSource source = make_value_source();
            std::vector<std::pair<double, Vec>> probes;
            if (std::holds_alternative<AnalyticValue>(source)) {
                opt.abs_tol = 1e-6;
                for (double t : {0.1, 0.5, 0.9}) {
                    for (double s : {-1.0, 0.0, 1.0, 2.0}) {
                        probes.emplace_back(t * grid_.horizon(),
                                            Vec::Constant(model_.dim, s));
                    }
                }
            }
            const auto nodes = pde_residual(source, model_, cost_, probes, opt);
            nodes.write_csv(dir_ / "pde_residual.csv");
            record("pde_residual.csv");
            metric("pde_max_abs_residual", nodes.max_abs_residual);
            metric("pde_nodes_skipped", static_cast<double>(nodes.skipped));
            check_flag("pde_residual", nodes.pass);
        }

        if (cost_.is_null()) null_twist_rows(twisted);
    }

    void pipeline_meanfield() {
        MeanFieldProblem problem;
        const double coeff = config_.meanfield.coeff;
        if (config_.meanfield.f_family == "half_square") {
            problem.objective = [coeff](double m) { return 0.5 * coeff * m * m; };
            problem.derivative = [coeff](double m) { return coeff * m; };
        } else if (config_.meanfield.f_family == "linear") {
            problem.objective = [coeff](double m) { return coeff * m; };
            problem.derivative = [coeff](double) { return coeff; };
        } else {
            problem.objective = [](double) { return 0.0; };
            problem.derivative = [](double) { return 0.0; };
        }
        problem.damping = config_.meanfield.damping;
        problem.tol = config_.meanfield.tol;
        problem.max_iter = config_.meanfield.max_iter;

        const auto trace =
            fixed_point_solve(problem, model_, cost_, grid_, config_.n_paths,
                              config_.seed);
        trace.write_csv(dir_ / "trace.csv");
        record("trace.csv");
        metric("c_star", trace.c_star);
        metric("m_star", trace.m_star);
        metric("iterations", static_cast<double>(trace.iterates.size()));
        check_flag("meanfield_converged", trace.converged,
                   trace.converged ? "" : "trace written; no answer implied");

        if (trace.converged) {
            check("fixed_point_residual", trace.c_star,
                  problem.derivative(trace.m_star),
                  problem.tol + 3.0 * trace.m_star_se *
                                    (config_.meanfield.f_family == "half_square"
                                         ? coeff
                                         : 0.0) + 1e-12);
            // linearized objective at c* equals -log Z(c*) identically
            const auto data = collect_path_functionals(
                model_, cost_, grid_, config_.n_paths, config_.seed);
            const auto lin = linearized_twist_from_costs(trace.c_star, data.costs);
            const auto lin_report = variational_report(lin.ensemble);
            check("meanfield_consistency_gap", lin_report.gap, 0.0, 1e-10);
        }
    }

    // --- summary and manifest -------------------------------------------------

    void finalize() {
        {
            csv::Writer writer({"check", "value", "target", "tolerance", "pass",
                                "note"});
            for (const auto& row : result_.rows) {
                writer.add_row({row.check, csv::format_double(row.value),
                                csv::format_double(row.target),
                                csv::format_double(row.tolerance),
                                row.pass ? "1" : "0", row.note});
            }
            writer.write_file(dir_ / "summary.csv");
            record("summary.csv");
        }

        const std::string echo = config_.echo();
        std::ostringstream manifest;
        manifest << "exptwist manifest\n";
        manifest << "seed " << config_.seed.master << ' ' << config_.seed.stream
                 << "\n";
        manifest << "config_hash sha256:" << hash_string(echo) << "\n";
        manifest << "[config]\n" << echo;
        manifest << "[outputs]\n";
        for (const auto& path : result_.outputs)
            manifest << file_sha256(path) << "  " << path.filename().string() << "\n";

        std::ofstream out(dir_ / "manifest.txt", std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write manifest: " +
                                     (dir_ / "manifest.txt").string());
        out << manifest.str();
        out.close();
        record("manifest.txt");
    }
};

}  // namespace

void write_report(const std::vector<EntropyReport>& reports,
                  const fs::path& path) {
    csv::Writer writer(
        {"n_paths", "Z_hat", "minus_log_Z", "mean_phi", "entropy", "gap", "ess"});
    for (const auto& report : reports) {
        writer.add_row(std::vector<double>{
            static_cast<double>(report.n_paths), report.z_hat, report.minus_log_z,
            report.mean_phi_qstar, report.entropy, report.gap, report.ess});
    }
    writer.write_file(path);
}

ExperimentResult run_experiment(const RunConfig& config) {
    Experiment experiment(config);
    return experiment.run();
}

ExperimentResult run_checks(RunConfig config) {
    config.pipeline = Pipeline::Checks;
    return run_experiment(config);
}

}  // namespace exptwist
