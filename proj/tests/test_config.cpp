#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "exptwist/config.hpp"
#include "exptwist/csv.hpp"
#include "exptwist/errors.hpp"
#include "exptwist/girsanov.hpp"
#include "exptwist/runner.hpp"

using namespace exptwist;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"(
[model]
family = bm

[cost]
family = quadratic
gamma = 0.5

[grid]
horizon = 1.0
n_steps = 100

[run]
n_paths = 1000
seed = 7
)";

std::string with_output_dir(const std::string& base, const fs::path& dir,
                            const std::string& extra = "") {
    return base + "\n[run]\noutput_dir = " + dir.string() + "\n" + extra;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

std::map<std::string, std::string> hash_outputs(const ExperimentResult& result) {
    std::map<std::string, std::string> hashes;
    for (const auto& path : result.outputs)
        hashes[path.filename().string()] = file_sha256(path);
    return hashes;
}

}  // namespace

TEST_SUITE("cli_runner") {

TEST_CASE("minimal config parses with defaults applied") {
    const auto config = parse_config(kMinimalConfig);
    CHECK(config.model_family == "bm");
    CHECK(config.cost_family == "quadratic");
    CHECK(config.n_paths == 1000);
    CHECK(config.seed.master == 7);
    CHECK(config.pipeline == Pipeline::Reweight);
    CHECK(config.horizon == 1.0);
    // defaults are materialized in the echo
    CHECK(config.echo().find("pipeline = reweight") != std::string::npos);
    CHECK(config.echo().find("n_sub = 2000") != std::string::npos);
}

TEST_CASE("misspelled keys are rejected by name") {
    const std::string bad = R"(
[model]
family = bm
sigm = 1.0
[cost]
family = null
[grid]
horizon = 1.0
[run]
n_paths = 10
)";
    try {
        parse_config(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("sigm") != std::string::npos);
        CHECK(e.line_number == 4);
    }
}

TEST_CASE("invalid counts are rejected") {
    std::string bad = kMinimalConfig;
    bad.replace(bad.find("n_paths = 1000"), 14, "n_paths = -5  ");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("unknown sections, duplicate keys and bad numbers are rejected") {
    CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\nfamily = bm\nfamily = ou\n"), ConfigError);
    const std::string bad_number = R"(
[model]
family = bm
sigma = abc
[cost]
family = null
[grid]
horizon = 1
[run]
n_paths = 10
)";
    CHECK_THROWS_AS(parse_config(bad_number), ConfigError);
}

TEST_CASE("models violating the sign hypotheses fail validation") {
    std::string bad = kMinimalConfig;
    bad.replace(bad.find("gamma = 0.5"), 11, "gamma = -1 ");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("env var provides the default seed") {
    std::string text = kMinimalConfig;
    text.replace(text.find("seed = 7"), 8, "        ");
    setenv("EXPTWIST_SEED", "991", 1);
    CHECK(parse_config(text).seed.master == 991);
    unsetenv("EXPTWIST_SEED");
    CHECK(parse_config(text).seed.master == 12345);
}

TEST_CASE("null-twist experiment passes end to end") {
    const auto dir = fresh_dir("exptwist_null_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = null
[grid]
horizon = 1.0
n_steps = 50
[run]
pipeline = twist
n_paths = 500
seed = 11
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitPass);
    CHECK(fs::exists(dir / "summary.csv"));
    CHECK(fs::exists(dir / "manifest.txt"));
    fs::remove_all(dir);
}

TEST_CASE("quadratic benchmark summary reports minus_log_Z") {
    const auto dir = fresh_dir("exptwist_quad_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
gamma = 0.5
[grid]
horizon = 1.0
n_steps = 100
[run]
pipeline = reweight
n_paths = 20000
seed = 5
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitPass);
    bool found = false;
    for (const auto& row : result.rows) {
        if (row.check == "minus_log_Z")
            found = std::abs(row.value - 0.34657) < 0.02;
        if (row.check == "minus_log_Z_vs_oracle") CHECK(row.pass);
    }
    CHECK(found);
    fs::remove_all(dir);
}

TEST_CASE("wrong-drift injection makes the martingale check fail") {
    const auto dir = fresh_dir("exptwist_inject_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
gamma = 0.5
[grid]
horizon = 1.0
n_steps = 200
[run]
pipeline = checks
n_paths = 4000
seed = 3
[checks]
inject_uncorrected_drift = true
n_bins = 6
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitCheckFailure);
    bool failed_martingale = false;
    for (const auto& row : result.rows)
        if (row.check == "martingale_residual") failed_martingale = !row.pass;
    CHECK(failed_martingale);
    fs::remove_all(dir);
}

TEST_CASE("reruns with the same config are byte-identical") {
    const auto dir = fresh_dir("exptwist_repro_run");
    const std::string text = with_output_dir(R"(
[model]
family = poisson_unit
lambda = 2.0
[cost]
family = linear
[grid]
horizon = 1.0
n_steps = 50
[run]
pipeline = twist
n_paths = 2000
seed = 21
)", dir);
    const auto config = parse_config(text);
    const auto first = hash_outputs(run_experiment(config));
    const auto second = hash_outputs(run_experiment(config));
    CHECK(first == second);
    CHECK(first.count("manifest.txt") == 1);
    fs::remove_all(dir);
}

TEST_CASE("manifest lists every output with its hash") {
    const auto dir = fresh_dir("exptwist_manifest_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
[grid]
horizon = 1.0
n_steps = 20
[run]
pipeline = reweight
n_paths = 200
seed = 2
)", dir);
    const auto result = run_experiment(parse_config(text));
    std::ifstream manifest(dir / "manifest.txt");
    std::string content((std::istreambuf_iterator<char>(manifest)),
                        std::istreambuf_iterator<char>());
    for (const auto& path : result.outputs) {
        if (path.filename() == "manifest.txt") continue;
        CHECK(content.find(path.filename().string()) != std::string::npos);
        CHECK(content.find(file_sha256(path)) != std::string::npos);
    }
    CHECK(content.find("config_hash sha256:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("report CSV round trips the in-memory report bit-exactly") {
    const auto dir = fresh_dir("exptwist_report_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
[grid]
horizon = 1.0
n_steps = 20
[run]
pipeline = reweight
n_paths = 500
seed = 9
)", dir);
    const auto config = parse_config(text);
    run_experiment(config);

    const auto data = collect_path_functionals(
        config.build_model(), config.build_cost(), config.grid(), config.n_paths,
        config.seed);
    const auto report = variational_report(normalize_weights(data.costs));

    const auto table = csv::read_file(dir / "report.csv");
    REQUIRE(table.rows.size() == 1);
    CHECK(table.number(0, table.column_index("minus_log_Z")) == report.minus_log_z);
    CHECK(table.number(0, table.column_index("entropy")) == report.entropy);
    CHECK(table.number(0, table.column_index("ess")) == report.ess);
    fs::remove_all(dir);
}

TEST_CASE("header-only CSV for empty result sets") {
    csv::Writer writer({"a", "b"});
    CHECK(writer.str() == "a,b\n");
    const auto file = fs::temp_directory_path() / "exptwist_empty_report.csv";
    write_report({}, file);
    const auto table = csv::read_file(file);
    CHECK(table.columns.size() == 7);
    CHECK(table.rows.empty());
    fs::remove(file);
}

TEST_CASE("value pipeline writes a surface and its diagnostics") {
    const auto dir = fresh_dir("exptwist_value_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
[grid]
horizon = 1.0
n_steps = 20
[run]
pipeline = value
n_paths = 100
seed = 13
[surface]
time_nodes = 4
nodes_per_axis = 9
n_sub = 64
box_halfwidth = 4.0
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitPass);
    CHECK(fs::exists(dir / "surface.csv"));
    fs::remove_all(dir);
}

TEST_CASE("control pipeline ranks the optimal policy first") {
    const auto dir = fresh_dir("exptwist_control_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
[grid]
horizon = 1.0
n_steps = 100
[run]
pipeline = control
n_paths = 8000
seed = 17
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitPass);
    const auto table = csv::read_file(dir / "ranking.csv");
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "optimal");
    fs::remove_all(dir);
}

TEST_CASE("control pipeline rejects jump models") {
    const auto dir = fresh_dir("exptwist_control_jump_run");
    const std::string text = with_output_dir(R"(
[model]
family = poisson_unit
lambda = 2.0
[cost]
family = linear
[grid]
horizon = 1.0
n_steps = 20
[run]
pipeline = control
n_paths = 100
seed = 17
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitRuntimeError);
    fs::remove_all(dir);
}

TEST_CASE("meanfield pipeline converges on the benchmark") {
    const auto dir = fresh_dir("exptwist_mf_run");
    const std::string text = with_output_dir(R"(
[model]
family = bm
[cost]
family = quadratic
[grid]
horizon = 1.0
n_steps = 50
[run]
pipeline = meanfield
n_paths = 10000
seed = 19
[meanfield]
f = half_square
coeff = 1.0
)", dir);
    const auto result = run_experiment(parse_config(text));
    CHECK(result.exit_code == kExitPass);
    const auto table = csv::read_file(dir / "trace.csv");
    CHECK(table.columns ==
          std::vector<std::string>{"iter", "c", "m", "objective", "entropy"});
    CHECK(table.rows.size() >= 1);
    fs::remove_all(dir);
}

}  // TEST_SUITE
