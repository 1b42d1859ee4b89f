#pragma once

#include <filesystem>

#include "exptwist/config.hpp"
#include "exptwist/girsanov.hpp"

namespace exptwist {

// Exit codes shared with the CLI.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct SummaryRow {
    std::string check;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::string note;
};

struct ExperimentResult {
    int exit_code = kExitPass;
    std::vector<SummaryRow> rows;
    std::vector<std::filesystem::path> outputs;  // files written, manifest last

    bool all_pass() const;
};

// Runs the configured pipeline, writes per-module CSVs plus summary.csv and
// manifest.txt (config echo, seed, content hash of every output) into the
// output directory. Exit code 0 iff every enabled check passed.
ExperimentResult run_experiment(const RunConfig& config);

// Convenience entry point used by `exptwist check`: forces the checks
// pipeline regardless of the configured one.
ExperimentResult run_checks(RunConfig config);

// Entropy reports in the fixed column order
// n_paths,Z_hat,minus_log_Z,mean_phi,entropy,gap,ess; header-only when empty.
// All numbers carry 17 significant digits so a reload is bit-exact.
void write_report(const std::vector<EntropyReport>& reports,
                  const std::filesystem::path& path);

// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace exptwist
