#pragma once

#include "jumplab/config.hpp"
#include "jumplab/csv.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jumplab {

/// One acceptance criterion outcome. `detail` carries the numbers behind it.
struct Verdict {
    std::string id;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunReport {
    std::vector<Verdict> verdicts;
    std::vector<CsvTable> tables;

    bool all_passed() const;
    void append(RunReport other);
    /// Verdict table written as summary.csv.
    CsvTable summary() const;
};

/// Subcommands accepted by `run_subcommand`.
const std::vector<std::string>& subcommand_names();

struct RunOptions {
    /// Progress and timing lines; nullptr for silence. Timings never go to CSV.
    std::ostream* log = nullptr;
};

/// Runs one subcommand: simulate, ibp-check, gradient, girsanov-check,
/// converge, bounds, all or sweep.
RunReport run_subcommand(const ExperimentConfig& cfg, std::string_view subcommand, const RunOptions& opts = {});

/// Writes every table plus summary.csv into `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

/// CLI value, else $JUMPLAB_OUT, else "results".
std::filesystem::path resolve_out_dir(const std::optional<std::string>& cli);

RunReport run_ibp(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunReport run_gradient(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunReport run_girsanov(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunReport run_converge(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunReport run_bounds(const ExperimentConfig& cfg, const RunOptions& opts = {});
RunReport run_simulate(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Key estimates at each truncation dimension; flags quantities that move by
/// more than 5 sigma between the two largest dimensions.
RunReport truncation_sweep(const ExperimentConfig& cfg, const std::vector<int>& dims, const RunOptions& opts = {});

}  // namespace jumplab
