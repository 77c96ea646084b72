#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracfourier::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes of the runner.
enum ExitCode : int {
    kExitOk = 0,
    kExitError = 1,     // module error other than a contract violation
    kExitSchema = 2,    // configuration or usage error
    kExitContract = 3,  // at least one checked contract failed
};

std::vector<std::string> experiment_names();

struct RunOptions {
    std::string experiment;
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

// Runs one experiment, writes report.json, series_*.csv and plot_*.dat, returns the exit code.
int run(const RunOptions& opts);

// Writes plot_*.dat next to (or into out_dir for) the series named in a report.
int plotdata(const std::string& report_path, const std::optional<std::string>& out_dir);

// Full command line entry point.
int main(int argc, char** argv);

}  // namespace fracfourier::cli
