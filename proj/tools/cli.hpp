#pragma once

// Command-line front end: simulate, fit, construct and replay. Every run
// writes manifest.json next to its outputs; `replay` re-executes a manifest
// into a fresh directory and compares the outputs byte for byte.

#include "clsna/mcmc.hpp"
#include "clsna/simulation.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace clsna::cli {

struct SimulateOptions {
    std::string preset;
    std::size_t nodes = 100;
    std::size_t horizon = 10;
    int dimension = 2;
    Params params;
    std::vector<ScheduleEntry> schedule;  // empty: params throughout
    std::uint64_t seed = 1;
    unsigned replicates = 1;
    unsigned jobs = 1;
    std::string out;
};

struct FitOptions {
    std::string input;
    std::size_t iterations = 50000;
    std::size_t burn_in = 15000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    int dimension = 2;
    PairCounting pair_counting = PairCounting::ordered;
    std::vector<std::size_t> changepoint;
    std::optional<std::pair<std::size_t, std::size_t>> select_range;
    std::string resume;
    unsigned replicates = 1;
    unsigned jobs = 1;
    std::string out;
};

struct ConstructOptions {
    std::string input;
    std::string policy = "dynamic-mean";
    double theta = 0.0;
    bool persistent = false;
    std::string out;
};

/// Named simulation designs. Throws InvalidInput for unknown names.
SimulateOptions preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses "a..b" into an inclusive range. Throws InvalidInput when empty or malformed.
std::pair<std::size_t, std::size_t> parse_range(const std::string& text);
std::vector<std::size_t> parse_times(const std::string& text);

void run_simulate(const SimulateOptions& options);
void run_fit(const FitOptions& options);
void run_construct(const ConstructOptions& options);

nlohmann::json to_json(const SimulateOptions& options);
nlohmann::json to_json(const FitOptions& options);
nlohmann::json to_json(const ConstructOptions& options);

struct ReplayResult {
    std::vector<std::string> identical;
    std::vector<std::string> differing;
    bool ok() const { return differing.empty(); }
};

/// Re-runs the manifest in `run_dir` into `replay_dir` and compares outputs.
ReplayResult replay(const std::string& run_dir, const std::string& replay_dir);

/// Entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace clsna::cli
