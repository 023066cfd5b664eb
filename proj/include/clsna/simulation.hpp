#pragma once

#include "clsna/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clsna {

/// Parameters in effect from `start_time` (1-based) until the next entry.
struct ScheduleEntry {
    std::size_t start_time = 1;
    Params params;
};

struct SimConfig {
    std::size_t node_count = 100;
    std::size_t horizon = 10;
    int dimension = 2;
    Params params;
    GroupLabels labels;
    std::uint64_t seed = 1;
    /// Empty means `params` throughout.
    std::vector<ScheduleEntry> schedule;
    /// A warning is recorded once any |coordinate| exceeds this bound.
    double divergence_bound = 1e6;

    void validate() const;
};

struct SimResult {
    AdjacencySeries networks;
    LatentTrajectory<double> latent;
    /// 1-based times at which the parameters change (schedule starts after the first).
    std::vector<std::size_t> change_times;
    std::vector<std::string> warnings;
};

/// Forward simulation: Z_1 ~ N(0, tau2 I), Y_1 from the first-slice link, then
/// for each later time Z_t from the attractor transition and Y_t from the
/// persistence link. Deterministic given the seed. A non-empty schedule is
/// honoured as in simulate_changepoint.
SimResult simulate(const SimConfig& config);

/// As simulate, swapping parameters at every scheduled start time. Requires a
/// non-empty schedule whose first entry starts at time 1.
SimResult simulate_changepoint(const SimConfig& config);

}  // namespace clsna
