#pragma once

// Change-point fits and DIC model selection.
//
// A change-point model with change times r_1 < ... < r_k fits the periods
// [1, r_1 - 1], [r_1, r_2 - 1], ..., [r_k, T] left to right. Each later period
// conditions its first transition on the previous period's posterior mean
// terminal positions and uses the previous period's last adjacency as the
// persistence lag of its first slice. tau2 is estimated in the first period
// only.

#include "clsna/evaluation.hpp"
#include "clsna/mcmc.hpp"

#include <iosfwd>
#include <vector>

namespace clsna {

struct DicResult {
    double dic = 0.0;
    double mean_deviance = 0.0;
    double effective_parameters = 0.0;  // p_D
    double deviance_at_mean = 0.0;
};

/// Deviance D = -2 * observation log-likelihood given the latent positions.
/// DIC = mean(D) + p_D with p_D = mean(D) - D(posterior mean Z, posterior mean theta).
DicResult compute_dic(const PosteriorSamples& samples, const AdjacencySeries& y, const GroupLabels& labels);

struct PeriodFit {
    std::size_t first_time = 1;  // 1-based, inclusive
    std::size_t last_time = 1;
    PosteriorSamples samples;
    DicResult dic;
    AucReport auc;
};

struct ChangePointFit {
    std::vector<std::size_t> change_times;
    std::vector<PeriodFit> periods;
    /// Sum of the period DICs.
    double dic = 0.0;
};

/// Throws InvalidInput unless the times are strictly increasing and every
/// period spans at least two time steps.
void validate_change_times(const std::vector<std::size_t>& change_times, std::size_t horizon);

/// The first period uses config.seed, later periods derived seeds.
ChangePointFit fit_changepoint(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors,
                               const McmcConfig& config, const std::vector<std::size_t>& change_times);

struct DicRow {
    std::vector<std::size_t> change_times;
    double dic = 0.0;
};

struct ChangePointSelection {
    std::vector<DicRow> table;  // in candidate order
    std::size_t best_index = 0;
    ChangePointFit best;
};

/// Index of the lowest DIC; exact ties go to fewer change points, then to the
/// earlier change times.
std::size_t argmin_dic(const std::vector<DicRow>& table);

/// Fits every candidate (up to `jobs` concurrently) and keeps the lowest-DIC fit.
ChangePointSelection select_changepoint(const AdjacencySeries& y, const GroupLabels& labels,
                                        const PriorSpec& priors, const McmcConfig& config,
                                        const std::vector<std::vector<std::size_t>>& candidates,
                                        unsigned jobs = 1);

void write_csv(std::ostream& out, const std::vector<DicRow>& table);

}  // namespace clsna
