#pragma once

// Fit diagnostics: in-sample AUC, edge densities by pair class, mean latent
// distances by pair class, and posterior summaries of the parameters.

#include "clsna/mcmc.hpp"
#include "clsna/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clsna {

/// Rank-statistic AUC with midranks for tied scores. Absent when either class
/// is empty.
std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& outcomes);

struct AucReport {
    std::vector<std::optional<double>> per_time;
    std::optional<double> overall;
};

/// Plug-in AUC: predicted probabilities from `params` and `latent` at every
/// unordered pair and time. `initial_lag` precedes the first slice, if any.
AucReport in_sample_auc(const Params& params, const LatentTrajectory<double>& latent, const AdjacencySeries& y,
                        const Adjacency* initial_lag = nullptr);

/// Uses the posterior mean parameters and the posterior mean aligned trajectory.
AucReport in_sample_auc(const PosteriorSamples& samples, const AdjacencySeries& y);

struct DensityReport {
    std::vector<double> within1;
    std::vector<double> within2;
    std::vector<double> between;
    std::vector<double> overall;
};

DensityReport density_report(const AdjacencySeries& y, const GroupLabels& labels);

struct LatentDistanceReport {
    std::vector<std::optional<double>> within1;
    std::vector<std::optional<double>> within2;
    std::vector<double> between;
};

LatentDistanceReport latent_distance_report(const LatentTrajectory<double>& latent, const GroupLabels& labels);

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    double prob_positive = 0.0;
};

struct ContrastSummary {
    std::string name;
    double mean = 0.0;
    double se = 0.0;  // posterior standard deviation of the draw-wise contrast
    double prob_positive = 0.0;
};

struct PosteriorSummary {
    std::vector<ParameterSummary> parameters;
    std::vector<ContrastSummary> contrasts;
    std::size_t draws = 0;
    static constexpr const char* quantile_method = "linear interpolation of order statistics (type 7)";

    const ParameterSummary& parameter(const std::string& name) const;
    const ContrastSummary& contrast(const std::string& name) const;
};

/// Type-7 sample quantile: interpolates between order statistics at (n-1)q.
double quantile(std::vector<double> values, double q);

ParameterSummary summarize(const std::string& name, const std::vector<double>& draws);

/// alpha, delta, gamma1w, gamma2w, gammab, tau2, tau and the contrasts
/// gamma1w-gamma2w, |gammab|-|gamma2w|, |gammab|-|gamma1w|.
PosteriorSummary posterior_summary(const PosteriorSamples& samples);

// Comma-separated writers with a single header row.
void write_csv(std::ostream& out, const PosteriorSummary& summary);
void write_csv(std::ostream& out, const AucReport& report);
void write_csv(std::ostream& out, const DensityReport& report);
void write_csv(std::ostream& out, const LatentDistanceReport& report);

}  // namespace clsna
