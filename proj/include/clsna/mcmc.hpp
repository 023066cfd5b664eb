#pragma once

// Adaptive Metropolis-Hastings within Gibbs for the two-group model.
//
// One sweep updates every latent position Z_{t,i} (t outer, i inner) by
// random-walk MH, then alpha and delta by random-walk MH, then draws tau2,
// gamma1w, gamma2w and gammab from their closed-form conditionals. sigma2 is
// pinned at one and never sampled. Proposal standard deviations are exp(s)
// with s adapted by s += k^-0.8 (min(1, R) - 0.234) during burn-in.

#include "clsna/types.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace clsna {

struct NormalPrior {
    double mean = 0.0;
    double variance = 100.0;
};

struct InverseGammaPrior {
    double shape = 2.05;
    double scale = 1.0;
};

struct PriorSpec {
    NormalPrior alpha{0.0, 100.0};
    NormalPrior delta{0.0, 100.0};
    NormalPrior gamma_w{0.5, 100.0};  // shared by gamma1w and gamma2w
    NormalPrior gamma_b{-0.5, 100.0};
    /// Unset: IG(2.05, 1.05 * sum_i ||Z_1i||^2 / (N p)) from the initial positions.
    std::optional<InverseGammaPrior> tau2;

    void validate() const;
};

/// How the edge likelihood enters the sampler's target. `ordered` takes the
/// product over i != j, so every unordered pair contributes twice.
enum class PairCounting { ordered, unordered };

struct McmcConfig {
    std::size_t n_iterations = 50000;
    std::size_t burn_in = 15000;
    std::size_t thin = 1;
    std::uint64_t seed = 1;
    int dimension = 2;
    double tuning_init_edge = 2.0;
    double tuning_init_latent = 4.0;
    double adapt_target = 0.234;
    double adapt_decay_exponent = 0.8;
    /// Keep every retained aligned trajectory (memory N*T*p doubles per draw).
    bool store_latent_draws = true;
    PairCounting pair_counting = PairCounting::ordered;

    void validate() const;
    std::size_t retained_count() const;
};

/// Fixed positions and adjacency preceding the first fitted slice. Used for
/// the later periods of change-point fits: the first slice then has an
/// incoming transition and a persistence term, and tau2 is not sampled.
struct PeriodAnchor {
    LatentPositions<double> positions;
    Adjacency adjacency;
};

struct ChainState {
    Params params;
    LatentTrajectory<double> latent;
};

struct TuningState {
    double alpha = 2.0;
    double delta = 2.0;
    Eigen::MatrixXd latent;  // T x N log proposal scales
};

struct AcceptanceLedger {
    std::size_t proposals = 0;  // iterations counted (after burn-in)
    std::size_t alpha_accepted = 0;
    std::size_t delta_accepted = 0;
    Eigen::MatrixXd latent_accepted;  // T x N counts

    double alpha_rate() const;
    double delta_rate() const;
    Eigen::MatrixXd latent_rates() const;
    double mean_latent_rate() const;
};

/// Everything needed to continue a chain bit-identically.
struct Checkpoint {
    std::size_t iteration = 0;
    ChainState state;
    TuningState tuning;
    std::string rng_state;
    PriorSpec priors;  // with tau2 resolved
    LatentPositions<double> reference;  // centred stacked initial positions
};

struct PosteriorSamples {
    std::vector<Params> params;
    std::vector<std::size_t> iterations;
    /// Aligned trajectories per retained draw (empty unless stored).
    std::vector<LatentTrajectory<double>> latent_draws;
    /// Posterior mean of the aligned trajectory.
    LatentTrajectory<double> latent_mean;
    /// -2 * observation log-likelihood (unordered pairs) per retained draw.
    std::vector<double> deviance;
    AcceptanceLedger acceptance;
    TuningState final_tuning;
    Checkpoint checkpoint;
    /// False for anchored fits, whose orientation is fixed by the anchor.
    bool aligned = true;
    std::optional<PeriodAnchor> anchor;

    std::size_t size() const noexcept { return params.size(); }
    Params posterior_mean() const;
};

/// Robbins-Monro style tuning step: s + k^-decay * (min(1, R) - target).
double adapt_tuning(double s, std::size_t k, double ratio, double target = 0.234, double decay = 0.8);

/// Term counts of a conditional target, for inspection.
struct TargetTerms {
    std::size_t edge_terms = 0;
    std::size_t forward_transitions = 0;
    std::size_t incoming_transitions = 0;
    std::size_t initial_prior_terms = 0;
};

/// Closed-form Normal conditional of a gamma parameter.
struct NormalMoments {
    double mean = 0.0;
    double sd = 0.0;
};

struct SamplerOptions {
    std::optional<PeriodAnchor> anchor;
    /// Overrides the GMDS/default initialisation.
    std::optional<ChainState> initial_state;
};

/// Chain state plus the caches that make single-site updates O(N + degree).
class Sampler {
public:
    Sampler(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors, const McmcConfig& config,
            SamplerOptions options = {});

    /// Rebuild from a checkpoint of a chain on the same data and config.
    Sampler(const AdjacencySeries& y, const GroupLabels& labels, const McmcConfig& config, const Checkpoint& checkpoint,
            std::optional<PeriodAnchor> anchor = std::nullopt);

    /// One full sweep as iteration k (1-based). Adapts tuning when `adapt`.
    void sweep(std::size_t k, bool adapt);

    // Individual steps. Each MH step returns min(1, R) and applies the
    // tuning update when k > 0.
    double update_latent(std::size_t t, std::size_t i, std::size_t k = 0);
    double update_alpha(std::size_t k = 0);
    double update_delta(std::size_t k = 0);
    double draw_tau2();
    double draw_gamma_within(int group);
    double draw_gamma_between();

    /// log R for moving Z_{t,i} to `proposal`, all else fixed.
    double latent_log_ratio(std::size_t t, std::size_t i, const Eigen::RowVectorXd& proposal) const;
    double alpha_log_ratio(double proposal) const;
    double delta_log_ratio(double proposal) const;
    TargetTerms latent_target_terms(std::size_t t, std::size_t i) const;
    TargetTerms alpha_target_terms() const;
    TargetTerms delta_target_terms() const;

    // Conditional moments; sigma2 is exposed for the rescaling identity only.
    NormalMoments gamma_within_conditional(int group, double sigma2 = 1.0) const;
    NormalMoments gamma_between_conditional(double sigma2 = 1.0) const;
    InverseGammaPrior tau2_conditional() const;

    const ChainState& state() const noexcept { return state_; }
    const TuningState& tuning() const noexcept { return tuning_; }
    const PriorSpec& priors() const noexcept { return priors_; }
    const LatentPositions<double>& reference() const noexcept { return reference_; }
    bool anchored() const noexcept { return anchor_.has_value(); }
    const std::optional<PeriodAnchor>& anchor() const noexcept { return anchor_; }

    /// Unordered-pair observation log-likelihood from the caches.
    double observation_loglik() const;

    /// Last acceptance decisions of the most recent sweep.
    bool last_alpha_accepted() const noexcept { return last_alpha_accepted_; }
    bool last_delta_accepted() const noexcept { return last_delta_accepted_; }
    const Eigen::MatrixXd& last_latent_accepted() const noexcept { return last_latent_accepted_; }

    Checkpoint checkpoint(std::size_t iteration) const;

    /// Throws NumericalError naming the first non-finite quantity.
    void check_finite(std::size_t iteration) const;

    /// Replace the chain's mutable parameters (tests). Rebuilds caches.
    void set_params(const Params& params);
    void set_latent(std::size_t t, std::size_t i, const Eigen::RowVectorXd& position);

private:
    void init_structure();
    void rebuild_caches();
    void refresh_neighbour_sums();
    void refresh_residuals();
    const Adjacency* lag(std::size_t t) const;
    bool has_incoming(std::size_t t) const { return t > 0 || anchor_.has_value(); }
    /// Mean of the transition into time t for node i.
    Eigen::RowVectorXd transition_mean_row(std::size_t t, std::size_t i) const;
    const Eigen::MatrixXd& previous_positions(std::size_t t) const;
    const Eigen::VectorXi& previous_count_within(std::size_t t) const;
    const Eigen::VectorXi& previous_count_between(std::size_t t) const;
    const Eigen::MatrixXd& previous_sum_within(std::size_t t) const;
    const Eigen::MatrixXd& previous_sum_between(std::size_t t) const;
    double latent_log_ratio_impl(std::size_t t, std::size_t i, const Eigen::RowVectorXd& proposal) const;
    double pair_weight() const { return config_.pair_counting == PairCounting::ordered ? 2.0 : 1.0; }
    double normal_draw();
    double uniform_draw();

    AdjacencySeries y_;
    GroupLabels labels_;
    PriorSpec priors_;
    McmcConfig config_;
    std::optional<PeriodAnchor> anchor_;

    std::size_t n_ = 0;
    std::size_t horizon_ = 0;
    int dim_ = 2;

    ChainState state_;
    TuningState tuning_;
    LatentPositions<double> reference_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};

    // Per time: neighbour lists and per-node counts of same/other group neighbours.
    std::vector<std::vector<std::vector<int>>> neighbours_;
    std::vector<Eigen::VectorXi> count_within_;
    std::vector<Eigen::VectorXi> count_between_;
    // Sums of neighbour positions at time t (used by the transition into t+1).
    std::vector<Eigen::MatrixXd> sum_within_;
    std::vector<Eigen::MatrixXd> sum_between_;
    // Anchor neighbour structure.
    Eigen::VectorXi anchor_count_within_, anchor_count_between_;
    Eigen::MatrixXd anchor_sum_within_, anchor_sum_between_;
    // residual_[t] = Z_t - transition mean into t (rows valid when has_incoming(t)).
    std::vector<Eigen::MatrixXd> residual_;
    // Symmetric per-pair log-likelihood caches.
    std::vector<Eigen::MatrixXd> pair_loglik_;
    std::vector<Eigen::MatrixXd> distance_;
    std::vector<Eigen::MatrixXd> scratch_loglik_;
    mutable Eigen::VectorXd scratch_row_;
    mutable Eigen::VectorXd scratch_distance_;
    mutable Eigen::RowVectorXd scratch_step_;
    Eigen::RowVectorXd scratch_proposal_;

    bool last_alpha_accepted_ = false;
    bool last_delta_accepted_ = false;
    Eigen::MatrixXd last_latent_accepted_;
};

struct RunOptions {
    std::optional<PeriodAnchor> anchor;
    std::optional<ChainState> initial_state;
    /// Continue from this checkpoint instead of starting fresh.
    std::optional<Checkpoint> resume;
};

/// Run the chain: n_iterations sweeps, adapting through burn-in, retaining
/// every `thin`-th draw afterwards. Retained latent draws are centred and
/// Procrustes-aligned to the centred initial configuration.
PosteriorSamples run_mcmc(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors,
                          const McmcConfig& config, const RunOptions& options = {});

/// Default initial parameters: alpha 0, delta 0, gamma^w 0.5, 0.5, gamma^b -0.5,
/// tau2 from the initial positions.
Params default_initial_params(const LatentPositions<double>& first_slice);

// Checkpoint persistence (JSON, doubles round-trip exactly).
void write_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace clsna
