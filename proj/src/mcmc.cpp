#include "clsna/mcmc.hpp"

#include "clsna/alignment.hpp"
#include "clsna/mds.hpp"
#include "clsna/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace clsna {

namespace {

double normal_logpdf_kernel(double x, const NormalPrior& prior) {
    const double d = x - prior.mean;
    return -0.5 * d * d / prior.variance;
}

double squared_norm_first_slice(const LatentPositions<double>& z) { return z.squaredNorm(); }

}  // namespace

void PriorSpec::validate() const {
    for (const NormalPrior* p : {&alpha, &delta, &gamma_w, &gamma_b}) {
        if (!(p->variance > 0.0)) throw InvalidInput("prior variances must be positive");
    }
    if (tau2 && (!(tau2->shape > 0.0) || !(tau2->scale > 0.0))) {
        throw InvalidInput("inverse-gamma prior shape and scale must be positive");
    }
}

void McmcConfig::validate() const {
    if (thin < 1) throw InvalidInput("thin must be at least 1");
    if (n_iterations > 0 && burn_in >= n_iterations) throw InvalidInput("burn_in must be below n_iterations");
    if (n_iterations == 0 && burn_in != 0) throw InvalidInput("burn_in must be zero for an empty run");
    if (dimension < 1) throw InvalidInput("latent dimension must be positive");
    if (!(adapt_decay_exponent > 0.0)) throw InvalidInput("adaptation decay exponent must be positive");
}

std::size_t McmcConfig::retained_count() const {
    return n_iterations == 0 ? 0 : (n_iterations - burn_in) / thin;
}

double AcceptanceLedger::alpha_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(alpha_accepted) / static_cast<double>(proposals);
}

double AcceptanceLedger::delta_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(delta_accepted) / static_cast<double>(proposals);
}

Eigen::MatrixXd AcceptanceLedger::latent_rates() const {
    if (proposals == 0) return Eigen::MatrixXd::Zero(latent_accepted.rows(), latent_accepted.cols());
    return latent_accepted / static_cast<double>(proposals);
}

double AcceptanceLedger::mean_latent_rate() const {
    return latent_accepted.size() == 0 ? 0.0 : latent_rates().mean();
}

Params PosteriorSamples::posterior_mean() const {
    if (params.empty()) throw InvalidInput("posterior_mean: no retained draws");
    Params m{};
    m.tau2 = 0.0;
    for (const auto& p : params) {
        m.alpha += p.alpha;
        m.delta += p.delta;
        m.gamma1w += p.gamma1w;
        m.gamma2w += p.gamma2w;
        m.gammab += p.gammab;
        m.tau2 += p.tau2;
    }
    const double n = static_cast<double>(params.size());
    m.alpha /= n;
    m.delta /= n;
    m.gamma1w /= n;
    m.gamma2w /= n;
    m.gammab /= n;
    m.tau2 /= n;
    m.sigma2 = 1.0;
    return m;
}

double adapt_tuning(double s, std::size_t k, double ratio, double target, double decay) {
    if (k == 0) throw InvalidInput("adapt_tuning: iteration index starts at 1");
    const double accept = std::isnan(ratio) ? 0.0 : std::min(1.0, ratio);
    return s + std::pow(static_cast<double>(k), -decay) * (accept - target);
}

Params default_initial_params(const LatentPositions<double>& first_slice) {
    Params p;
    p.alpha = 0.0;
    p.delta = 0.0;
    p.gamma1w = 0.5;
    p.gamma2w = 0.5;
    p.gammab = -0.5;
    const double denom = static_cast<double>(first_slice.size());
    p.tau2 = std::max(squared_norm_first_slice(first_slice) / denom, 1e-6);
    p.sigma2 = 1.0;
    return p;
}

// ---------------------------------------------------------------------------
// Sampler construction

Sampler::Sampler(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors,
                 const McmcConfig& config, SamplerOptions options)
    : y_(y), labels_(labels), priors_(priors), config_(config), anchor_(std::move(options.anchor)) {
    priors_.validate();
    config_.validate();
    init_structure();

    if (options.initial_state) {
        state_ = std::move(*options.initial_state);
        if (state_.latent.size() != horizon_) throw InvalidInput("initial state: trajectory length differs from horizon");
        for (const auto& z : state_.latent) {
            if (static_cast<std::size_t>(z.rows()) != n_ || z.cols() != dim_) {
                throw InvalidInput("initial state: positions must be N x p");
            }
        }
    } else {
        const LatentPositions<double>* start = anchor_ ? &anchor_->positions : nullptr;
        state_.latent = gmds_initialize<double>(y_, dim_, start);
        state_.params = default_initial_params(state_.latent.front());
    }
    state_.params.sigma2 = 1.0;

    if (!priors_.tau2) {
        const double mean_sq = squared_norm_first_slice(state_.latent.front()) /
                               static_cast<double>(state_.latent.front().size());
        priors_.tau2 = InverseGammaPrior{2.05, 1.05 * std::max(mean_sq, 1e-6)};
    }

    reference_ = center(stack(state_.latent));
    tuning_.alpha = config_.tuning_init_edge;
    tuning_.delta = config_.tuning_init_edge;
    tuning_.latent = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(horizon_), static_cast<Eigen::Index>(n_),
                                               config_.tuning_init_latent);
    rng_.seed(config_.seed);
    rebuild_caches();
}

Sampler::Sampler(const AdjacencySeries& y, const GroupLabels& labels, const McmcConfig& config,
                 const Checkpoint& checkpoint, std::optional<PeriodAnchor> anchor)
    : y_(y), labels_(labels), priors_(checkpoint.priors), config_(config), anchor_(std::move(anchor)) {
    priors_.validate();
    config_.validate();
    init_structure();
    state_ = checkpoint.state;
    if (state_.latent.size() != horizon_) throw InvalidInput("checkpoint: trajectory length differs from horizon");
    tuning_ = checkpoint.tuning;
    reference_ = checkpoint.reference;
    std::istringstream in(checkpoint.rng_state);
    in >> rng_ >> normal_;
    if (!in) throw InvalidInput("checkpoint: unreadable generator state");
    rebuild_caches();
}

void Sampler::init_structure() {
    n_ = y_.node_count();
    horizon_ = y_.horizon();
    dim_ = config_.dimension;
    if (labels_.size() != n_) throw InvalidInput("labels length differs from node count");
    if (!labels_.both_groups_present()) throw InvalidInput("both groups must be nonempty");
    if (anchor_) {
        if (static_cast<std::size_t>(anchor_->positions.rows()) != n_ || anchor_->positions.cols() != dim_) {
            throw InvalidInput("anchor positions must be N x p");
        }
        if (static_cast<std::size_t>(anchor_->adjacency.rows()) != n_) throw InvalidInput("anchor adjacency size");
        AdjacencySeries::validate_slice(anchor_->adjacency);
    }

    const auto n = static_cast<Eigen::Index>(n_);
    neighbours_.assign(horizon_, std::vector<std::vector<int>>(n_));
    count_within_.assign(horizon_, Eigen::VectorXi::Zero(n));
    count_between_.assign(horizon_, Eigen::VectorXi::Zero(n));
    for (std::size_t t = 0; t < horizon_; ++t) {
        const Adjacency& a = y_[t];
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i || a(i, j) == 0) continue;
                neighbours_[t][static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
                if (labels_[static_cast<std::size_t>(i)] == labels_[static_cast<std::size_t>(j)]) {
                    ++count_within_[t](i);
                } else {
                    ++count_between_[t](i);
                }
            }
        }
    }
    if (anchor_) {
        anchor_count_within_ = Eigen::VectorXi::Zero(n);
        anchor_count_between_ = Eigen::VectorXi::Zero(n);
        anchor_sum_within_ = Eigen::MatrixXd::Zero(n, dim_);
        anchor_sum_between_ = Eigen::MatrixXd::Zero(n, dim_);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i || anchor_->adjacency(i, j) == 0) continue;
                if (labels_[static_cast<std::size_t>(i)] == labels_[static_cast<std::size_t>(j)]) {
                    ++anchor_count_within_(i);
                    anchor_sum_within_.row(i) += anchor_->positions.row(j);
                } else {
                    ++anchor_count_between_(i);
                    anchor_sum_between_.row(i) += anchor_->positions.row(j);
                }
            }
        }
    }
    last_latent_accepted_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(horizon_), n);
    scratch_row_.resize(n);
    scratch_distance_.resize(n);
    scratch_step_.resize(dim_);
    scratch_proposal_.resize(dim_);
}

const Adjacency* Sampler::lag(std::size_t t) const {
    if (t > 0) return &y_[t - 1];
    return anchor_ ? &anchor_->adjacency : nullptr;
}

const Eigen::MatrixXd& Sampler::previous_positions(std::size_t t) const {
    return t > 0 ? state_.latent[t - 1] : anchor_->positions;
}
const Eigen::VectorXi& Sampler::previous_count_within(std::size_t t) const {
    return t > 0 ? count_within_[t - 1] : anchor_count_within_;
}
const Eigen::VectorXi& Sampler::previous_count_between(std::size_t t) const {
    return t > 0 ? count_between_[t - 1] : anchor_count_between_;
}
const Eigen::MatrixXd& Sampler::previous_sum_within(std::size_t t) const {
    return t > 0 ? sum_within_[t - 1] : anchor_sum_within_;
}
const Eigen::MatrixXd& Sampler::previous_sum_between(std::size_t t) const {
    return t > 0 ? sum_between_[t - 1] : anchor_sum_between_;
}

Eigen::RowVectorXd Sampler::transition_mean_row(std::size_t t, std::size_t i) const {
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::RowVectorXd prev = previous_positions(t).row(row);
    Eigen::RowVectorXd mean = prev;
    const int cw = previous_count_within(t)(row);
    const int cb = previous_count_between(t)(row);
    const Params& p = state_.params;
    if (cw > 0) mean += p.gamma_within(labels_[i]) * (previous_sum_within(t).row(row) / cw - prev);
    if (cb > 0) mean += p.gammab * (previous_sum_between(t).row(row) / cb - prev);
    return mean;
}

void Sampler::refresh_neighbour_sums() {
    const auto n = static_cast<Eigen::Index>(n_);
    sum_within_.assign(horizon_, Eigen::MatrixXd::Zero(n, dim_));
    sum_between_.assign(horizon_, Eigen::MatrixXd::Zero(n, dim_));
    for (std::size_t t = 0; t < horizon_; ++t) {
        const Eigen::MatrixXd& z = state_.latent[t];
        for (std::size_t i = 0; i < n_; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            for (int j : neighbours_[t][i]) {
                if (labels_[i] == labels_[static_cast<std::size_t>(j)]) {
                    sum_within_[t].row(row) += z.row(j);
                } else {
                    sum_between_[t].row(row) += z.row(j);
                }
            }
        }
    }
}

void Sampler::refresh_residuals() {
    const auto n = static_cast<Eigen::Index>(n_);
    residual_.assign(horizon_, Eigen::MatrixXd::Zero(n, dim_));
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (!has_incoming(t)) continue;
        for (std::size_t i = 0; i < n_; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            residual_[t].row(row) = state_.latent[t].row(row) - transition_mean_row(t, i);
        }
    }
}

void Sampler::rebuild_caches() {
    refresh_neighbour_sums();
    refresh_residuals();
    const auto n = static_cast<Eigen::Index>(n_);
    pair_loglik_.assign(horizon_, Eigen::MatrixXd::Zero(n, n));
    distance_.assign(horizon_, Eigen::MatrixXd::Zero(n, n));
    scratch_loglik_.assign(horizon_, Eigen::MatrixXd::Zero(n, n));
    const Params& p = state_.params;
    for (std::size_t t = 0; t < horizon_; ++t) {
        const Eigen::MatrixXd& z = state_.latent[t];
        const Adjacency* lagged = lag(t);
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double d = similarity(z.row(i), z.row(j));
                double eta = p.alpha - d;
                if (lagged) eta += p.delta * (*lagged)(i, j);
                const double ll = edge_loglik(y_[t](i, j), eta);
                distance_[t](i, j) = distance_[t](j, i) = d;
                pair_loglik_[t](i, j) = pair_loglik_[t](j, i) = ll;
            }
        }
    }
}

double Sampler::normal_draw() { return normal_(rng_); }
double Sampler::uniform_draw() { return uniform_(rng_); }

// ---------------------------------------------------------------------------
// Latent positions

double Sampler::latent_log_ratio_impl(std::size_t t, std::size_t i, const Eigen::RowVectorXd& proposal) const {
    const auto n = static_cast<Eigen::Index>(n_);
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::MatrixXd& z = state_.latent[t];
    const Params& p = state_.params;
    const Adjacency& y = y_[t];
    const Adjacency* lagged = lag(t);
    const Eigen::MatrixXd& cached = pair_loglik_[t];

    double edge = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == row) {
            scratch_row_(j) = 0.0;
            scratch_distance_(j) = 0.0;
            continue;
        }
        double sq = 0.0;
        for (int k = 0; k < dim_; ++k) {
            const double d = proposal(k) - z(j, k);
            sq += d * d;
        }
        const double dist = std::sqrt(sq);
        double eta = p.alpha - dist;
        if (lagged) eta += p.delta * (*lagged)(row, j);
        const double ll = edge_loglik(y(row, j), eta);
        scratch_row_(j) = ll;
        scratch_distance_(j) = dist;
        edge += ll - cached(j, row);
    }
    double log_ratio = pair_weight() * edge;

    Eigen::RowVectorXd& step = scratch_step_;
    step = proposal - z.row(row);
    const double step_sq = step.squaredNorm();
    if (has_incoming(t)) {
        log_ratio += -residual_[t].row(row).dot(step) - 0.5 * step_sq;
    } else {
        log_ratio += -0.5 * (proposal.squaredNorm() - z.row(row).squaredNorm()) / p.tau2;
    }

    if (t + 1 < horizon_) {
        const Eigen::MatrixXd& r = residual_[t + 1];
        const Eigen::VectorXi& cw = count_within_[t];
        const Eigen::VectorXi& cb = count_between_[t];
        const double self_gain =
            1.0 - (cw(row) > 0 ? p.gamma_within(labels_[i]) : 0.0) - (cb(row) > 0 ? p.gammab : 0.0);
        // A shift m of the transition mean changes the log-density by r.m - |m|^2 / 2.
        log_ratio += self_gain * r.row(row).dot(step) - 0.5 * self_gain * self_gain * step_sq;
        for (int j : neighbours_[t][i]) {
            const auto u = static_cast<std::size_t>(j);
            const double gain = labels_[u] == labels_[i] ? p.gamma_within(labels_[u]) / cw(j) : p.gammab / cb(j);
            log_ratio += gain * r.row(j).dot(step) - 0.5 * gain * gain * step_sq;
        }
    }
    return log_ratio;
}

double Sampler::latent_log_ratio(std::size_t t, std::size_t i, const Eigen::RowVectorXd& proposal) const {
    if (t >= horizon_ || i >= n_) throw InvalidInput("latent_log_ratio: index out of range");
    if (proposal.size() != dim_) throw InvalidInput("latent_log_ratio: proposal dimension mismatch");
    return latent_log_ratio_impl(t, i, proposal);
}

TargetTerms Sampler::latent_target_terms(std::size_t t, std::size_t i) const {
    TargetTerms terms;
    const std::size_t factor = config_.pair_counting == PairCounting::ordered ? 2 : 1;
    terms.edge_terms = factor * (n_ - 1);
    if (t + 1 < horizon_) terms.forward_transitions = 1 + neighbours_[t][i].size();
    if (has_incoming(t)) {
        terms.incoming_transitions = 1;
    } else {
        terms.initial_prior_terms = 1;
    }
    return terms;
}

double Sampler::update_latent(std::size_t t, std::size_t i, std::size_t k) {
    const auto row = static_cast<Eigen::Index>(i);
    const auto trow = static_cast<Eigen::Index>(t);
    Eigen::MatrixXd& z = state_.latent[t];
    const double scale = std::exp(tuning_.latent(trow, row));
    Eigen::RowVectorXd& proposal = scratch_proposal_;
    for (int d = 0; d < dim_; ++d) proposal(d) = z(row, d) + scale * normal_draw();

    const double log_ratio = proposal.allFinite() ? latent_log_ratio_impl(t, i, proposal)
                                                  : -std::numeric_limits<double>::infinity();
    const double log_u = std::log(uniform_draw());
    const bool accept = log_u < std::min(0.0, log_ratio);
    last_latent_accepted_(trow, row) = accept ? 1.0 : 0.0;

    if (accept) {
        const Params& p = state_.params;
        Eigen::RowVectorXd& step = scratch_step_;
        step = proposal - z.row(row);
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n_); ++j) {
            if (j == row) continue;
            pair_loglik_[t](row, j) = pair_loglik_[t](j, row) = scratch_row_(j);
            distance_[t](row, j) = distance_[t](j, row) = scratch_distance_(j);
        }
        if (has_incoming(t)) residual_[t].row(row) += step;
        if (t + 1 < horizon_) {
            Eigen::MatrixXd& r = residual_[t + 1];
            const Eigen::VectorXi& cw = count_within_[t];
            const Eigen::VectorXi& cb = count_between_[t];
            const double self_gain =
                1.0 - (cw(row) > 0 ? p.gamma_within(labels_[i]) : 0.0) - (cb(row) > 0 ? p.gammab : 0.0);
            r.row(row) -= self_gain * step;
            for (int j : neighbours_[t][i]) {
                const auto u = static_cast<std::size_t>(j);
                const double gain =
                    labels_[u] == labels_[i] ? p.gamma_within(labels_[u]) / cw(j) : p.gammab / cb(j);
                r.row(j) -= gain * step;
            }
        }
        for (int j : neighbours_[t][i]) {
            if (labels_[static_cast<std::size_t>(j)] == labels_[i]) {
                sum_within_[t].row(j) += step;
            } else {
                sum_between_[t].row(j) += step;
            }
        }
        z.row(row) = proposal;
    }

    const double ratio = std::isfinite(log_ratio) ? std::min(1.0, std::exp(std::min(0.0, log_ratio))) : 0.0;
    if (k > 0) {
        tuning_.latent(trow, row) =
            adapt_tuning(tuning_.latent(trow, row), k, ratio, config_.adapt_target, config_.adapt_decay_exponent);
    }
    return ratio;
}

// ---------------------------------------------------------------------------
// alpha and delta

double Sampler::alpha_log_ratio(double proposal) const {
    const auto n = static_cast<Eigen::Index>(n_);
    const Params& p = state_.params;
    double edge = 0.0;
    for (std::size_t t = 0; t < horizon_; ++t) {
        const Adjacency* lagged = lag(t);
        const Adjacency& y = y_[t];
        const Eigen::MatrixXd& dist = distance_[t];
        const Eigen::MatrixXd& cached = pair_loglik_[t];
        Eigen::MatrixXd& fresh = const_cast<Eigen::MatrixXd&>(scratch_loglik_[t]);
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                double eta = proposal - dist(i, j);
                if (lagged) eta += p.delta * (*lagged)(i, j);
                const double ll = edge_loglik(y(i, j), eta);
                fresh(i, j) = ll;
                edge += ll - cached(i, j);
            }
        }
    }
    return pair_weight() * edge + normal_logpdf_kernel(proposal, priors_.alpha) -
           normal_logpdf_kernel(p.alpha, priors_.alpha);
}

TargetTerms Sampler::alpha_target_terms() const {
    TargetTerms terms;
    const std::size_t factor = config_.pair_counting == PairCounting::ordered ? 2 : 1;
    terms.edge_terms = factor * horizon_ * n_ * (n_ - 1) / 2;
    return terms;
}

double Sampler::update_alpha(std::size_t k) {
    const double proposal = state_.params.alpha + std::exp(tuning_.alpha) * normal_draw();
    const double log_ratio = std::isfinite(proposal) ? alpha_log_ratio(proposal)
                                                     : -std::numeric_limits<double>::infinity();
    const bool accept = std::log(uniform_draw()) < std::min(0.0, log_ratio);
    last_alpha_accepted_ = accept;
    if (accept) {
        const auto n = static_cast<Eigen::Index>(n_);
        for (std::size_t t = 0; t < horizon_; ++t) {
            Eigen::MatrixXd& fresh = scratch_loglik_[t];
            for (Eigen::Index j = 1; j < n; ++j)
                for (Eigen::Index i = 0; i < j; ++i) fresh(j, i) = fresh(i, j);
            pair_loglik_[t].swap(fresh);
        }
        state_.params.alpha = proposal;
    }
    const double ratio = std::isfinite(log_ratio) ? std::exp(std::min(0.0, log_ratio)) : 0.0;
    if (k > 0) tuning_.alpha = adapt_tuning(tuning_.alpha, k, ratio, config_.adapt_target, config_.adapt_decay_exponent);
    return ratio;
}

double Sampler::delta_log_ratio(double proposal) const {
    const auto n = static_cast<Eigen::Index>(n_);
    const Params& p = state_.params;
    double edge = 0.0;
    for (std::size_t t = 0; t < horizon_; ++t) {
        const Adjacency* lagged = lag(t);
        if (!lagged) continue;
        const Adjacency& y = y_[t];
        const Eigen::MatrixXd& dist = distance_[t];
        const Eigen::MatrixXd& cached = pair_loglik_[t];
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                if ((*lagged)(i, j) == 0) continue;
                const double eta = p.alpha + proposal - dist(i, j);
                edge += edge_loglik(y(i, j), eta) - cached(i, j);
            }
        }
    }
    return pair_weight() * edge + normal_logpdf_kernel(proposal, priors_.delta) -
           normal_logpdf_kernel(p.delta, priors_.delta);
}

TargetTerms Sampler::delta_target_terms() const {
    TargetTerms terms;
    const std::size_t factor = config_.pair_counting == PairCounting::ordered ? 2 : 1;
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (lag(t)) terms.edge_terms += factor * n_ * (n_ - 1) / 2;
    }
    return terms;
}

double Sampler::update_delta(std::size_t k) {
    const double proposal = state_.params.delta + std::exp(tuning_.delta) * normal_draw();
    const double log_ratio = std::isfinite(proposal) ? delta_log_ratio(proposal)
                                                     : -std::numeric_limits<double>::infinity();
    const bool accept = std::log(uniform_draw()) < std::min(0.0, log_ratio);
    last_delta_accepted_ = accept;
    if (accept) {
        const auto n = static_cast<Eigen::Index>(n_);
        const Params& p = state_.params;
        for (std::size_t t = 0; t < horizon_; ++t) {
            const Adjacency* lagged = lag(t);
            if (!lagged) continue;
            for (Eigen::Index j = 1; j < n; ++j) {
                for (Eigen::Index i = 0; i < j; ++i) {
                    if ((*lagged)(i, j) == 0) continue;
                    const double ll = edge_loglik(y_[t](i, j), p.alpha + proposal - distance_[t](i, j));
                    pair_loglik_[t](i, j) = pair_loglik_[t](j, i) = ll;
                }
            }
        }
        state_.params.delta = proposal;
    }
    const double ratio = std::isfinite(log_ratio) ? std::exp(std::min(0.0, log_ratio)) : 0.0;
    if (k > 0) tuning_.delta = adapt_tuning(tuning_.delta, k, ratio, config_.adapt_target, config_.adapt_decay_exponent);
    return ratio;
}

// ---------------------------------------------------------------------------
// Closed-form conditionals

NormalMoments Sampler::gamma_within_conditional(int group, double sigma2) const {
    if (group != 1 && group != 2) throw InvalidInput("gamma_within_conditional: group must be 1 or 2");
    const Params& p = state_.params;
    double cross = 0.0;
    double gram = 0.0;
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (!has_incoming(t)) continue;
        const Eigen::MatrixXd& prev = previous_positions(t);
        const Eigen::VectorXi& cw = previous_count_within(t);
        const Eigen::VectorXi& cb = previous_count_between(t);
        for (std::size_t i = 0; i < n_; ++i) {
            if (labels_[i] != group) continue;
            const auto row = static_cast<Eigen::Index>(i);
            if (cw(row) == 0) continue;  // b = 0 contributes nothing
            const Eigen::RowVectorXd b = previous_sum_within(t).row(row) / cw(row) - prev.row(row);
            Eigen::RowVectorXd a = state_.latent[t].row(row) - prev.row(row);
            if (cb(row) > 0) a -= p.gammab * (previous_sum_between(t).row(row) / cb(row) - prev.row(row));
            cross += a.dot(b);
            gram += b.squaredNorm();
        }
    }
    const double precision = gram / sigma2 + 1.0 / priors_.gamma_w.variance;
    return {(cross / sigma2 + priors_.gamma_w.mean / priors_.gamma_w.variance) / precision,
            1.0 / std::sqrt(precision)};
}

NormalMoments Sampler::gamma_between_conditional(double sigma2) const {
    const Params& p = state_.params;
    double cross = 0.0;
    double gram = 0.0;
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (!has_incoming(t)) continue;
        const Eigen::MatrixXd& prev = previous_positions(t);
        const Eigen::VectorXi& cw = previous_count_within(t);
        const Eigen::VectorXi& cb = previous_count_between(t);
        for (std::size_t i = 0; i < n_; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            if (cb(row) == 0) continue;
            const Eigen::RowVectorXd d = previous_sum_between(t).row(row) / cb(row) - prev.row(row);
            Eigen::RowVectorXd c = state_.latent[t].row(row) - prev.row(row);
            if (cw(row) > 0) {
                c -= p.gamma_within(labels_[i]) * (previous_sum_within(t).row(row) / cw(row) - prev.row(row));
            }
            cross += c.dot(d);
            gram += d.squaredNorm();
        }
    }
    const double precision = gram / sigma2 + 1.0 / priors_.gamma_b.variance;
    return {(cross / sigma2 + priors_.gamma_b.mean / priors_.gamma_b.variance) / precision,
            1.0 / std::sqrt(precision)};
}

InverseGammaPrior Sampler::tau2_conditional() const {
    if (anchored()) throw ContractError("tau2 has no conditional in an anchored fit");
    const LatentPositions<double>& z1 = state_.latent.front();
    return {priors_.tau2->shape + 0.5 * static_cast<double>(n_) * dim_, priors_.tau2->scale + 0.5 * z1.squaredNorm()};
}

double Sampler::draw_tau2() {
    if (anchored()) return state_.params.tau2;
    const InverseGammaPrior post = tau2_conditional();
    std::gamma_distribution<double> gamma(post.shape, 1.0);
    state_.params.tau2 = post.scale / gamma(rng_);
    return state_.params.tau2;
}

double Sampler::draw_gamma_within(int group) {
    const NormalMoments m = gamma_within_conditional(group);
    const double value = m.mean + m.sd * normal_draw();
    (group == 1 ? state_.params.gamma1w : state_.params.gamma2w) = value;
    return value;
}

double Sampler::draw_gamma_between() {
    const NormalMoments m = gamma_between_conditional();
    state_.params.gammab = m.mean + m.sd * normal_draw();
    return state_.params.gammab;
}

// ---------------------------------------------------------------------------

void Sampler::sweep(std::size_t k, bool adapt) {
    const std::size_t adapt_index = adapt ? k : 0;
    for (std::size_t t = 0; t < horizon_; ++t)
        for (std::size_t i = 0; i < n_; ++i) update_latent(t, i, adapt_index);
    update_alpha(adapt_index);
    update_delta(adapt_index);
    draw_tau2();
    draw_gamma_within(1);
    draw_gamma_within(2);
    draw_gamma_between();
    refresh_neighbour_sums();
    refresh_residuals();
}

double Sampler::observation_loglik() const {
    double total = 0.0;
    const auto n = static_cast<Eigen::Index>(n_);
    for (const auto& ll : pair_loglik_)
        for (Eigen::Index j = 1; j < n; ++j)
            for (Eigen::Index i = 0; i < j; ++i) total += ll(i, j);
    return total;
}

void Sampler::check_finite(std::size_t iteration) const {
    const Params& p = state_.params;
    const std::pair<const char*, double> scalars[] = {{"alpha", p.alpha},     {"delta", p.delta},
                                                      {"gamma1w", p.gamma1w}, {"gamma2w", p.gamma2w},
                                                      {"gammab", p.gammab},   {"tau2", p.tau2}};
    for (const auto& [name, value] : scalars) {
        if (!std::isfinite(value)) {
            throw NumericalError(std::string("non-finite ") + name + " at iteration " + std::to_string(iteration));
        }
    }
    for (std::size_t t = 0; t < horizon_; ++t) {
        if (!state_.latent[t].allFinite()) {
            throw NumericalError("non-finite latent positions at time " + std::to_string(t + 1) + " at iteration " +
                                 std::to_string(iteration));
        }
    }
}

Checkpoint Sampler::checkpoint(std::size_t iteration) const {
    Checkpoint c;
    c.iteration = iteration;
    c.state = state_;
    c.tuning = tuning_;
    std::ostringstream out;
    out << rng_ << ' ' << normal_;
    c.rng_state = out.str();
    c.priors = priors_;
    c.reference = reference_;
    return c;
}

void Sampler::set_params(const Params& params) {
    state_.params = params;
    state_.params.sigma2 = 1.0;
    rebuild_caches();
}

void Sampler::set_latent(std::size_t t, std::size_t i, const Eigen::RowVectorXd& position) {
    if (t >= horizon_ || i >= n_ || position.size() != dim_) throw InvalidInput("set_latent: bad index or size");
    state_.latent[t].row(static_cast<Eigen::Index>(i)) = position;
    rebuild_caches();
}

// ---------------------------------------------------------------------------

PosteriorSamples run_mcmc(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors,
                          const McmcConfig& config, const RunOptions& options) {
    config.validate();
    std::optional<Sampler> sampler;
    std::size_t start = 0;
    if (options.resume) {
        sampler.emplace(y, labels, config, *options.resume, options.anchor);
        start = options.resume->iteration;
    } else {
        sampler.emplace(y, labels, priors, config, SamplerOptions{options.anchor, options.initial_state});
    }

    PosteriorSamples out;
    out.aligned = !sampler->anchored();
    out.anchor = options.anchor;
    out.acceptance.latent_accepted = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.horizon()),
                                                          static_cast<Eigen::Index>(y.node_count()));
    const std::size_t expected = config.retained_count();
    out.params.reserve(expected);
    out.deviance.reserve(expected);
    if (config.store_latent_draws) out.latent_draws.reserve(expected);

    LatentTrajectory<double> latent_sum;
    for (std::size_t k = start + 1; k <= config.n_iterations; ++k) {
        const bool adapt = k <= config.burn_in;
        sampler->sweep(k, adapt);
        sampler->check_finite(k);
        if (adapt) continue;

        ++out.acceptance.proposals;
        out.acceptance.alpha_accepted += sampler->last_alpha_accepted() ? 1 : 0;
        out.acceptance.delta_accepted += sampler->last_delta_accepted() ? 1 : 0;
        out.acceptance.latent_accepted += sampler->last_latent_accepted();

        if ((k - config.burn_in) % config.thin != 0) continue;
        const ChainState& state = sampler->state();
        out.params.push_back(state.params);
        out.iterations.push_back(k);
        out.deviance.push_back(-2.0 * sampler->observation_loglik());
        LatentTrajectory<double> draw =
            out.aligned ? align_trajectory(state.latent, sampler->reference()) : state.latent;
        if (latent_sum.empty()) {
            latent_sum = draw;
        } else {
            for (std::size_t t = 0; t < draw.size(); ++t) latent_sum[t] += draw[t];
        }
        if (config.store_latent_draws) out.latent_draws.push_back(std::move(draw));
    }

    if (latent_sum.empty()) {
        const ChainState& state = sampler->state();
        out.latent_mean = out.aligned ? align_trajectory(state.latent, sampler->reference()) : state.latent;
    } else {
        const double count = static_cast<double>(out.params.size());
        out.latent_mean = std::move(latent_sum);
        for (auto& z : out.latent_mean) z /= count;
    }
    out.final_tuning = sampler->tuning();
    out.checkpoint = sampler->checkpoint(std::max(start, config.n_iterations));
    return out;
}

}  // namespace clsna
