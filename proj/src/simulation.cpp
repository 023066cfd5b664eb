#include "clsna/simulation.hpp"

#include "clsna/model.hpp"
#include "clsna/random.hpp"

#include <cmath>
#include <sstream>

namespace clsna {

namespace {

// Stream tags keep the initial draw, transitions and edges independent.
constexpr std::uint64_t kInitialTag = 1;
constexpr std::uint64_t kTransitionTag = 2;
constexpr std::uint64_t kEdgeTag = 3;

void validate_params(const Params& p) {
    if (!(p.tau2 > 0.0)) throw InvalidInput("simulation: tau2 must be positive");
    if (!(p.sigma2 > 0.0)) throw InvalidInput("simulation: sigma2 must be positive");
}

Adjacency draw_edges(const CounterRng& rng, std::size_t t, const Params& params, const LatentPositions<double>& z,
                     const Adjacency* lag) {
    const Eigen::Index n = z.rows();
    Adjacency y = Adjacency::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double eta = params.alpha - similarity(z.row(i), z.row(j));
            if (lag) eta += params.delta * (*lag)(i, j);
            const double u = rng.uniform(kEdgeTag, t, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
            const std::uint8_t edge = u < logistic(eta) ? 1 : 0;
            y(i, j) = edge;
            y(j, i) = edge;
        }
    }
    return y;
}

SimResult run(const SimConfig& config, const std::vector<ScheduleEntry>& schedule) {
    const CounterRng rng(config.seed);
    const auto n = static_cast<Eigen::Index>(config.node_count);
    const Eigen::Index p = config.dimension;

    SimResult result;
    for (std::size_t k = 1; k < schedule.size(); ++k) result.change_times.push_back(schedule[k].start_time);

    std::size_t period = 0;
    auto params_at = [&](std::size_t time) -> const Params& {
        while (period + 1 < schedule.size() && schedule[period + 1].start_time <= time) ++period;
        return schedule[period].params;
    };

    std::vector<Adjacency> slices;
    slices.reserve(config.horizon);
    result.latent.reserve(config.horizon);
    bool warned = false;

    for (std::size_t t = 0; t < config.horizon; ++t) {
        const Params& params = params_at(t + 1);
        LatentPositions<double> z(n, p);
        if (t == 0) {
            const double sd = std::sqrt(params.tau2);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index k = 0; k < p; ++k)
                    z(i, k) = sd * rng.normal(kInitialTag, 0, static_cast<std::uint64_t>(i),
                                              static_cast<std::uint64_t>(k));
        } else {
            z = transition_mean(params, config.labels, result.latent[t - 1], slices[t - 1]);
            const double sd = std::sqrt(params.sigma2);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index k = 0; k < p; ++k)
                    z(i, k) += sd * rng.normal(kTransitionTag, t, static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(k));
        }
        if (!warned && z.cwiseAbs().maxCoeff() > config.divergence_bound) {
            std::ostringstream msg;
            msg << "latent coordinates exceed " << config.divergence_bound << " at time " << t + 1
                << "; the attractor dynamics may be divergent";
            result.warnings.push_back(msg.str());
            warned = true;
        }
        slices.push_back(draw_edges(rng, t, params, z, t == 0 ? nullptr : &slices[t - 1]));
        result.latent.push_back(std::move(z));
    }
    result.networks = AdjacencySeries(std::move(slices));
    return result;
}

}  // namespace

void SimConfig::validate() const {
    if (node_count < 2) throw InvalidInput("simulation: node_count must be at least 2");
    if (horizon < 1) throw InvalidInput("simulation: horizon must be positive");
    if (dimension < 1) throw InvalidInput("simulation: dimension must be positive");
    if (labels.size() != node_count) throw InvalidInput("simulation: labels length differs from node_count");
    validate_params(params);
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        validate_params(schedule[k].params);
        if (k == 0 && schedule[k].start_time != 1) throw InvalidInput("simulation: schedule must start at time 1");
        if (k > 0 && schedule[k].start_time <= schedule[k - 1].start_time) {
            throw InvalidInput("simulation: schedule start times must be strictly increasing");
        }
        if (schedule[k].start_time > horizon) throw InvalidInput("simulation: schedule start time beyond horizon");
    }
    if (!(divergence_bound > 0.0)) throw InvalidInput("simulation: divergence_bound must be positive");
}

SimResult simulate(const SimConfig& config) {
    config.validate();
    if (!config.schedule.empty()) return run(config, config.schedule);
    return run(config, {ScheduleEntry{1, config.params}});
}

SimResult simulate_changepoint(const SimConfig& config) {
    config.validate();
    if (config.schedule.empty()) throw InvalidInput("simulate_changepoint: schedule is empty");
    return run(config, config.schedule);
}

}  // namespace clsna
