#include "clsna/model_selection.hpp"

#include "clsna/model.hpp"
#include "clsna/random.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace clsna {

DicResult compute_dic(const PosteriorSamples& samples, const AdjacencySeries& y, const GroupLabels& labels) {
    if (samples.deviance.size() < 2) throw InvalidInput("compute_dic: at least two retained draws are required");
    if (labels.size() != y.node_count()) throw InvalidInput("compute_dic: labels length differs from node count");
    DicResult r;
    r.mean_deviance = std::accumulate(samples.deviance.begin(), samples.deviance.end(), 0.0) /
                      static_cast<double>(samples.deviance.size());
    const Adjacency* lag = samples.anchor ? &samples.anchor->adjacency : nullptr;
    r.deviance_at_mean = -2.0 * observation_loglik(samples.posterior_mean(), y, samples.latent_mean, lag);
    r.effective_parameters = r.mean_deviance - r.deviance_at_mean;
    r.dic = r.mean_deviance + r.effective_parameters;
    return r;
}

void validate_change_times(const std::vector<std::size_t>& change_times, std::size_t horizon) {
    std::size_t start = 1;
    for (std::size_t r : change_times) {
        if (r <= start) throw InvalidInput("change times must be strictly increasing and greater than 1");
        if (r > horizon) throw InvalidInput("change time " + std::to_string(r) + " beyond the horizon");
        if (r - start < 2) throw InvalidInput("every period must span at least two time steps");
        start = r;
    }
    if (horizon + 1 - start < 2) throw InvalidInput("every period must span at least two time steps");
}

ChangePointFit fit_changepoint(const AdjacencySeries& y, const GroupLabels& labels, const PriorSpec& priors,
                               const McmcConfig& config, const std::vector<std::size_t>& change_times) {
    validate_change_times(change_times, y.horizon());
    ChangePointFit fit;
    fit.change_times = change_times;

    std::vector<std::size_t> starts{1};
    starts.insert(starts.end(), change_times.begin(), change_times.end());
    const CounterRng seeds(config.seed);
    double first_tau2 = 0.0;

    for (std::size_t k = 0; k < starts.size(); ++k) {
        PeriodFit period;
        period.first_time = starts[k];
        period.last_time = k + 1 < starts.size() ? starts[k + 1] - 1 : y.horizon();
        const AdjacencySeries part = y.subseries(period.first_time - 1, period.last_time);

        McmcConfig period_config = config;
        if (k > 0) period_config.seed = seeds.derive(k);
        RunOptions options;
        if (k > 0) {
            const PeriodFit& previous = fit.periods.back();
            options.anchor = PeriodAnchor{previous.samples.latent_mean.back(), y[period.first_time - 2]};
        }
        period.samples = run_mcmc(part, labels, priors, period_config, options);
        if (k == 0) {
            first_tau2 = period.samples.params.empty() ? period.samples.checkpoint.state.params.tau2
                                                       : period.samples.posterior_mean().tau2;
        } else {
            for (auto& p : period.samples.params) p.tau2 = first_tau2;
        }
        if (period.samples.size() >= 2) {
            period.dic = compute_dic(period.samples, part, labels);
            fit.dic += period.dic.dic;
        }
        if (!period.samples.params.empty()) period.auc = in_sample_auc(period.samples, part);
        fit.periods.push_back(std::move(period));
    }
    return fit;
}

std::size_t argmin_dic(const std::vector<DicRow>& table) {
    if (table.empty()) throw InvalidInput("argmin_dic: empty table");
    std::size_t best = 0;
    for (std::size_t k = 1; k < table.size(); ++k) {
        const DicRow& a = table[k];
        const DicRow& b = table[best];
        if (a.dic < b.dic) {
            best = k;
        } else if (a.dic == b.dic) {
            if (a.change_times.size() < b.change_times.size() ||
                (a.change_times.size() == b.change_times.size() && a.change_times < b.change_times)) {
                best = k;
            }
        }
    }
    return best;
}

ChangePointSelection select_changepoint(const AdjacencySeries& y, const GroupLabels& labels,
                                        const PriorSpec& priors, const McmcConfig& config,
                                        const std::vector<std::vector<std::size_t>>& candidates, unsigned jobs) {
    if (candidates.empty()) throw InvalidInput("select_changepoint: no candidates");
    for (const auto& c : candidates) validate_change_times(c, y.horizon());

    std::vector<std::optional<ChangePointFit>> fits(candidates.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < candidates.size(); k = next++) {
            try {
                fits[k] = fit_changepoint(y, labels, priors, config, candidates[k]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(candidates.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ChangePointSelection selection;
    for (std::size_t k = 0; k < candidates.size(); ++k) selection.table.push_back({candidates[k], fits[k]->dic});
    selection.best_index = argmin_dic(selection.table);
    selection.best = std::move(*fits[selection.best_index]);
    return selection;
}

void write_csv(std::ostream& out, const std::vector<DicRow>& table) {
    const auto precision = out.precision(17);
    out << "change_times,dic\n";
    for (const auto& row : table) {
        if (row.change_times.empty()) out << "none";
        for (std::size_t k = 0; k < row.change_times.size(); ++k) out << (k ? ";" : "") << row.change_times[k];
        out << ',' << row.dic << '\n';
    }
    out.precision(precision);
}

}  // namespace clsna
