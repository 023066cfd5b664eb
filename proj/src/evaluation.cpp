#include "clsna/evaluation.hpp"

#include "clsna/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace clsna {

std::optional<double> auc(const std::vector<double>& scores, const std::vector<int>& outcomes) {
    if (scores.size() != outcomes.size()) throw InvalidInput("auc: scores and outcomes differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the midrank is an integer, which keeps the statistic exact.
    std::uint64_t positives = 0;
    std::uint64_t doubled_rank_sum = 0;
    std::size_t start = 0;
    while (start < n) {
        std::size_t stop = start + 1;
        while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
        const std::uint64_t doubled_midrank = static_cast<std::uint64_t>(start + 1 + stop);
        for (std::size_t k = start; k < stop; ++k) {
            if (outcomes[order[k]] != 0) {
                ++positives;
                doubled_rank_sum += doubled_midrank;
            }
        }
        start = stop;
    }
    const std::uint64_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return std::nullopt;
    const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
    return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

AucReport in_sample_auc(const Params& params, const LatentTrajectory<double>& latent, const AdjacencySeries& y,
                        const Adjacency* initial_lag) {
    if (latent.size() != y.horizon()) throw InvalidInput("in_sample_auc: trajectory length differs from horizon");
    const auto n = static_cast<Eigen::Index>(y.node_count());
    AucReport report;
    std::vector<double> all_scores;
    std::vector<int> all_outcomes;
    for (std::size_t t = 0; t < y.horizon(); ++t) {
        if (latent[t].rows() != n) throw InvalidInput("in_sample_auc: positions and adjacency disagree on node count");
        const Adjacency* lag = t == 0 ? initial_lag : &y[t - 1];
        std::vector<double> scores;
        std::vector<int> outcomes;
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                double eta = params.alpha - similarity(latent[t].row(i), latent[t].row(j));
                if (lag) eta += params.delta * (*lag)(i, j);
                scores.push_back(logistic(eta));
                outcomes.push_back(y[t](i, j));
            }
        }
        report.per_time.push_back(auc(scores, outcomes));
        all_scores.insert(all_scores.end(), scores.begin(), scores.end());
        all_outcomes.insert(all_outcomes.end(), outcomes.begin(), outcomes.end());
    }
    report.overall = auc(all_scores, all_outcomes);
    return report;
}

AucReport in_sample_auc(const PosteriorSamples& samples, const AdjacencySeries& y) {
    const Adjacency* lag = samples.anchor ? &samples.anchor->adjacency : nullptr;
    return in_sample_auc(samples.posterior_mean(), samples.latent_mean, y, lag);
}

DensityReport density_report(const AdjacencySeries& y, const GroupLabels& labels) {
    if (labels.size() != y.node_count()) throw InvalidInput("density_report: labels length differs from node count");
    const auto n = static_cast<Eigen::Index>(y.node_count());
    DensityReport report;
    for (std::size_t t = 0; t < y.horizon(); ++t) {
        double edges[3] = {0, 0, 0};
        double pairs[3] = {0, 0, 0};
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const int gi = labels[static_cast<std::size_t>(i)];
                const int gj = labels[static_cast<std::size_t>(j)];
                const int cls = gi != gj ? 2 : gi - 1;
                pairs[cls] += 1;
                edges[cls] += y[t](i, j);
            }
        }
        auto ratio = [](double e, double p) { return p > 0 ? e / p : 0.0; };
        report.within1.push_back(ratio(edges[0], pairs[0]));
        report.within2.push_back(ratio(edges[1], pairs[1]));
        report.between.push_back(ratio(edges[2], pairs[2]));
        report.overall.push_back(ratio(edges[0] + edges[1] + edges[2], pairs[0] + pairs[1] + pairs[2]));
    }
    return report;
}

LatentDistanceReport latent_distance_report(const LatentTrajectory<double>& latent, const GroupLabels& labels) {
    LatentDistanceReport report;
    for (const auto& z : latent) {
        if (static_cast<std::size_t>(z.rows()) != labels.size()) {
            throw InvalidInput("latent_distance_report: labels length differs from node count");
        }
        double sum[3] = {0, 0, 0};
        double pairs[3] = {0, 0, 0};
        for (Eigen::Index j = 1; j < z.rows(); ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const int gi = labels[static_cast<std::size_t>(i)];
                const int gj = labels[static_cast<std::size_t>(j)];
                const int cls = gi != gj ? 2 : gi - 1;
                pairs[cls] += 1;
                sum[cls] += similarity(z.row(i), z.row(j));
            }
        }
        auto mean = [](double s, double p) -> std::optional<double> {
            if (p == 0) return std::nullopt;
            return s / p;
        };
        report.within1.push_back(mean(sum[0], pairs[0]));
        report.within2.push_back(mean(sum[1], pairs[1]));
        report.between.push_back(pairs[2] > 0 ? sum[2] / pairs[2] : 0.0);
    }
    return report;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile: no values");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("quantile: level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ParameterSummary summarize(const std::string& name, const std::vector<double>& draws) {
    if (draws.empty()) throw InvalidInput("summarize: no draws");
    const double n = static_cast<double>(draws.size());
    ParameterSummary s;
    s.name = name;
    const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
    // A constant chain is summarised exactly rather than up to summation error.
    s.mean = *lo == *hi ? *lo : std::accumulate(draws.begin(), draws.end(), 0.0) / n;
    double ss = 0.0;
    std::size_t positive = 0;
    for (double d : draws) {
        ss += (d - s.mean) * (d - s.mean);
        if (d > 0) ++positive;
    }
    s.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.q025 = quantile(draws, 0.025);
    s.q975 = quantile(draws, 0.975);
    s.prob_positive = static_cast<double>(positive) / n;
    return s;
}

const ParameterSummary& PosteriorSummary::parameter(const std::string& name) const {
    for (const auto& p : parameters)
        if (p.name == name) return p;
    throw InvalidInput("no parameter named " + name);
}

const ContrastSummary& PosteriorSummary::contrast(const std::string& name) const {
    for (const auto& c : contrasts)
        if (c.name == name) return c;
    throw InvalidInput("no contrast named " + name);
}

PosteriorSummary posterior_summary(const PosteriorSamples& samples) {
    if (samples.params.empty()) throw InvalidInput("posterior_summary: no retained draws");
    auto column = [&](auto get) {
        std::vector<double> out;
        out.reserve(samples.params.size());
        for (const auto& p : samples.params) out.push_back(get(p));
        return out;
    };
    PosteriorSummary s;
    s.draws = samples.params.size();
    s.parameters.push_back(summarize("alpha", column([](const Params& p) { return p.alpha; })));
    s.parameters.push_back(summarize("delta", column([](const Params& p) { return p.delta; })));
    s.parameters.push_back(summarize("gamma1w", column([](const Params& p) { return p.gamma1w; })));
    s.parameters.push_back(summarize("gamma2w", column([](const Params& p) { return p.gamma2w; })));
    s.parameters.push_back(summarize("gammab", column([](const Params& p) { return p.gammab; })));
    s.parameters.push_back(summarize("tau2", column([](const Params& p) { return p.tau2; })));
    s.parameters.push_back(summarize("tau", column([](const Params& p) { return std::sqrt(p.tau2); })));

    auto contrast = [&](const std::string& name, auto get) {
        const ParameterSummary p = summarize(name, column(get));
        s.contrasts.push_back({p.name, p.mean, p.sd, p.prob_positive});
    };
    contrast("gamma1w-gamma2w", [](const Params& p) { return p.gamma1w - p.gamma2w; });
    contrast("|gammab|-|gamma2w|", [](const Params& p) { return std::abs(p.gammab) - std::abs(p.gamma2w); });
    contrast("|gammab|-|gamma1w|", [](const Params& p) { return std::abs(p.gammab) - std::abs(p.gamma1w); });
    return s;
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
    if (v) out << *v;
    else out << "NA";
}

}  // namespace

void write_csv(std::ostream& out, const PosteriorSummary& summary) {
    const auto precision = out.precision(17);
    out << "# quantiles: " << PosteriorSummary::quantile_method << "; draws=" << summary.draws << '\n';
    out << "quantity,mean,sd,q2.5,q97.5,prob_positive\n";
    for (const auto& p : summary.parameters) {
        out << p.name << ',' << p.mean << ',' << p.sd << ',' << p.q025 << ',' << p.q975 << ',' << p.prob_positive
            << '\n';
    }
    for (const auto& c : summary.contrasts) {
        out << c.name << ',' << c.mean << ',' << c.se << ",NA,NA," << c.prob_positive << '\n';
    }
    out.precision(precision);
}

void write_csv(std::ostream& out, const AucReport& report) {
    const auto precision = out.precision(17);
    out << "time,auc\n";
    for (std::size_t t = 0; t < report.per_time.size(); ++t) {
        out << t + 1 << ',';
        put(out, report.per_time[t]);
        out << '\n';
    }
    out << "all,";
    put(out, report.overall);
    out << '\n';
    out.precision(precision);
}

void write_csv(std::ostream& out, const DensityReport& report) {
    const auto precision = out.precision(17);
    out << "time,within1,within2,between,overall\n";
    for (std::size_t t = 0; t < report.overall.size(); ++t) {
        out << t + 1 << ',' << report.within1[t] << ',' << report.within2[t] << ',' << report.between[t] << ','
            << report.overall[t] << '\n';
    }
    out.precision(precision);
}

void write_csv(std::ostream& out, const LatentDistanceReport& report) {
    const auto precision = out.precision(17);
    out << "time,within1,within2,between\n";
    for (std::size_t t = 0; t < report.between.size(); ++t) {
        out << t + 1 << ',';
        put(out, report.within1[t]);
        out << ',';
        put(out, report.within2[t]);
        out << ',' << report.between[t] << '\n';
    }
    out.precision(precision);
}

}  // namespace clsna
