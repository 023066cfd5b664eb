#include "cli.hpp"
#include "clsna/evaluation.hpp"
#include "clsna/model.hpp"
#include "clsna/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace clsna;

namespace {

SimConfig base_config(std::uint64_t seed = 1) {
    SimConfig c;
    c.node_count = 12;
    c.horizon = 6;
    c.dimension = 2;
    c.labels = GroupLabels::balanced(12);
    c.params = Params{1.0, 2.0, 0.3, 0.2, 0.5, 1.0, 1.0};
    c.seed = seed;
    return c;
}

SimConfig from_preset(const std::string& name, std::uint64_t seed) {
    const cli::SimulateOptions o = cli::preset(name);
    SimConfig c;
    c.node_count = o.nodes;
    c.horizon = o.horizon;
    c.dimension = o.dimension;
    c.params = o.params;
    c.labels = GroupLabels::balanced(o.nodes);
    c.seed = seed;
    return c;
}

double mean_pairwise(const Eigen::MatrixXd& z) {
    double s = 0.0;
    int c = 0;
    for (int i = 0; i < z.rows(); ++i)
        for (int j = i + 1; j < z.rows(); ++j, ++c) s += oracle::distance(z, i, j);
    return s / c;
}

}  // namespace

TEST_CASE("seed determinism and output invariants") {
    const SimResult a = simulate(base_config(4));
    const SimResult b = simulate(base_config(4));
    const SimResult c = simulate(base_config(5));
    CHECK(a.networks == b.networks);
    for (std::size_t t = 0; t < a.latent.size(); ++t) CHECK(a.latent[t] == b.latent[t]);
    CHECK_FALSE(a.latent[0] == c.latent[0]);
    CHECK(a.networks.horizon() == 6);
    CHECK(a.networks.node_count() == 12);
    for (const auto& slice : a.networks.slices()) CHECK_NOTHROW(AdjacencySeries::validate_slice(slice));
    CHECK(a.latent.size() == 6);
    CHECK(a.latent[0].cols() == 2);
}

TEST_CASE("no edges means pure random walks") {
    SimConfig c = base_config(9);
    c.node_count = 40;
    c.labels = GroupLabels::balanced(40);
    c.horizon = 30;
    c.params.alpha = -50;
    const SimResult r = simulate(c);
    for (const auto& slice : r.networks.slices()) CHECK(slice.cast<int>().sum() == 0);
    double ss = 0.0, sum = 0.0;
    int count = 0;
    for (std::size_t t = 1; t < r.latent.size(); ++t) {
        const Eigen::MatrixXd step = r.latent[t] - r.latent[t - 1];
        sum += step.sum();
        ss += step.squaredNorm();
        count += static_cast<int>(step.size());
    }
    const double mean = sum / count;
    const double var = ss / count - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(count));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / count));
}

TEST_CASE("edge frequency under frozen positions matches the link") {
    // Vanishing variances freeze every position at the origin.
    constexpr int draws = 100000;
    Params p{0.3, 1.2, 0.0, 0.0, 0.0, 1e-30, 1e-30};
    int first = 0, after_edge = 0, after_edge_n = 0, after_gap = 0, after_gap_n = 0;
    for (int s = 0; s < draws; ++s) {
        SimConfig c;
        c.node_count = 2;
        c.horizon = 2;
        c.dimension = 1;
        c.labels = GroupLabels({1, 2});
        c.params = p;
        c.seed = static_cast<std::uint64_t>(s) + 1;
        const SimResult r = simulate(c);
        const int y1 = r.networks[0](0, 1), y2 = r.networks[1](0, 1);
        first += y1;
        if (y1) {
            ++after_edge_n;
            after_edge += y2;
        } else {
            ++after_gap_n;
            after_gap += y2;
        }
    }
    auto within = [](int hits, int n, double prob) {
        const double se = std::sqrt(prob * (1 - prob) / n);
        return std::abs(static_cast<double>(hits) / n - prob) < 3 * se;
    };
    CHECK(within(first, draws, oracle::logistic(0.3)));
    CHECK(within(after_edge, after_edge_n, oracle::logistic(0.3 + 1.2)));
    CHECK(within(after_gap, after_gap_n, oracle::logistic(0.3)));
}

TEST_CASE("flocking preset contracts in 18 of 20 runs") {
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SimResult r = simulate(from_preset("flocking", seed));
        const double n = static_cast<double>(r.latent.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t t = 0; t < r.latent.size(); ++t) {
            const double x = static_cast<double>(t), y = mean_pairwise(r.latent[t]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        pass += slope <= 0.0;
    }
    CHECK(pass >= 18);
}

TEST_CASE("polarization preset separates the groups in 18 of 20 runs") {
    int pass = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SimConfig c = from_preset("polarization", seed);
        const SimResult r = simulate(c);
        auto between = [&](const Eigen::MatrixXd& z) {
            double s = 0.0;
            int count = 0;
            for (int i = 0; i < z.rows(); ++i)
                for (int j = 0; j < z.rows(); ++j)
                    if (c.labels[i] == 1 && c.labels[j] == 2) {
                        s += oracle::distance(z, i, j);
                        ++count;
                    }
            return s / count;
        };
        pass += between(r.latent.back()) > between(r.latent.front());
    }
    CHECK(pass >= 18);
}

TEST_CASE("change-point schedules") {
    SimConfig plain = base_config(3);
    const SimResult reference = simulate(plain);

    SUBCASE("single entry equals plain simulation") {
        SimConfig c = plain;
        c.schedule = {{1, plain.params}};
        const SimResult r = simulate_changepoint(c);
        CHECK(r.networks == reference.networks);
        for (std::size_t t = 0; t < r.latent.size(); ++t) CHECK(r.latent[t] == reference.latent[t]);
        CHECK(r.change_times.empty());
    }
    SUBCASE("identical periods equal plain simulation") {
        SimConfig c = plain;
        c.schedule = {{1, plain.params}, {4, plain.params}};
        const SimResult r = simulate_changepoint(c);
        CHECK(r.networks == reference.networks);
        for (std::size_t t = 0; t < r.latent.size(); ++t) CHECK(r.latent[t] == reference.latent[t]);
        CHECK(r.change_times == std::vector<std::size_t>{4});
    }
    SUBCASE("the design with a switch at time six") {
        const cli::SimulateOptions o = cli::preset("changepoint");
        REQUIRE(o.schedule.size() == 2);
        CHECK(o.nodes == 100);
        CHECK(o.horizon == 10);
        CHECK(o.schedule[1].start_time == 6);
        CHECK(o.schedule[0].params.gammab == -0.2);
        CHECK(o.schedule[1].params.gamma1w == 0.8);
        SimConfig c;
        c.node_count = o.nodes;
        c.horizon = o.horizon;
        c.labels = GroupLabels::balanced(o.nodes);
        c.params = o.params;
        c.schedule = o.schedule;
        const SimResult r = simulate_changepoint(c);
        CHECK(r.change_times == std::vector<std::size_t>{6});
        CHECK(r.networks.horizon() == 10);
        // The first period is generated by the first entry alone.
        SimConfig first = c;
        first.schedule.clear();
        const SimResult early = simulate(first);
        for (std::size_t t = 0; t < 5; ++t) CHECK(r.networks[t] == early.networks[t]);
        CHECK_FALSE(r.latent[6] == early.latent[6]);
        // simulate follows the schedule too.
        const SimResult same = simulate(c);
        CHECK(same.networks == r.networks);
        CHECK(same.change_times == r.change_times);
    }
    SUBCASE("invalid schedules") {
        SimConfig c = plain;
        c.schedule = {{2, plain.params}};
        CHECK_THROWS_AS(simulate_changepoint(c), InvalidInput);
        c.schedule = {{1, plain.params}, {4, plain.params}, {4, plain.params}};
        CHECK_THROWS_AS(simulate_changepoint(c), InvalidInput);
        c.schedule = {{1, plain.params}, {7, plain.params}};
        CHECK_THROWS_AS(simulate_changepoint(c), InvalidInput);
        c.schedule.clear();
        CHECK_THROWS_AS(simulate_changepoint(c), InvalidInput);
    }
}

TEST_CASE("config validation and divergence warning") {
    SimConfig c = base_config();
    c.node_count = 0;
    CHECK_THROWS_AS(simulate(c), InvalidInput);
    c = base_config();
    c.labels = GroupLabels::balanced(5);
    CHECK_THROWS_AS(simulate(c), InvalidInput);
    c = base_config();
    c.params.tau2 = 0;
    CHECK_THROWS_AS(simulate(c), InvalidInput);

    c = base_config();
    c.divergence_bound = 3.0;
    const SimResult r = simulate(c);
    CHECK_FALSE(r.warnings.empty());
    CHECK(simulate(base_config()).warnings.empty());
}
