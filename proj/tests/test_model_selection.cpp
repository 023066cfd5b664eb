#include "clsna/model_selection.hpp"
#include "clsna/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace clsna;

namespace {

SimResult small_design(std::size_t horizon, std::uint64_t seed) {
    SimConfig sc;
    sc.node_count = 12;
    sc.horizon = horizon;
    sc.labels = GroupLabels::balanced(12);
    sc.params = Params{0.5, 2.0, 0.5, 0.3, -0.3, 1.0, 1.0};
    sc.seed = seed;
    return simulate(sc);
}

McmcConfig tiny_config(std::uint64_t seed = 5) {
    McmcConfig c;
    c.n_iterations = 300;
    c.burn_in = 100;
    c.seed = seed;
    return c;
}

double oracle_deviance(const Params& p, const AdjacencySeries& y, const LatentTrajectory<double>& z) {
    std::vector<Adjacency> slices;
    for (std::size_t t = 0; t < y.horizon(); ++t) slices.push_back(y[t]);
    return -2.0 * oracle::loglik(p, slices, z);
}

}  // namespace

TEST_CASE("DIC of a degenerate chain has no effective parameters") {
    std::mt19937_64 rng(2);
    const std::vector<Adjacency> slices{oracle::random_graph(6, 0.5, rng), oracle::random_graph(6, 0.5, rng)};
    const AdjacencySeries y(slices);
    const LatentTrajectory<double> z{oracle::random_positions(6, 2, rng), oracle::random_positions(6, 2, rng)};
    const Params p{0.3, 1.2, 0.2, 0.1, -0.2, 1.0, 1.0};

    PosteriorSamples s;
    s.params = {p, p, p};
    s.latent_mean = z;
    s.deviance.assign(3, oracle_deviance(p, y, z));
    const DicResult d = compute_dic(s, y, GroupLabels::balanced(6));
    CHECK(std::abs(d.effective_parameters) < 1e-9);
    CHECK(d.dic == doctest::Approx(s.deviance[0]).epsilon(1e-12));

    s.params.resize(1);
    s.deviance.resize(1);
    CHECK_THROWS_AS(compute_dic(s, y, GroupLabels::balanced(6)), InvalidInput);
}

TEST_CASE("DIC from a fitted chain matches an oracle recomputation") {
    const SimResult sim = small_design(4, 11);
    McmcConfig c = tiny_config();
    c.store_latent_draws = true;
    const GroupLabels labels = GroupLabels::balanced(12);
    const PosteriorSamples fit = run_mcmc(sim.networks, labels, PriorSpec{}, c);
    REQUIRE(fit.size() == 200);
    REQUIRE(fit.latent_draws.size() == 200);

    // Stored draws are aligned, which leaves every distance and so the deviance unchanged.
    std::vector<double> trace;
    for (std::size_t k = 0; k < fit.size(); ++k) {
        trace.push_back(oracle_deviance(fit.params[k], sim.networks, fit.latent_draws[k]));
        CHECK(fit.deviance[k] == doctest::Approx(trace.back()).epsilon(1e-9));
    }
    const double mean_d = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());
    LatentTrajectory<double> zbar(4, Eigen::MatrixXd::Zero(12, 2));
    Params pbar{0, 0, 0, 0, 0, 0, 1};
    for (std::size_t k = 0; k < fit.size(); ++k) {
        for (std::size_t t = 0; t < 4; ++t) zbar[t] += fit.latent_draws[k][t] / 200.0;
        pbar.alpha += fit.params[k].alpha / 200.0;
        pbar.delta += fit.params[k].delta / 200.0;
    }
    const double d_at_mean = oracle_deviance(pbar, sim.networks, zbar);
    const DicResult d = compute_dic(fit, sim.networks, labels);
    CHECK(d.mean_deviance == doctest::Approx(mean_d).epsilon(1e-10));
    CHECK(d.deviance_at_mean == doctest::Approx(d_at_mean).epsilon(1e-9));
    CHECK(d.effective_parameters == doctest::Approx(mean_d - d_at_mean).epsilon(1e-8));
    CHECK(d.dic == doctest::Approx(2 * mean_d - d_at_mean).epsilon(1e-10));
    CHECK(d.effective_parameters > 0.0);
}

TEST_CASE("change-time validation") {
    CHECK_NOTHROW(validate_change_times({}, 10));
    CHECK_NOTHROW(validate_change_times({3}, 10));
    CHECK_NOTHROW(validate_change_times({3, 5, 9}, 10));
    CHECK_THROWS_AS(validate_change_times({1}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({2}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({10}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({11}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({5, 5}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({6, 4}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({4, 5}, 10), InvalidInput);
    CHECK_THROWS_AS(validate_change_times({}, 1), InvalidInput);
}

TEST_CASE("change-point fits") {
    const SimResult sim = small_design(8, 21);
    const GroupLabels labels = GroupLabels::balanced(12);
    const McmcConfig c = tiny_config();

    SUBCASE("no change times reproduce a plain fit") {
        const ChangePointFit cp = fit_changepoint(sim.networks, labels, PriorSpec{}, c, {});
        const PosteriorSamples plain = run_mcmc(sim.networks, labels, PriorSpec{}, c);
        REQUIRE(cp.periods.size() == 1);
        CHECK(cp.periods[0].samples.params == plain.params);
        CHECK(cp.periods[0].samples.deviance == plain.deviance);
        CHECK(cp.dic == compute_dic(plain, sim.networks, labels).dic);
    }
    SUBCASE("periods partition the horizon") {
        const ChangePointFit cp = fit_changepoint(sim.networks, labels, PriorSpec{}, c, {3, 6});
        REQUIRE(cp.periods.size() == 3);
        const std::size_t first[3] = {1, 3, 6}, last[3] = {2, 5, 8};
        double total = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const PeriodFit& p = cp.periods[k];
            CHECK(p.first_time == first[k]);
            CHECK(p.last_time == last[k]);
            CHECK(p.samples.latent_mean.size() == last[k] - first[k] + 1);
            const AdjacencySeries part = sim.networks.subseries(first[k] - 1, last[k]);
            CHECK(p.dic.dic == compute_dic(p.samples, part, labels).dic);
            total += p.dic.dic;
        }
        CHECK(cp.dic == doctest::Approx(total).epsilon(1e-15));

        // Later periods start from the previous period's terminal mean and last network.
        for (std::size_t k = 1; k < 3; ++k) {
            const PeriodFit& p = cp.periods[k];
            REQUIRE(p.samples.anchor.has_value());
            CHECK(p.samples.anchor->positions == cp.periods[k - 1].samples.latent_mean.back());
            CHECK(p.samples.anchor->adjacency == sim.networks[p.first_time - 2]);
            CHECK_FALSE(p.samples.aligned);
        }
        CHECK_FALSE(cp.periods[0].samples.anchor.has_value());

        // tau2 comes from the first period.
        const double tau2 = cp.periods[0].samples.posterior_mean().tau2;
        for (std::size_t k = 1; k < 3; ++k)
            for (const Params& q : cp.periods[k].samples.params) CHECK(q.tau2 == tau2);

        // Later periods do not reuse the first period's seed.
        CHECK(cp.periods[1].samples.params.front().alpha != cp.periods[0].samples.params.front().alpha);
    }
    SUBCASE("invalid change times are rejected before fitting") {
        CHECK_THROWS_AS(fit_changepoint(sim.networks, labels, PriorSpec{}, c, {8}), InvalidInput);
    }
}

TEST_CASE("DIC argmin and table") {
    CHECK(argmin_dic({{{4}, 10.0}, {{5}, 9.0}, {{6}, 9.5}}) == 1);
    CHECK(argmin_dic({{{4}, 9.0}, {{}, 9.0}}) == 1);
    CHECK(argmin_dic({{{6}, 9.0}, {{4}, 9.0}, {{3, 6}, 9.0}}) == 1);
    CHECK(argmin_dic({{{}, 1.0}}) == 0);
    CHECK_THROWS_AS(argmin_dic({}), InvalidInput);

    std::ostringstream out;
    write_csv(out, std::vector<DicRow>{{{}, 1.5}, {{3, 7}, 2.25}});
    CHECK(out.str() == "change_times,dic\nnone,1.5\n3;7,2.25\n");
}

TEST_CASE("change-point selection") {
    const SimResult sim = small_design(8, 31);
    const GroupLabels labels = GroupLabels::balanced(12);
    const std::vector<std::vector<std::size_t>> candidates{{3}, {4}, {5}, {}};
    const ChangePointSelection one = select_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), candidates, 1);
    const ChangePointSelection two = select_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), candidates, 3);
    REQUIRE(one.table.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(one.table[k].change_times == candidates[k]);
        CHECK(one.table[k].dic == two.table[k].dic);
        CHECK(one.table[k].dic ==
              fit_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), candidates[k]).dic);
    }
    CHECK(one.best_index == argmin_dic(one.table));
    CHECK(one.best_index == two.best_index);
    CHECK(one.best.change_times == candidates[one.best_index]);
    CHECK(one.best.dic == one.table[one.best_index].dic);

    const ChangePointSelection only = select_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), {{}}, 2);
    CHECK(only.table.size() == 1);
    CHECK(only.best.periods.size() == 1);
    CHECK_THROWS_AS(select_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), {}, 1), InvalidInput);
    CHECK_THROWS_AS(select_changepoint(sim.networks, labels, PriorSpec{}, tiny_config(), {{4}, {2}}, 1), InvalidInput);
}
