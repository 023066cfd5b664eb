#include "clsna/alignment.hpp"
#include "clsna/evaluation.hpp"
#include "clsna/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace clsna;

namespace {

Eigen::Matrix2d rotation(double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

}  // namespace

TEST_CASE("centering") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = oracle::random_positions(30, 3, rng, 5.0);
    const Eigen::MatrixXd c = center(x);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(c.col(k).sum() / 30.0) < 1e-12);
    CHECK(center(c).isApprox(c, 1e-14));
    Eigen::MatrixXd constant(4, 2);
    constant.rowwise() = Eigen::RowVector2d(3.0, -7.0);
    CHECK(center(constant).isZero(0));
    CHECK_THROWS_AS(center(Eigen::MatrixXd(0, 2)), InvalidInput);
}

TEST_CASE("Procrustes alignment") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd ref = center(oracle::random_positions(20, 2, rng));

    SUBCASE("identity") {
        CHECK((procrustes_rotation(ref, ref) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
        CHECK(procrustes_objective(procrustes_align(ref, ref), ref) < 1e-24);
    }
    SUBCASE("known rotation is undone") {
        const Eigen::MatrixXd sample = ref * rotation(0.7);
        const Eigen::MatrixXd back = procrustes_align(sample, ref);
        CHECK((back - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("reflections are allowed") {
        Eigen::Matrix2d flip;
        flip << 1, 0, 0, -1;
        const Eigen::MatrixXd back = procrustes_align(ref * flip * rotation(2.0), ref);
        CHECK((back - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("objective never increases, distances are kept, aligning twice is a no-op") {
        for (int rep = 0; rep < 20; ++rep) {
            const Eigen::MatrixXd sample = center(oracle::random_positions(20, 2, rng));
            const Eigen::MatrixXd aligned = procrustes_align(sample, ref);
            CHECK(procrustes_objective(aligned, ref) <= procrustes_objective(sample, ref) + 1e-12);
            for (int i = 0; i < 20; ++i)
                for (int j = i + 1; j < 20; ++j)
                    CHECK(std::abs(oracle::distance(aligned, i, j) - oracle::distance(sample, i, j)) < 1e-10);
            CHECK((procrustes_align(aligned, ref) - aligned).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("three-dimensional orthogonal recovery") {
        const Eigen::MatrixXd ref3 = center(oracle::random_positions(15, 3, rng));
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::random_positions(3, 3, rng)).householderQ();
        CHECK((procrustes_align(Eigen::MatrixXd(ref3 * q), ref3) - ref3).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(procrustes_align(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(4, 2)), InvalidInput);
    }
}

TEST_CASE("trajectory alignment preserves the model") {
    std::mt19937_64 rng(3);
    const int n = 8;
    const std::size_t horizon = 3;
    std::vector<Adjacency> slices;
    LatentTrajectory<double> z;
    for (std::size_t t = 0; t < horizon; ++t) {
        slices.push_back(oracle::random_graph(n, 0.4, rng));
        z.push_back(oracle::random_positions(n, 2, rng));
    }
    const AdjacencySeries y(slices);
    const Params p{0.5, 1.5, 0.3, 0.2, -0.4, 1.0, 1.0};
    const Eigen::MatrixXd ref = center(oracle::random_positions(n * 3, 2, rng));
    const LatentTrajectory<double> aligned = align_trajectory(z, ref);

    CHECK(std::abs(observation_loglik(p, y, aligned) - observation_loglik(p, y, z)) < 1e-10);
    const GroupLabels labels = GroupLabels::balanced(n);
    const LatentDistanceReport before = latent_distance_report(z, labels), after = latent_distance_report(aligned, labels);
    for (std::size_t t = 0; t < horizon; ++t) {
        CHECK(std::abs(*before.within1[t] - *after.within1[t]) < 1e-10);
        CHECK(std::abs(before.between[t] - after.between[t]) < 1e-10);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                CHECK(std::abs(oracle::distance(aligned[t], i, j) - oracle::distance(z[t], i, j)) < 1e-10);
    }
    // Node-time pairs across slices keep their distances too.
    const Eigen::MatrixXd a = stack(aligned), b = stack(z);
    for (int i = 0; i < a.rows(); i += 5)
        for (int j = i + 1; j < a.rows(); j += 3) CHECK(std::abs(oracle::distance(a, i, j) - oracle::distance(b, i, j)) < 1e-10);

    const auto round = unstack<double>(stack(z), horizon);
    for (std::size_t t = 0; t < horizon; ++t) CHECK(round[t] == z[t]);
    CHECK_THROWS_AS(unstack<double>(Eigen::MatrixXd::Zero(7, 2), 3), InvalidInput);
}
