#pragma once

// Latent-position initialisation: classical MDS of graph shortest-path
// distances for the first slice, then a stress-based refinement per later
// slice that starts from the previous slice's embedding.

#include "clsna/types.hpp"

#include <Eigen/Eigenvalues>

#include <deque>
#include <limits>

namespace clsna {

/// Hop distances by breadth-first search. Unreachable pairs get one more
/// than the largest finite distance in the graph.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> shortest_path_distances(const Adjacency& y) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = y.rows();
    constexpr int unreachable = -1;
    Eigen::MatrixXi hops = Eigen::MatrixXi::Constant(n, n, unreachable);
    int longest = 0;
    std::deque<Eigen::Index> queue;
    for (Eigen::Index source = 0; source < n; ++source) {
        hops(source, source) = 0;
        queue.assign(1, source);
        while (!queue.empty()) {
            const Eigen::Index u = queue.front();
            queue.pop_front();
            for (Eigen::Index v = 0; v < n; ++v) {
                if (y(u, v) == 0 || hops(source, v) != unreachable) continue;
                hops(source, v) = hops(source, u) + 1;
                longest = std::max(longest, hops(source, v));
                queue.push_back(v);
            }
        }
    }
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            d(i, j) = hops(i, j) == unreachable ? Scalar(longest + 1) : Scalar(hops(i, j));
    return d;
}

/// Classical (Torgerson) scaling: top-p eigenpairs of -J D^2 J / 2.
/// Negative eigenvalues are clipped at zero.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> classical_mds(
    const Eigen::MatrixBase<Derived>& distances, int dimension) {
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = distances.rows();
    if (distances.cols() != n) throw InvalidInput("classical_mds: distance matrix must be square");
    if (dimension < 1 || dimension > n) throw InvalidInput("classical_mds: dimension out of range");
    const Matrix squared = distances.array().square().matrix();
    const Matrix centring = Matrix::Identity(n, n).array() - Scalar(1) / Scalar(n);
    const Matrix gram = Scalar(-0.5) * centring * squared * centring;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    // Eigenvalues come back in increasing order.
    const auto values = solver.eigenvalues().tail(dimension).reverse().cwiseMax(Scalar(0)).cwiseSqrt();
    const Matrix vectors = solver.eigenvectors().rightCols(dimension).rowwise().reverse();
    return vectors * values.asDiagonal();
}

template <typename Scalar>
struct GmdsOptions {
    /// Weight of the penalty on moving away from the previous embedding.
    Scalar movement_weight = Scalar(1);
    int max_steps = 50;
    Scalar initial_step = Scalar(0.01);
};

/// sum_{i<j} (||z_i - z_j|| - D_ij)^2 + w * sum_i ||z_i - anchor_i||^2
template <typename DerivedZ, typename DerivedD, typename DerivedA>
typename DerivedZ::Scalar gmds_objective(const Eigen::MatrixBase<DerivedZ>& z, const Eigen::MatrixBase<DerivedD>& target,
                                         const Eigen::MatrixBase<DerivedA>& anchor,
                                         typename DerivedZ::Scalar movement_weight) {
    using Scalar = typename DerivedZ::Scalar;
    Scalar stress(0);
    for (Eigen::Index j = 1; j < z.rows(); ++j)
        for (Eigen::Index i = 0; i < j; ++i) {
            const Scalar r = (z.row(i) - z.row(j)).norm() - target(i, j);
            stress += r * r;
        }
    return stress + movement_weight * (z - anchor).squaredNorm();
}

/// Gradient descent with backtracking on gmds_objective starting from
/// `anchor`. The objective never increases from one step to the next.
template <typename DerivedD, typename DerivedA>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> gmds_refine(
    const Eigen::MatrixBase<DerivedD>& target, const Eigen::MatrixBase<DerivedA>& anchor,
    const GmdsOptions<typename DerivedA::Scalar>& options = {}) {
    using Scalar = typename DerivedA::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = anchor.rows();
    Matrix z = anchor;
    Scalar value = gmds_objective(z, target, anchor, options.movement_weight);
    Scalar step = options.initial_step;
    Matrix grad(n, anchor.cols());
    for (int it = 0; it < options.max_steps; ++it) {
        grad = Scalar(2) * options.movement_weight * (z - anchor);
        for (Eigen::Index j = 1; j < n; ++j)
            for (Eigen::Index i = 0; i < j; ++i) {
                const auto diff = (z.row(i) - z.row(j)).eval();
                const Scalar d = diff.norm();
                if (d <= std::numeric_limits<Scalar>::min()) continue;
                const auto g = (Scalar(2) * (d - target(i, j)) / d * diff).eval();
                grad.row(i) += g;
                grad.row(j) -= g;
            }
        bool improved = false;
        for (int halving = 0; halving < 30; ++halving) {
            const Matrix candidate = z - step * grad;
            const Scalar candidate_value = gmds_objective(candidate, target, anchor, options.movement_weight);
            if (candidate_value < value) {
                z = candidate;
                value = candidate_value;
                step *= Scalar(1.5);
                improved = true;
                break;
            }
            step *= Scalar(0.5);
        }
        if (!improved) break;
    }
    return z;
}

/// Initial latent trajectory for a series: classical MDS of the first slice's
/// shortest paths (or refinement from `start` when given), then refinement of
/// each previous slice toward the next slice's shortest paths.
template <typename Scalar = double>
LatentTrajectory<Scalar> gmds_initialize(const AdjacencySeries& y, int dimension,
                                         const LatentPositions<Scalar>* start = nullptr,
                                         const GmdsOptions<Scalar>& options = {}) {
    if (dimension < 1) throw InvalidInput("gmds_initialize: dimension must be positive");
    LatentTrajectory<Scalar> z(y.horizon());
    for (std::size_t t = 0; t < y.horizon(); ++t) {
        const auto target = shortest_path_distances<Scalar>(y[t]);
        if (t == 0 && start == nullptr) {
            z[0] = classical_mds(target, dimension);
        } else {
            const LatentPositions<Scalar>& previous = t == 0 ? *start : z[t - 1];
            z[t] = gmds_refine(target, previous, options);
        }
    }
    return z;
}

}  // namespace clsna
