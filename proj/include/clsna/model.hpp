#pragma once

// Deterministic model math: distance similarity, neighbour attractors, the
// logit link with edge persistence, and the observation / transition
// log-densities. Everything is templated on the scalar type and accepts
// Eigen expressions.

#include "clsna/types.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace clsna {

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Euclidean distance between two positions of equal dimension.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar similarity(const Eigen::MatrixBase<DerivedA>& zi,
                                     const Eigen::MatrixBase<DerivedB>& zj) {
    if (zi.size() != zj.size()) {
        throw InvalidInput("similarity: dimension mismatch (" + std::to_string(zi.size()) + " vs " +
                           std::to_string(zj.size()) + ")");
    }
    using Scalar = typename DerivedA::Scalar;
    Scalar sum(0);
    for (Eigen::Index k = 0; k < zi.size(); ++k) {
        const Scalar d = zi.coeff(k) - zj.coeff(k);
        sum += d * d;
    }
    return std::sqrt(sum);
}

namespace detail {

template <typename Derived>
RowVector<typename Derived::Scalar> neighbour_attractor(Eigen::Index i, const Eigen::MatrixBase<Derived>& z_prev,
                                                        const Adjacency& y_prev, const GroupLabels& labels,
                                                        bool same_group) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = z_prev.rows();
    if (i < 0 || i >= n) throw InvalidInput("attractor: node index out of range");
    if (y_prev.rows() != n || static_cast<Eigen::Index>(labels.size()) != n) {
        throw InvalidInput("attractor: positions, adjacency and labels disagree on node count");
    }
    RowVector<Scalar> sum = RowVector<Scalar>::Zero(z_prev.cols());
    Eigen::Index count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || y_prev(i, j) == 0) continue;
        if ((labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) != same_group) continue;
        sum += z_prev.row(j);
        ++count;
    }
    if (count == 0) return RowVector<Scalar>::Zero(z_prev.cols());
    return sum / Scalar(count) - z_prev.row(i);
}

}  // namespace detail

/// Mean position of same-group neighbours of `i` minus the position of `i`;
/// the zero vector when `i` has no same-group neighbour.
template <typename Derived>
RowVector<typename Derived::Scalar> attractor_within(Eigen::Index i, const Eigen::MatrixBase<Derived>& z_prev,
                                                     const Adjacency& y_prev, const GroupLabels& labels) {
    return detail::neighbour_attractor(i, z_prev, y_prev, labels, true);
}

/// Same as attractor_within over the neighbours in the other group.
template <typename Derived>
RowVector<typename Derived::Scalar> attractor_between(Eigen::Index i, const Eigen::MatrixBase<Derived>& z_prev,
                                                      const Adjacency& y_prev, const GroupLabels& labels) {
    return detail::neighbour_attractor(i, z_prev, y_prev, labels, false);
}

/// Logit of the edge probability. `t` is the 0-based time index; the lagged
/// edge must be supplied exactly when t > 0.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar edge_logit(const ModelParams<Scalar>& params, std::size_t t, std::optional<int> y_prev_ij,
                  const Eigen::MatrixBase<DerivedA>& zi, const Eigen::MatrixBase<DerivedB>& zj) {
    if (t == 0 && y_prev_ij) throw ContractError("edge_logit: no lagged edge exists at the first time step");
    if (t > 0 && !y_prev_ij) throw ContractError("edge_logit: lagged edge required after the first time step");
    const Scalar persistence = y_prev_ij ? params.delta * Scalar(*y_prev_ij) : Scalar(0);
    return params.alpha + persistence - similarity(zi, zj);
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
    using std::abs;
    using std::exp;
    using std::log1p;
    return (x > Scalar(0) ? x : Scalar(0)) + log1p(exp(-abs(x)));
}

/// Bernoulli log-probability of `y` under logit `eta`.
template <typename Scalar>
Scalar edge_loglik(int y, Scalar eta) {
    return (y != 0 ? eta : Scalar(0)) - softplus(eta);
}

template <typename Scalar>
Scalar logistic(Scalar eta) {
    using std::exp;
    if (eta >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-eta));
    const Scalar e = exp(eta);
    return e / (Scalar(1) + e);
}

/// Log-likelihood of one time slice summed over unordered pairs. `lag` is the
/// previous adjacency matrix, or nullptr for the first time step.
template <typename Scalar, typename Derived>
Scalar slice_loglik(const ModelParams<Scalar>& params, const Adjacency& y, const Eigen::MatrixBase<Derived>& z,
                    const Adjacency* lag) {
    const Eigen::Index n = y.rows();
    if (z.rows() != n) throw InvalidInput("slice_loglik: positions and adjacency disagree on node count");
    Scalar total(0);
    for (Eigen::Index j = 1; j < n; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            Scalar eta = params.alpha - similarity(z.row(i), z.row(j));
            if (lag) eta += params.delta * Scalar((*lag)(i, j));
            total += edge_loglik(y(i, j), eta);
        }
    }
    return total;
}

/// Sum over times and unordered pairs of the Bernoulli log-probabilities.
/// `initial_lag`, when given, is the adjacency preceding the first slice and
/// makes the first slice use the persistence term.
template <typename Scalar>
Scalar observation_loglik(const ModelParams<Scalar>& params, const AdjacencySeries& y,
                          const LatentTrajectory<Scalar>& z, const Adjacency* initial_lag = nullptr) {
    if (z.size() != y.horizon()) throw InvalidInput("observation_loglik: trajectory length differs from horizon");
    Scalar total(0);
    for (std::size_t t = 0; t < y.horizon(); ++t) {
        const Adjacency* lag = t == 0 ? initial_lag : &y[t - 1];
        total += slice_loglik(params, y[t], z[t], lag);
    }
    return total;
}

/// Mean of the latent transition for every node: z_prev + gamma^w A^w + gamma^b A^b.
template <typename Scalar, typename Derived>
LatentPositions<Scalar> transition_mean(const ModelParams<Scalar>& params, const GroupLabels& labels,
                                        const Eigen::MatrixBase<Derived>& z_prev, const Adjacency& y_prev) {
    LatentPositions<Scalar> mean = z_prev;
    for (Eigen::Index i = 0; i < z_prev.rows(); ++i) {
        const int group = labels[static_cast<std::size_t>(i)];
        mean.row(i) += params.gamma_within(group) * attractor_within(i, z_prev, y_prev, labels) +
                       params.gammab * attractor_between(i, z_prev, y_prev, labels);
    }
    return mean;
}

/// Log-density of z_t given (z_prev, y_prev): isotropic Gaussian with
/// variance sigma2 per coordinate around transition_mean.
template <typename Scalar, typename DerivedT, typename DerivedP>
Scalar transition_logdensity(const ModelParams<Scalar>& params, const GroupLabels& labels,
                             const Eigen::MatrixBase<DerivedT>& z_t, const Eigen::MatrixBase<DerivedP>& z_prev,
                             const Adjacency& y_prev) {
    if (z_t.rows() != z_prev.rows() || z_t.cols() != z_prev.cols()) {
        throw InvalidInput("transition_logdensity: shape mismatch");
    }
    using std::log;
    const LatentPositions<Scalar> mean = transition_mean(params, labels, z_prev, y_prev);
    const Scalar count = Scalar(z_t.size());
    const Scalar quad = (z_t - mean).squaredNorm();
    return -Scalar(0.5) * count * log(Scalar(2) * std::numbers::pi_v<Scalar> * params.sigma2) -
           Scalar(0.5) * quad / params.sigma2;
}

}  // namespace clsna
