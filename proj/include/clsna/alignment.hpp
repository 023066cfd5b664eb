#pragma once

#include "clsna/types.hpp"

#include <Eigen/SVD>

namespace clsna {

/// Z_1 .. Z_T stacked vertically into an (N*T) x p matrix.
template <typename Scalar>
LatentPositions<Scalar> stack(const LatentTrajectory<Scalar>& trajectory) {
    if (trajectory.empty()) throw InvalidInput("stack: empty trajectory");
    const Eigen::Index n = trajectory.front().rows();
    const Eigen::Index p = trajectory.front().cols();
    LatentPositions<Scalar> stacked(n * static_cast<Eigen::Index>(trajectory.size()), p);
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        if (trajectory[t].rows() != n || trajectory[t].cols() != p) throw InvalidInput("stack: ragged trajectory");
        stacked.middleRows(static_cast<Eigen::Index>(t) * n, n) = trajectory[t];
    }
    return stacked;
}

template <typename Scalar, typename Derived>
LatentTrajectory<Scalar> unstack(const Eigen::MatrixBase<Derived>& stacked, std::size_t horizon) {
    if (horizon == 0 || stacked.rows() % static_cast<Eigen::Index>(horizon) != 0) {
        throw InvalidInput("unstack: row count is not a multiple of the horizon");
    }
    const Eigen::Index n = stacked.rows() / static_cast<Eigen::Index>(horizon);
    LatentTrajectory<Scalar> out(horizon);
    for (std::size_t t = 0; t < horizon; ++t) out[t] = stacked.middleRows(static_cast<Eigen::Index>(t) * n, n);
    return out;
}

/// Subtract the column means.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> center(
    const Eigen::MatrixBase<Derived>& config) {
    if (config.rows() == 0) throw InvalidInput("center: empty configuration");
    return config.rowwise() - config.colwise().mean();
}

/// Orthogonal R minimising ||reference - sample R||_F, from the SVD of
/// sample^T reference. Reflections are allowed.
template <typename DerivedS, typename DerivedR>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic> procrustes_rotation(
    const Eigen::MatrixBase<DerivedS>& sample, const Eigen::MatrixBase<DerivedR>& reference) {
    using Matrix = Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (sample.rows() != reference.rows() || sample.cols() != reference.cols()) {
        throw InvalidInput("procrustes: sample and reference shapes differ");
    }
    const Matrix cross = sample.transpose() * reference;
    Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// Rotate/reflect a centred sample onto a centred reference.
template <typename DerivedS, typename DerivedR>
Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic> procrustes_align(
    const Eigen::MatrixBase<DerivedS>& sample, const Eigen::MatrixBase<DerivedR>& reference) {
    return sample * procrustes_rotation(sample, reference);
}

/// Trace objective tr((reference - sample)^T (reference - sample)).
template <typename DerivedS, typename DerivedR>
typename DerivedS::Scalar procrustes_objective(const Eigen::MatrixBase<DerivedS>& sample,
                                               const Eigen::MatrixBase<DerivedR>& reference) {
    return (reference - sample).squaredNorm();
}

/// Centre the stacked trajectory and align it to `reference` (already centred).
template <typename Scalar, typename Derived>
LatentTrajectory<Scalar> align_trajectory(const LatentTrajectory<Scalar>& trajectory,
                                          const Eigen::MatrixBase<Derived>& reference) {
    const LatentPositions<Scalar> centred = center(stack(trajectory));
    return unstack<Scalar>(procrustes_align(centred, reference), trajectory.size());
}

}  // namespace clsna
