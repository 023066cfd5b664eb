#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace clsna {

/// Raised when an argument violates a documented precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a caller combines arguments in a way the operation forbids.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised by the samplers when the chain state stops being finite.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the text readers; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

template <typename Scalar>
using LatentPositions = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One N x p position matrix per time step, index 0 is the first time.
template <typename Scalar>
using LatentTrajectory = std::vector<LatentPositions<Scalar>>;

using Adjacency = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Node memberships in the two groups. Entries are 1 or 2.
class GroupLabels {
public:
    GroupLabels() = default;
    explicit GroupLabels(std::vector<int> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    int operator[](std::size_t i) const { return labels_[i]; }
    /// 0 for group one, 1 for group two.
    int index(std::size_t i) const { return labels_[i] - 1; }
    std::size_t count(int group) const;
    bool both_groups_present() const { return count(1) > 0 && count(2) > 0; }
    const std::vector<int>& values() const noexcept { return labels_; }

    /// First half of the nodes in group one, remainder in group two.
    static GroupLabels balanced(std::size_t n);

    bool operator==(const GroupLabels&) const = default;

private:
    std::vector<int> labels_;
};

/// Symmetric binary adjacency matrices with zero diagonal, one per time.
class AdjacencySeries {
public:
    AdjacencySeries() = default;
    explicit AdjacencySeries(std::vector<Adjacency> slices);

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t horizon() const noexcept { return slices_.size(); }
    const Adjacency& operator[](std::size_t t) const { return slices_[t]; }
    const std::vector<Adjacency>& slices() const noexcept { return slices_; }

    /// Slices [first, last) as a new series.
    AdjacencySeries subseries(std::size_t first, std::size_t last) const;

    bool operator==(const AdjacencySeries& other) const;

    /// Throws InvalidInput unless `a` is square, binary, symmetric, zero-diagonal.
    static void validate_slice(const Adjacency& a);

private:
    std::vector<Adjacency> slices_;
    std::size_t node_count_ = 0;
};

template <typename Scalar>
struct ModelParams {
    Scalar alpha = Scalar(0);
    Scalar delta = Scalar(0);
    Scalar gamma1w = Scalar(0);
    Scalar gamma2w = Scalar(0);
    Scalar gammab = Scalar(0);
    Scalar tau2 = Scalar(1);
    // Pinned to one for every fit; simulation may use other values.
    Scalar sigma2 = Scalar(1);

    Scalar gamma_within(int group) const { return group == 1 ? gamma1w : gamma2w; }

    bool operator==(const ModelParams&) const = default;
};

using Params = ModelParams<double>;

}  // namespace clsna
