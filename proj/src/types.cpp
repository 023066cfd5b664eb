#include "clsna/types.hpp"

#include <algorithm>

namespace clsna {

GroupLabels::GroupLabels(std::vector<int> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != 1 && labels_[i] != 2) {
            throw InvalidInput("group label of node " + std::to_string(i) + " must be 1 or 2, got " +
                               std::to_string(labels_[i]));
        }
    }
}

std::size_t GroupLabels::count(int group) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), group));
}

GroupLabels GroupLabels::balanced(std::size_t n) {
    std::vector<int> labels(n, 2);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    return GroupLabels(std::move(labels));
}

void AdjacencySeries::validate_slice(const Adjacency& a) {
    if (a.rows() != a.cols()) throw InvalidInput("adjacency matrix must be square");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0) throw InvalidInput("adjacency matrix has a self loop at node " + std::to_string(i));
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
            if (a(i, j) > 1) throw InvalidInput("adjacency entries must be 0 or 1");
            if (a(i, j) != a(j, i)) throw InvalidInput("adjacency matrix must be symmetric");
        }
    }
}

AdjacencySeries::AdjacencySeries(std::vector<Adjacency> slices) : slices_(std::move(slices)) {
    if (slices_.empty()) throw InvalidInput("adjacency series needs at least one time step");
    node_count_ = static_cast<std::size_t>(slices_.front().rows());
    if (node_count_ < 2) throw InvalidInput("adjacency series needs at least two nodes");
    for (const auto& a : slices_) {
        if (static_cast<std::size_t>(a.rows()) != node_count_) {
            throw InvalidInput("all adjacency matrices must share the node count");
        }
        validate_slice(a);
    }
}

AdjacencySeries AdjacencySeries::subseries(std::size_t first, std::size_t last) const {
    if (first >= last || last > slices_.size()) throw InvalidInput("subseries range out of bounds");
    return AdjacencySeries(std::vector<Adjacency>(slices_.begin() + static_cast<std::ptrdiff_t>(first),
                                                  slices_.begin() + static_cast<std::ptrdiff_t>(last)));
}

bool AdjacencySeries::operator==(const AdjacencySeries& other) const {
    if (horizon() != other.horizon() || node_count_ != other.node_count_) return false;
    for (std::size_t t = 0; t < horizon(); ++t) {
        if (slices_[t] != other.slices_[t]) return false;
    }
    return true;
}

}  // namespace clsna
