#pragma once

// Network construction from interaction counts, and the text formats.
//
// Adjacency file:
//   clsna-adj v1 N=<n> T=<t>
//   node <index> <external-id> <group>
//   edge <t> <i> <j>
// Counts file:
//   clsna-counts v1 N=<n> T=<t>
//   node <index> <external-id> <group>
//   count <t> <i> <j> <value>
// Times are 1-based, node indices 0-based, and '#' starts a comment.

#include "clsna/types.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace clsna {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct NodeRegistry {
    std::vector<std::string> ids;  // external id per index
    GroupLabels labels;
};

/// Symmetric, zero-diagonal, nonnegative count matrices, one per time.
class InteractionCounts {
public:
    InteractionCounts() = default;
    InteractionCounts(std::vector<CountMatrix> counts, NodeRegistry registry);

    std::size_t node_count() const noexcept { return registry_.ids.size(); }
    std::size_t horizon() const noexcept { return counts_.size(); }
    const CountMatrix& operator[](std::size_t t) const { return counts_[t]; }
    const std::vector<CountMatrix>& slices() const noexcept { return counts_; }
    const NodeRegistry& registry() const noexcept { return registry_; }

private:
    std::vector<CountMatrix> counts_;
    NodeRegistry registry_;
};

struct ThresholdPolicy {
    enum class Kind { static_threshold, dynamic_mean };
    Kind kind = Kind::dynamic_mean;
    double theta = 0.0;  // static threshold

    static ThresholdPolicy fixed(double theta);
    static ThresholdPolicy dynamic();
    void validate() const;
};

struct BinarizedSeries {
    AdjacencySeries networks;
    std::vector<double> thresholds;  // per time
};

/// An edge wherever count > threshold. The dynamic threshold at time t is the
/// mean count over all unordered pairs, zero-count pairs included.
BinarizedSeries binarize(const InteractionCounts& counts, const ThresholdPolicy& policy);

/// Keeps nodes for which `active(node, t)` holds at every time (t 0-based).
/// Throws InvalidInput when either group retains fewer than two nodes.
InteractionCounts restrict_to_persistent_nodes(const InteractionCounts& counts,
                                               const std::function<bool(std::size_t, std::size_t)>& active);

/// Activity as "any interaction at time t".
bool has_interaction(const InteractionCounts& counts, std::size_t node, std::size_t t);

NodeRegistry default_registry(const GroupLabels& labels);

void write_adjacency(std::ostream& out, const AdjacencySeries& y, const NodeRegistry& registry,
                     const std::vector<std::string>& comments = {});
struct AdjacencyFile {
    AdjacencySeries networks;
    NodeRegistry registry;
};
AdjacencyFile read_adjacency(std::istream& in);

void write_counts(std::ostream& out, const InteractionCounts& counts);
InteractionCounts read_counts(std::istream& in);

AdjacencyFile read_adjacency_file(const std::string& path);
void write_adjacency_file(const std::string& path, const AdjacencySeries& y, const NodeRegistry& registry,
                          const std::vector<std::string>& comments = {});
InteractionCounts read_counts_file(const std::string& path);
void write_counts_file(const std::string& path, const InteractionCounts& counts);

/// Latent trajectory as CSV: time,node,group,z1..zp.
void write_latent_csv(std::ostream& out, const LatentTrajectory<double>& latent, const GroupLabels& labels);

}  // namespace clsna
