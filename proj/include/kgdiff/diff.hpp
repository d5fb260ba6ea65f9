#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgdiff/proto_graph.hpp"
#include "kgdiff/results.hpp"

namespace kgdiff {

/// Identity-based difference between two versions of a prototype graph.
/// For every kind: added ∪ shared = right ids, deleted ∪ shared = left ids,
/// and the three sets are pairwise disjoint. Sub-queries on added/deleted
/// nodes are classified together with their node.
struct GraphDiff {
    std::set<NodeId> nodes_added, nodes_deleted, nodes_shared;
    std::set<EdgeId> edges_added, edges_deleted, edges_shared;
    std::set<SubQueryId> subqueries_added, subqueries_deleted, subqueries_shared;
    std::set<SubQueryId> subqueries_changed;  // ⊆ subqueries_shared

    /// True when nothing was added, deleted or changed.
    bool is_identity() const noexcept;

    bool operator==(const GraphDiff&) const = default;
};

GraphDiff diff_graphs(const PrototypeGraph& left, const PrototypeGraph& right);

/// Identity of an instance graph across versions: its bindings restricted to
/// the prototype nodes both versions share, ordered by node id.
using InstanceKey = std::vector<std::pair<NodeId, std::string>>;

struct InstanceDiff {
    std::vector<NodeId> key_nodes;
    std::set<InstanceKey> instances_added, instances_removed, instances_shared;

    bool operator==(const InstanceDiff&) const = default;
};

/// Keys each instance graph over the shared prototype nodes (the nodes bound
/// on both sides) and partitions the key sets. When one side is empty the
/// other side's nodes are used. Throws IncomparableResultsError when both
/// sides are non-empty but share no prototype node.
InstanceDiff diff_instances(const std::vector<InstanceGraph>& left, const std::vector<InstanceGraph>& right);

/// Same, with an explicit set of key nodes (e.g. GraphDiff::nodes_shared).
InstanceDiff diff_instances(const std::vector<InstanceGraph>& left, const std::vector<InstanceGraph>& right,
                            const std::set<NodeId>& key_nodes);

/// Column data of one value sub-query on both sides (nulls preserved).
struct PairedSeries {
    SubQueryId subquery;
    std::string property;
    std::vector<Cell> left;
    std::vector<Cell> right;
};

/// Aligns the selected value columns of two executions for a distribution
/// overlay. Every selected id must be a value sub-query present in both graph
/// versions on the same node and property (ValueSelectionMismatchError).
std::vector<PairedSeries> diff_result_values(const ResultTable& left, const PrototypeGraph& left_graph,
                                             const ResultTable& right, const PrototypeGraph& right_graph,
                                             std::span<const SubQueryId> selected);

}  // namespace kgdiff
