#include "kgdiff/diff.hpp"

#include <algorithm>
#include <iterator>

#include "kgdiff/error.hpp"

namespace kgdiff {

bool GraphDiff::is_identity() const noexcept {
    return nodes_added.empty() && nodes_deleted.empty() && edges_added.empty() && edges_deleted.empty() &&
           subqueries_added.empty() && subqueries_deleted.empty() && subqueries_changed.empty();
}

namespace {

template <class Id, class Map>
void partition(const Map& left, const Map& right, std::set<Id>& added, std::set<Id>& deleted, std::set<Id>& shared) {
    for (const auto& [id, _] : right) {
        if (left.count(id)) shared.insert(id);
        else added.insert(id);
    }
    for (const auto& [id, _] : left)
        if (!right.count(id)) deleted.insert(id);
}

}  // namespace

GraphDiff diff_graphs(const PrototypeGraph& left, const PrototypeGraph& right) {
    GraphDiff d;
    partition(left.nodes(), right.nodes(), d.nodes_added, d.nodes_deleted, d.nodes_shared);
    partition(left.edges(), right.edges(), d.edges_added, d.edges_deleted, d.edges_shared);

    // Sub-query sets over shared nodes; sub-queries of added/deleted nodes
    // follow their node.
    for (const auto& [id, s] : right.subqueries()) {
        auto other = left.subqueries().find(id);
        if (other == left.subqueries().end() || !d.nodes_shared.count(s.node)) {
            d.subqueries_added.insert(id);
            continue;
        }
        d.subqueries_shared.insert(id);
        if (canonical_subquery(s) != canonical_subquery(other->second)) d.subqueries_changed.insert(id);
    }
    for (const auto& [id, s] : left.subqueries()) {
        if (!d.subqueries_shared.count(id)) d.subqueries_deleted.insert(id);
    }
    return d;
}

namespace {

std::set<NodeId> bound_nodes(const std::vector<InstanceGraph>& side) {
    std::set<NodeId> out;
    if (side.empty()) return out;
    for (const auto& [id, _] : side.front().node_bindings) out.insert(id);
    for (const auto& ig : side) {
        std::set<NodeId> cur;
        for (const auto& [id, _] : ig.node_bindings) cur.insert(id);
        std::set<NodeId> both;
        std::set_intersection(out.begin(), out.end(), cur.begin(), cur.end(), std::inserter(both, both.begin()));
        out = std::move(both);
    }
    return out;
}

InstanceKey key_of(const InstanceGraph& ig, const std::set<NodeId>& nodes) {
    InstanceKey key;
    for (NodeId n : nodes) {
        auto it = ig.node_bindings.find(n);
        key.emplace_back(n, it == ig.node_bindings.end() ? std::string() : it->second);
    }
    return key;
}

}  // namespace

InstanceDiff diff_instances(const std::vector<InstanceGraph>& left, const std::vector<InstanceGraph>& right) {
    std::set<NodeId> nodes;
    if (left.empty()) {
        nodes = bound_nodes(right);
    } else if (right.empty()) {
        nodes = bound_nodes(left);
    } else {
        auto l = bound_nodes(left);
        auto r = bound_nodes(right);
        std::set_intersection(l.begin(), l.end(), r.begin(), r.end(), std::inserter(nodes, nodes.begin()));
        if (nodes.empty()) throw IncomparableResultsError("the two result sets share no prototype node");
    }
    return diff_instances(left, right, nodes);
}

InstanceDiff diff_instances(const std::vector<InstanceGraph>& left, const std::vector<InstanceGraph>& right,
                            const std::set<NodeId>& key_nodes) {
    if (key_nodes.empty() && !(left.empty() && right.empty()))
        throw IncomparableResultsError("no shared prototype nodes to key instances on");
    InstanceDiff d;
    d.key_nodes.assign(key_nodes.begin(), key_nodes.end());
    std::set<InstanceKey> lk, rk;
    for (const auto& ig : left) lk.insert(key_of(ig, key_nodes));
    for (const auto& ig : right) rk.insert(key_of(ig, key_nodes));
    for (const auto& k : rk) (lk.count(k) ? d.instances_shared : d.instances_added).insert(k);
    for (const auto& k : lk)
        if (!rk.count(k)) d.instances_removed.insert(k);
    return d;
}

std::vector<PairedSeries> diff_result_values(const ResultTable& left, const PrototypeGraph& left_graph,
                                             const ResultTable& right, const PrototypeGraph& right_graph,
                                             std::span<const SubQueryId> selected) {
    std::vector<PairedSeries> out;
    for (SubQueryId id : selected) {
        auto l = left_graph.subqueries().find(id);
        auto r = right_graph.subqueries().find(id);
        const std::string name = std::to_string(id.value);
        if (l == left_graph.subqueries().end() || r == right_graph.subqueries().end())
            throw ValueSelectionMismatchError("value sub-query " + name + " is not selected on both sides");
        if (l->second.kind != SubQueryKind::Value || r->second.kind != SubQueryKind::Value)
            throw ValueSelectionMismatchError("sub-query " + name + " is not a value selection");
        if (l->second.node != r->second.node || l->second.property != r->second.property)
            throw ValueSelectionMismatchError("value sub-query " + name + " selects different values on each side");
        const std::string var = subquery_variable(id);
        auto li = left.column_index(var);
        auto ri = right.column_index(var);
        if (!li || !ri) throw ValueSelectionMismatchError("result tables lack column ?" + var);
        PairedSeries p{id, l->second.property, {}, {}};
        for (const auto& row : left.rows) p.left.push_back(row.at(*li));
        for (const auto& row : right.rows) p.right.push_back(row.at(*ri));
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace kgdiff
