#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kgdiff/diff.hpp"
#include "kgdiff/embedding.hpp"
#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"

namespace kgdiff {

/// An existing node, or a temporary reference to a node added by the same
/// change set.
using NodeRef = std::variant<NodeId, std::string>;
std::string to_string(const NodeRef& r);

struct AddNode {
    std::string ref;
    std::string cls;
    bool operator==(const AddNode&) const = default;
};

struct AddEdge {
    NodeRef tail;
    std::string link;
    NodeRef head;
    bool operator==(const AddEdge&) const = default;
};

struct AddConstraint {
    NodeRef node;
    std::string property;
    Condition condition;
    bool operator==(const AddConstraint&) const = default;
};

struct AddValue {
    NodeRef node;
    std::string property;
    bool operator==(const AddValue&) const = default;
};

struct ChangeSet {
    std::vector<AddNode> add_nodes;
    std::vector<AddEdge> add_edges;
    std::vector<NodeId> delete_nodes;
    std::vector<EdgeId> delete_edges;
    std::vector<AddConstraint> add_constraints;
    std::vector<AddValue> add_values;
    std::vector<SubQueryId> delete_subqueries;

    bool empty() const noexcept;
    bool operator==(const ChangeSet&) const = default;
};

nlohmann::json changeset_to_json(const ChangeSet& cs);
/// Structural parse. Missing lists are empty; wrong types, unknown keys or
/// unknown operators throw SchemaViolationError.
ChangeSet changeset_from_json(const nlohmann::json& doc);
ChangeSet parse_changeset(std::string_view text);

struct ConnectionRule {
    std::string from;
    std::string link;
    std::string to;
    auto operator<=>(const ConnectionRule&) const = default;
};

/// What an LM may emit for one request against one graph.
struct ConstrainedSchema {
    std::set<std::string> classes;     // candidates ∪ classes in the graph
    std::set<std::string> links;       // candidates ∪ links in the graph
    std::set<std::string> properties;  // properties applicable to an allowed class
    std::set<ConnectionRule> rules;    // admissible (class, link, class) triples
    std::set<NodeId> nodes;            // deletable / referable ids
    std::set<EdgeId> edges;
    std::set<SubQueryId> subqueries;

    /// JSON Schema (draft 2020-12 subset) of a change-set document.
    nlohmann::json json_schema() const;
};

ConstrainedSchema build_constrained_schema(const Candidates& candidates, const PrototypeGraph& g,
                                           const Ontology& o);

/// Rejects vocabulary outside the schema's class/link/property sets.
void check_shape(const ChangeSet& cs, const ConstrainedSchema& schema);

struct RepairAction {
    enum class Kind { Synthesized, Flipped, Dropped };
    Kind kind;
    std::string detail;
    bool operator==(const RepairAction&) const = default;
};
std::string_view to_string(RepairAction::Kind kind);

struct RepairResult {
    ChangeSet changeset;
    std::vector<RepairAction> report;
};

/// Synthesizes undeclared endpoint nodes, flips reversed edges, then drops
/// whatever still cannot apply. The result always applies cleanly to `g`
/// (UnrepairableError otherwise).
RepairResult repair_changeset(const ChangeSet& raw, const PrototypeGraph& g, const Ontology& o);

struct ApplyResult {
    PrototypeGraph graph;
    GraphDiff diff;
    std::map<std::string, NodeId> refs;  // temp ref -> allocated id
};

/// Deletions (sub-queries, edges, nodes) then additions (nodes, edges,
/// constraints, values) on a copy of `g`. Any failure leaves `g` untouched
/// and propagates (UnknownElementError for stale ids).
ApplyResult apply_changeset(const PrototypeGraph& g, const Ontology& o, const ChangeSet& cs);

}  // namespace kgdiff
