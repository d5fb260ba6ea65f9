#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgdiff/ontology.hpp"

namespace kgdiff {

/// Strongly-typed serial identifier. One counter per kind and graph; ids are
/// never reused, so an id identifies the same element across snapshots.
template <class Tag>
struct SerialId {
    std::uint64_t value = 0;

    auto operator<=>(const SerialId&) const = default;
    bool operator==(const SerialId&) const = default;
};

using NodeId = SerialId<struct NodeTag>;
using EdgeId = SerialId<struct EdgeTag>;
using SubQueryId = SerialId<struct SubQueryTag>;

enum class ElementKind { Node, Edge, SubQuery };
std::string_view to_string(ElementKind kind);
ElementKind element_kind_from_string(std::string_view name);

enum class Operator { Eq, Neq, Lt, Leq, Gt, Geq, Contains, Regex };
std::string_view to_string(Operator op);
Operator operator_from_string(std::string_view name);

/// Whether `op` is meaningful for properties of `kind`.
bool operator_allowed(Operator op, RangeKind kind);

/// A filter on a property value. `operand` is kept in lexical form and is
/// interpreted according to the property's range kind.
struct Condition {
    Operator op = Operator::Eq;
    bool negated = false;
    std::string operand;

    bool operator==(const Condition&) const = default;
};

/// Throws OperatorKindError when the operator or the operand's lexical form
/// does not fit `kind` (e.g. `lt` on text, "abc" for a numeric property).
void check_condition(const Condition& c, RangeKind kind);

enum class SubQueryKind { Constraint, Value };
std::string_view to_string(SubQueryKind kind);
SubQueryKind subquery_kind_from_string(std::string_view name);

struct ProtoNode {
    NodeId id;
    std::string cls;

    bool operator==(const ProtoNode&) const = default;
};

struct ProtoEdge {
    EdgeId id;
    NodeId tail;
    std::string link;
    NodeId head;

    bool operator==(const ProtoEdge&) const = default;
};

struct SubQuery {
    SubQueryId id;
    NodeId node;
    std::string property;
    SubQueryKind kind = SubQueryKind::Value;
    std::optional<Condition> condition;  // present iff kind == Constraint
    std::uint64_t revision = 0;

    bool operator==(const SubQuery&) const = default;
};

/// Canonical text of a sub-query's content (node, property, kind, condition).
/// Revision is excluded: two copies edited to the same condition compare equal.
std::string canonical_subquery(const SubQuery& s);

struct RemovalReport {
    std::vector<NodeId> nodes;
    std::vector<EdgeId> edges;
    std::vector<SubQueryId> subqueries;
};

enum class ViolationRule { UnknownClass, UnknownLink, UnknownProperty, DanglingReference, TypeMismatch,
                           PropertyDomain, OperatorKind, ConditionPresence, IdCounter };
std::string_view to_string(ViolationRule rule);

struct Violation {
    ElementKind kind;
    std::uint64_t id;
    ViolationRule rule;
    std::string message;
};

/// The prototype query graph: typed nodes, admissible typed edges and
/// per-node sub-queries. Every mutator validates against the ontology before
/// touching state, so a graph mutated only through this interface is always
/// valid. `version()` increases by one on every successful mutation.
class PrototypeGraph {
public:
    const std::map<NodeId, ProtoNode>& nodes() const noexcept { return nodes_; }
    const std::map<EdgeId, ProtoEdge>& edges() const noexcept { return edges_; }
    const std::map<SubQueryId, SubQuery>& subqueries() const noexcept { return subqueries_; }

    std::uint64_t version() const noexcept { return version_; }
    std::string version_tag() const { return "v" + std::to_string(version_); }

    std::uint64_t next_node_id() const noexcept { return next_node_; }
    std::uint64_t next_edge_id() const noexcept { return next_edge_; }
    std::uint64_t next_subquery_id() const noexcept { return next_subquery_; }

    bool empty() const noexcept { return nodes_.empty(); }

    const ProtoNode& node(NodeId id) const;
    const ProtoEdge& edge(EdgeId id) const;
    const SubQuery& subquery(SubQueryId id) const;

    NodeId add_node(const Ontology& o, std::string_view cls);
    EdgeId add_edge(const Ontology& o, NodeId tail, std::string_view link, NodeId head);

    /// Attaches a new sub-query at revision 0.
    SubQueryId set_subquery(const Ontology& o, NodeId node, std::string_view property, SubQueryKind kind,
                            std::optional<Condition> condition = std::nullopt);

    /// Replaces the condition of an existing constraint sub-query in place and
    /// bumps its revision by one.
    void update_subquery(const Ontology& o, SubQueryId id, Condition condition);

    RemovalReport remove_node(NodeId id);
    RemovalReport remove_edge(EdgeId id);
    RemovalReport remove_subquery(SubQueryId id);
    RemovalReport remove_element(ElementKind kind, std::uint64_t id);

    /// Deep copy. Id counters and the version are carried over so element ids
    /// and version tags stay comparable across snapshots.
    PrototypeGraph snapshot() const { return *this; }

    /// Raw insertion used by deserialization and fixtures; performs no
    /// ontology checks (run validate() afterwards).
    void insert_unchecked(ProtoNode n);
    void insert_unchecked(ProtoEdge e);
    void insert_unchecked(SubQuery s);
    void set_counters(std::uint64_t next_node, std::uint64_t next_edge, std::uint64_t next_subquery);
    void set_version(std::uint64_t v) noexcept { version_ = v; }

    bool operator==(const PrototypeGraph&) const = default;

private:
    std::map<NodeId, ProtoNode> nodes_;
    std::map<EdgeId, ProtoEdge> edges_;
    std::map<SubQueryId, SubQuery> subqueries_;
    std::uint64_t next_node_ = 0;
    std::uint64_t next_edge_ = 0;
    std::uint64_t next_subquery_ = 0;
    std::uint64_t version_ = 0;
};

/// Checks every graph invariant; an empty result means the graph is valid.
std::vector<Violation> validate(const PrototypeGraph& g, const Ontology& o);

/// Canonical structured-text (JSON, sorted keys, explicit ids) graph file.
inline constexpr int kGraphFormatVersion = 1;
std::string serialize_graph(const PrototypeGraph& g);
/// Throws GraphFormatError on malformed or wrong-version documents.
PrototypeGraph deserialize_graph(std::string_view text);

PrototypeGraph load_graph_file(const std::filesystem::path& path);
void save_graph_file(const PrototypeGraph& g, const std::filesystem::path& path);

}  // namespace kgdiff
