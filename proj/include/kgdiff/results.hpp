#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgdiff/proto_graph.hpp"
#include "kgdiff/rdf.hpp"

namespace kgdiff {

/// One bound value in a result row. Unbound variables are std::nullopt.
using Cell = std::optional<rdf::Term>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;

    /// Sorts rows lexicographically over their cell strings (see cell_key).
    void sort_canonical();

    bool operator==(const ResultTable&) const = default;
};

/// Sort/compare key of a cell: the N-Triples form, or "" when unbound.
std::string cell_key(const Cell& c);

/// Throws MalformedResultsError when a row has the wrong arity.
void check_shape(const ResultTable& t);

/// One concrete match of the prototype graph.
struct InstanceGraph {
    std::map<NodeId, std::string> node_bindings;     // prototype node -> instance IRI
    std::map<SubQueryId, rdf::Term> value_bindings;  // value sub-query -> literal

    auto operator<=>(const InstanceGraph&) const = default;
    bool operator==(const InstanceGraph&) const = default;
};

/// Variable naming contract shared by query generation and result mapping.
std::string node_variable(NodeId id);        // "n3"
std::string subquery_variable(SubQueryId id);  // "s7"

/// One instance graph per distinct row. Columns must be exactly the node
/// variables then value variables of `g` (ProjectionMismatchError otherwise).
std::vector<InstanceGraph> to_instance_graphs(const ResultTable& t, const PrototypeGraph& g);

}  // namespace kgdiff
