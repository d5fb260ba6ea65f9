#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"

namespace kgdiff {

inline constexpr std::uint64_t kDefaultInstanceLimit = 1000;
inline constexpr std::uint64_t kDefaultDistributionLimit = 100000;

struct ProjectedVariable {
    std::string name;                          // without '?'
    std::variant<NodeId, SubQueryId> source;

    bool operator==(const ProjectedVariable&) const = default;
};

struct SparqlQuery {
    std::string text;
    std::vector<ProjectedVariable> projection;
};

struct SparqlOptions {
    std::optional<std::uint64_t> limit;
    /// Emit a UNION over all subclasses for each type triple instead of
    /// relying on materialized rdf:type statements in the endpoint data.
    bool expand_subclasses = false;
};

/// The `{ ... }` group shared by the select and count queries.
std::string where_block(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options = {});

/// `SELECT ?n.. ?s.. WHERE { ... } [LIMIT k]`. Node variables come first
/// (ascending NodeId), then value variables (ascending SubQueryId).
/// Throws InvalidGraphError / EmptyGraphError.
SparqlQuery generate_select(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options = {});

/// `SELECT (COUNT(*) AS ?c) WHERE { ... }` over the identical WHERE block.
SparqlQuery generate_count(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options = {});

/// The FILTER expression (without `FILTER`) realizing a condition on `var`.
std::string filter_expression(const Condition& c, RangeKind kind, const std::string& var);

}  // namespace kgdiff
