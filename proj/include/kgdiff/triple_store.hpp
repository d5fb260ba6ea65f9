#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"
#include "kgdiff/rdf.hpp"
#include "kgdiff/results.hpp"

namespace kgdiff {

/// In-memory, immutable triple set with subject/predicate/object indexes.
class TripleStore {
public:
    TripleStore() = default;
    explicit TripleStore(std::vector<rdf::Triple> triples);

    static TripleStore parse(std::string_view document, rdf::Format format);
    static TripleStore load_file(const std::filesystem::path& path);

    std::size_t size() const noexcept { return triples_.size(); }
    const std::vector<rdf::Triple>& triples() const noexcept { return triples_; }

    bool contains(const rdf::Triple& t) const;

    /// All triples matching the bound positions, in store order.
    std::vector<const rdf::Triple*> match(const std::optional<rdf::Term>& s, const std::optional<rdf::Term>& p,
                                          const std::optional<rdf::Term>& o) const;

    /// Same result as match() computed by a full scan; used to check the indexes.
    std::vector<const rdf::Triple*> scan(const std::optional<rdf::Term>& s, const std::optional<rdf::Term>& p,
                                         const std::optional<rdf::Term>& o) const;

private:
    std::vector<rdf::Triple> triples_;  // sorted, unique
    std::map<rdf::Term, std::vector<std::size_t>> by_subject_;
    std::map<rdf::Term, std::vector<std::size_t>> by_predicate_;
    std::map<rdf::Term, std::vector<std::size_t>> by_object_;
};

/// Does the literal/IRI `value` satisfy `c` for a property of `kind`?
/// std::nullopt when the value cannot be interpreted at that kind (the row
/// is then excluded regardless of negation).
std::optional<bool> condition_holds(const Condition& c, RangeKind kind, const rdf::Term& value);

/// Brute-force backtracking match of the prototype graph over the store.
/// Types match through the ontology's subclass closure. Output columns follow
/// the select projection; rows are in canonical order and keep duplicates
/// that arise from multiple constraint-property values.
ResultTable eval_local(const TripleStore& store, const PrototypeGraph& g, const Ontology& o);

}  // namespace kgdiff
