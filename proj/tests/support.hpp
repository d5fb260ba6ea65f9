#pragma once

// Shared fixtures, generators and oracles for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "kgdiff/changeset.hpp"
#include "kgdiff/diff.hpp"
#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"
#include "kgdiff/triple_store.hpp"

namespace kgtest {

using namespace kgdiff;

inline const std::string kEx = "http://example.org/onto/";
inline const std::string kData = "http://example.org/data/";
inline std::string ex(const std::string& local) { return kEx + local; }
inline std::string data(const std::string& local) { return kData + local; }

std::filesystem::path fixture(const std::string& name);
const Ontology& toy();
const TripleStore& dataset(const std::string& name);  // cached per file name

/// Store plus rdf:type triples for every superclass, so queries that do not
/// expand subclasses see the same instances as eval_local.
TripleStore materialize_types(const TripleStore& store, const Ontology& o);

/// Fresh directory under the build tree, emptied on construction.
std::filesystem::path scratch_dir(const std::string& name);

// ---------------------------------------------------------------------------
// Generators

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine); }
    bool chance(double p) { return std::bernoulli_distribution(p)(engine); }
    template <class C>
    const auto& pick(const C& c) { return c[below(c.size())]; }
};

/// Number of nodes + edges + sub-queries.
std::size_t element_count(const PrototypeGraph& g);

/// Applies one random valid mutation (add node/edge/sub-query, update a
/// condition, remove something). Stays under `max_elements`.
void random_mutation(Rng& rng, PrototypeGraph& g, const Ontology& o, std::size_t max_elements = 30);

/// A condition valid for `property`; operands drawn from `store` values when
/// available so filters actually bite.
Condition random_condition(Rng& rng, const PropertyDef& property, const TripleStore* store);

/// A connected graph grown from one node by random admissible edges and
/// sub-queries.
PrototypeGraph random_graph(Rng& rng, const Ontology& o, std::size_t nodes, std::size_t subqueries,
                            const TripleStore* store = nullptr);

/// Raw change set in the LM output shape: uses allowed vocabulary but may
/// reverse edges, reference undeclared refs, delete stale ids and attach
/// properties to the wrong node.
ChangeSet random_raw_changeset(Rng& rng, const PrototypeGraph& g, const Ontology& o);

// ---------------------------------------------------------------------------
// Oracles

/// Pairwise comparison of every left element against every right element.
GraphDiff pairwise_diff_oracle(const PrototypeGraph& left, const PrototypeGraph& right);

/// Minimal RFC 4180 reader.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Rows as sorted vectors of cell keys (order-insensitive comparison).
std::vector<std::vector<std::string>> row_multiset(const ResultTable& t);

}  // namespace kgtest
