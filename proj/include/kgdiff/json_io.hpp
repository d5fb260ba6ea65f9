#pragma once

#include <nlohmann/json.hpp>

#include "kgdiff/changeset.hpp"
#include "kgdiff/diff.hpp"
#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"
#include "kgdiff/results.hpp"

// Structured-text encodings used by the HTTP API, the C API and the CLI.

namespace kgdiff {

nlohmann::json term_to_json(const rdf::Term& t);
nlohmann::json to_json(const ResultTable& t);
nlohmann::json to_json(const GraphDiff& d);
nlohmann::json to_json(const InstanceDiff& d);
nlohmann::json to_json(const std::vector<RepairAction>& report);
nlohmann::json to_json(const std::vector<Violation>& violations);
nlohmann::json graph_to_json(const PrototypeGraph& g);

/// Counts and warnings only.
nlohmann::json ontology_summary(const Ontology& o);
/// Every class, link and property.
nlohmann::json ontology_listing(const Ontology& o);

/// Human-readable diff report: one line per added/deleted/changed element.
std::string diff_report(const PrototypeGraph& left, const PrototypeGraph& right, const Ontology* o = nullptr);

Condition condition_from_json(const nlohmann::json& j);
nlohmann::json condition_to_json(const Condition& c);

}  // namespace kgdiff
