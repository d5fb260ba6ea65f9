#include "kgdiff/results.hpp"

#include <algorithm>
#include <set>

#include "kgdiff/error.hpp"

namespace kgdiff {

std::optional<std::size_t> ResultTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    return std::nullopt;
}

std::string cell_key(const Cell& c) { return c ? c->to_ntriples() : std::string(); }

void ResultTable::sort_canonical() {
    std::vector<std::pair<std::vector<std::string>, std::size_t>> keyed;
    keyed.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> key;
        key.reserve(rows[i].size());
        for (const auto& c : rows[i]) key.push_back(cell_key(c));
        keyed.emplace_back(std::move(key), i);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::vector<Cell>> sorted;
    sorted.reserve(rows.size());
    for (const auto& [key, i] : keyed) sorted.push_back(std::move(rows[i]));
    rows = std::move(sorted);
}

void check_shape(const ResultTable& t) {
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        if (t.rows[i].size() != t.columns.size())
            throw MalformedResultsError("row " + std::to_string(i) + " has " + std::to_string(t.rows[i].size()) +
                                        " cells, expected " + std::to_string(t.columns.size()));
}

std::string node_variable(NodeId id) { return "n" + std::to_string(id.value); }
std::string subquery_variable(SubQueryId id) { return "s" + std::to_string(id.value); }

std::vector<InstanceGraph> to_instance_graphs(const ResultTable& t, const PrototypeGraph& g) {
    std::vector<std::string> expected;
    for (const auto& [id, n] : g.nodes()) expected.push_back(node_variable(id));
    std::vector<SubQueryId> values;
    for (const auto& [id, s] : g.subqueries()) {
        if (s.kind == SubQueryKind::Value) {
            expected.push_back(subquery_variable(id));
            values.push_back(id);
        }
    }
    if (t.columns != expected) {
        std::string want, got;
        for (const auto& c : expected) want += " ?" + c;
        for (const auto& c : t.columns) got += " ?" + c;
        throw ProjectionMismatchError("result columns [" + got + " ] do not match graph projection [" + want + " ]");
    }
    check_shape(t);
    const std::size_t node_count = g.nodes().size();
    std::set<InstanceGraph> seen;
    std::vector<InstanceGraph> out;
    for (const auto& row : t.rows) {
        InstanceGraph ig;
        std::size_t col = 0;
        for (const auto& [id, n] : g.nodes()) {
            const auto& cell = row[col++];
            if (cell) ig.node_bindings[id] = cell->value;
        }
        for (std::size_t v = 0; v < values.size(); ++v) {
            const auto& cell = row[node_count + v];
            if (cell) ig.value_bindings[values[v]] = *cell;
        }
        if (seen.insert(ig).second) out.push_back(std::move(ig));
    }
    return out;
}

}  // namespace kgdiff
