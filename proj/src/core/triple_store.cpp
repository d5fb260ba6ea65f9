#include "kgdiff/triple_store.hpp"

#include <algorithm>
#include <functional>
#include <regex>

#include "kgdiff/error.hpp"
#include "kgdiff/values.hpp"

namespace kgdiff {

TripleStore::TripleStore(std::vector<rdf::Triple> triples) : triples_(std::move(triples)) {
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        by_subject_[triples_[i].subject].push_back(i);
        by_predicate_[triples_[i].predicate].push_back(i);
        by_object_[triples_[i].object].push_back(i);
    }
}

TripleStore TripleStore::parse(std::string_view document, rdf::Format format) {
    return TripleStore(rdf::parse(document, format));
}

TripleStore TripleStore::load_file(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    return parse(read_file(path), ext == ".ttl" ? rdf::Format::Turtle : rdf::Format::NTriples);
}

bool TripleStore::contains(const rdf::Triple& t) const { return std::binary_search(triples_.begin(), triples_.end(), t); }

std::vector<const rdf::Triple*> TripleStore::match(const std::optional<rdf::Term>& s,
                                                   const std::optional<rdf::Term>& p,
                                                   const std::optional<rdf::Term>& o) const {
    static const std::vector<std::size_t> kEmpty;
    const std::vector<std::size_t>* candidates = nullptr;
    auto consider = [&](const auto& index, const std::optional<rdf::Term>& key) {
        if (!key) return;
        auto it = index.find(*key);
        const auto* list = it == index.end() ? &kEmpty : &it->second;
        if (!candidates || list->size() < candidates->size()) candidates = list;
    };
    consider(by_subject_, s);
    consider(by_predicate_, p);
    consider(by_object_, o);
    std::vector<const rdf::Triple*> out;
    auto accept = [&](const rdf::Triple& t) {
        return (!s || t.subject == *s) && (!p || t.predicate == *p) && (!o || t.object == *o);
    };
    if (!candidates) {
        for (const auto& t : triples_) out.push_back(&t);
        return out;
    }
    for (std::size_t i : *candidates)
        if (accept(triples_[i])) out.push_back(&triples_[i]);
    return out;
}

std::vector<const rdf::Triple*> TripleStore::scan(const std::optional<rdf::Term>& s,
                                                  const std::optional<rdf::Term>& p,
                                                  const std::optional<rdf::Term>& o) const {
    std::vector<const rdf::Triple*> out;
    for (const auto& t : triples_)
        if ((!s || t.subject == *s) && (!p || t.predicate == *p) && (!o || t.object == *o)) out.push_back(&t);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
bool compare(Operator op, const T& a, const T& b) {
    switch (op) {
        case Operator::Eq: return a == b;
        case Operator::Neq: return a != b;
        case Operator::Lt: return a < b;
        case Operator::Leq: return a <= b;
        case Operator::Gt: return a > b;
        case Operator::Geq: return a >= b;
        default: return false;
    }
}

}  // namespace

std::optional<bool> condition_holds(const Condition& c, RangeKind kind, const rdf::Term& value) {
    std::optional<bool> result;
    switch (kind) {
        case RangeKind::Numeric: {
            if (!value.is_literal()) return std::nullopt;
            auto v = values::parse_number(value.value);
            auto operand = values::parse_number(c.operand);
            if (!v || !operand) return std::nullopt;
            result = compare(c.op, *v, *operand);
            break;
        }
        case RangeKind::Date: {
            if (!value.is_literal()) return std::nullopt;
            auto v = values::parse_datetime(value.value);
            // operands are compared at whole-second precision, like the emitted query
            auto normalized = values::normalize_datetime(c.operand);
            if (!v || !normalized) return std::nullopt;
            result = compare(c.op, *v, *values::parse_datetime(*normalized));
            break;
        }
        case RangeKind::Boolean: {
            if (!value.is_literal()) return std::nullopt;
            auto v = values::parse_boolean(value.value);
            auto operand = values::parse_boolean(c.operand);
            if (!v || !operand) return std::nullopt;
            result = compare(c.op, *v, *operand);
            break;
        }
        case RangeKind::Iri: {
            bool same = value.is_iri() && value.value == c.operand;
            if (c.op == Operator::Eq) result = same;
            else if (c.op == Operator::Neq) result = !same;
            else return std::nullopt;
            break;
        }
        case RangeKind::Text: {
            if (value.is_blank()) return std::nullopt;
            const std::string& text = value.value;
            switch (c.op) {
                case Operator::Eq: result = text == c.operand; break;
                case Operator::Neq: result = text != c.operand; break;
                case Operator::Contains:
                    result = values::ascii_lower(text).find(values::ascii_lower(c.operand)) != std::string::npos;
                    break;
                case Operator::Regex:
                    result = std::regex_search(text, std::regex(c.operand));
                    break;
                default: return std::nullopt;
            }
            break;
        }
    }
    if (!result) return std::nullopt;
    return c.negated ? !*result : *result;
}

ResultTable eval_local(const TripleStore& store, const PrototypeGraph& g, const Ontology& o) {
    if (g.empty()) throw EmptyGraphError("the prototype graph has no nodes");
    auto violations = validate(g, o);
    if (!violations.empty())
        throw InvalidGraphError(std::to_string(violations.size()) + " validation violation(s): " +
                                violations.front().message);

    ResultTable table;
    std::vector<NodeId> nodes;
    for (const auto& [id, n] : g.nodes()) {
        nodes.push_back(id);
        table.columns.push_back(node_variable(id));
    }
    std::vector<SubQueryId> projected_values;
    for (const auto& [id, s] : g.subqueries()) {
        if (s.kind == SubQueryKind::Value) {
            projected_values.push_back(id);
            table.columns.push_back(subquery_variable(id));
        }
    }

    const rdf::Term type = rdf::Term::iri(std::string(rdf::vocab::kType));

    // Candidate instances per node: subjects typed with any subclass.
    std::map<NodeId, std::vector<rdf::Term>> candidates;
    for (NodeId id : nodes) {
        std::set<rdf::Term> found;
        for (const auto& cls : o.subclasses_of(g.node(id).cls))
            for (const auto* t : store.match(std::nullopt, type, rdf::Term::iri(cls))) found.insert(t->subject);
        candidates[id].assign(found.begin(), found.end());
    }
    // Per node: edges to check once this node is bound (other endpoint earlier or itself).
    std::map<NodeId, std::vector<const ProtoEdge*>> edges_at;
    for (const auto& [id, e] : g.edges()) edges_at[std::max(e.tail, e.head)].push_back(&e);
    std::map<NodeId, std::vector<const SubQuery*>> subs_at;
    for (const auto& [id, s] : g.subqueries()) subs_at[s.node].push_back(&s);

    std::map<NodeId, rdf::Term> bound_nodes;
    std::map<SubQueryId, rdf::Term> bound_values;

    std::function<void(std::size_t)> bind_node;
    std::function<void(std::size_t, std::size_t)> bind_subqueries;

    auto emit = [&] {
        std::vector<Cell> row;
        for (NodeId id : nodes) row.emplace_back(bound_nodes.at(id));
        for (SubQueryId id : projected_values) row.emplace_back(bound_values.at(id));
        table.rows.push_back(std::move(row));
    };

    bind_subqueries = [&](std::size_t node_index, std::size_t sub_index) {
        const NodeId node = nodes[node_index];
        const auto& subs = subs_at[node];
        if (sub_index == subs.size()) {
            if (node_index + 1 == nodes.size()) emit();
            else bind_node(node_index + 1);
            return;
        }
        const SubQuery& s = *subs[sub_index];
        const RangeKind kind = o.find_property(s.property)->range_kind;
        for (const auto* t : store.match(bound_nodes.at(node), rdf::Term::iri(s.property), std::nullopt)) {
            if (s.kind == SubQueryKind::Constraint) {
                auto ok = condition_holds(*s.condition, kind, t->object);
                if (!ok || !*ok) continue;
            }
            bound_values[s.id] = t->object;
            bind_subqueries(node_index, sub_index + 1);
        }
        bound_values.erase(s.id);
    };

    bind_node = [&](std::size_t node_index) {
        const NodeId node = nodes[node_index];
        for (const auto& instance : candidates[node]) {
            bound_nodes[node] = instance;
            bool ok = true;
            for (const ProtoEdge* e : edges_at[node]) {
                rdf::Triple need{bound_nodes.at(e->tail), rdf::Term::iri(e->link), bound_nodes.at(e->head)};
                if (!store.contains(need)) {
                    ok = false;
                    break;
                }
            }
            if (ok) bind_subqueries(node_index, 0);
        }
        bound_nodes.erase(node);
    };

    bind_node(0);
    table.sort_canonical();
    return table;
}

}  // namespace kgdiff
