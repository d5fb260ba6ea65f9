#include "support.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "kgdiff/values.hpp"

#ifndef KGDIFF_FIXTURE_DIR
#error "KGDIFF_FIXTURE_DIR must be defined"
#endif
#ifndef KGDIFF_SCRATCH_DIR
#error "KGDIFF_SCRATCH_DIR must be defined"
#endif

namespace kgtest {

namespace fs = std::filesystem;

fs::path fixture(const std::string& name) { return fs::path(KGDIFF_FIXTURE_DIR) / name; }

const Ontology& toy() {
    static const Ontology o = load_ontology_file(fixture("toy.ttl"));
    return o;
}

const TripleStore& dataset(const std::string& name) {
    static std::mutex m;
    static std::map<std::string, TripleStore> cache;
    std::lock_guard lock(m);
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, TripleStore::load_file(fixture(name))).first;
    return it->second;
}

TripleStore materialize_types(const TripleStore& store, const Ontology& o) {
    const rdf::Term type = rdf::Term::iri(std::string(rdf::vocab::kType));
    std::vector<rdf::Triple> out = store.triples();
    for (const auto& t : store.triples()) {
        if (t.predicate != type || !t.object.is_iri() || !o.has_class(t.object.value)) continue;
        for (const auto& super : o.superclasses_of(t.object.value))
            if (super != Ontology::kRoot) out.push_back({t.subject, type, rdf::Term::iri(super)});
    }
    return TripleStore(std::move(out));
}

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::path(KGDIFF_SCRATCH_DIR) / name;
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------

std::size_t element_count(const PrototypeGraph& g) {
    return g.nodes().size() + g.edges().size() + g.subqueries().size();
}

namespace {

std::vector<std::string> user_classes(const Ontology& o) {
    std::vector<std::string> out;
    for (const auto& [id, c] : o.classes())
        if (id != Ontology::kRoot) out.push_back(id);
    return out;
}

std::vector<Operator> operators_for(RangeKind kind) {
    std::vector<Operator> out;
    for (Operator op : {Operator::Eq, Operator::Neq, Operator::Lt, Operator::Leq, Operator::Gt, Operator::Geq,
                        Operator::Contains, Operator::Regex})
        if (operator_allowed(op, kind)) out.push_back(op);
    return out;
}

bool try_add_edge(Rng& rng, PrototypeGraph& g, const Ontology& o) {
    if (g.nodes().empty()) return false;
    std::vector<NodeId> ids;
    for (const auto& [id, n] : g.nodes()) ids.push_back(id);
    for (int attempt = 0; attempt < 8; ++attempt) {
        NodeId tail = rng.pick(ids), head = rng.pick(ids);
        auto links = o.links_between(g.node(tail).cls, g.node(head).cls);
        if (links.empty()) continue;
        g.add_edge(o, tail, rng.pick(links).id, head);
        return true;
    }
    return false;
}

bool try_add_subquery(Rng& rng, PrototypeGraph& g, const Ontology& o, const TripleStore* store) {
    if (g.nodes().empty()) return false;
    std::vector<NodeId> ids;
    for (const auto& [id, n] : g.nodes()) ids.push_back(id);
    NodeId node = rng.pick(ids);
    auto props = o.properties_of(g.node(node).cls);
    if (props.empty()) return false;
    const PropertyDef& p = rng.pick(props);
    if (rng.chance(0.5)) g.set_subquery(o, node, p.id, SubQueryKind::Value);
    else g.set_subquery(o, node, p.id, SubQueryKind::Constraint, random_condition(rng, p, store));
    return true;
}

}  // namespace

Condition random_condition(Rng& rng, const PropertyDef& property, const TripleStore* store) {
    Condition c;
    c.op = rng.pick(operators_for(property.range_kind));
    c.negated = rng.chance(0.25);
    std::vector<std::string> seen;
    if (store) {
        for (const auto* t : store->match(std::nullopt, rdf::Term::iri(property.id), std::nullopt)) {
            const auto& v = t->object.value;
            bool ok = true;
            switch (property.range_kind) {
                case RangeKind::Numeric: ok = values::parse_number(v).has_value(); break;
                case RangeKind::Date: ok = values::parse_datetime(v).has_value(); break;
                case RangeKind::Boolean: ok = values::parse_boolean(v).has_value(); break;
                case RangeKind::Iri: ok = t->object.is_iri(); break;
                case RangeKind::Text: break;
            }
            if (ok) seen.push_back(v);
        }
    }
    if (!seen.empty() && rng.chance(0.8)) {
        c.operand = rng.pick(seen);
        if (property.range_kind == RangeKind::Text && c.op == Operator::Contains)
            c.operand = c.operand.substr(0, 1 + rng.below(std::max<std::size_t>(1, c.operand.size())));
        if (property.range_kind == RangeKind::Text && c.op == Operator::Regex)
            c.operand = "^" + c.operand.substr(0, 1);
        return c;
    }
    switch (property.range_kind) {
        case RangeKind::Numeric: c.operand = std::to_string(static_cast<int>(rng.below(100000))); break;
        case RangeKind::Date: c.operand = std::to_string(1950 + rng.below(70)) + "-06-15"; break;
        case RangeKind::Boolean: c.operand = rng.chance(0.5) ? "true" : "false"; break;
        case RangeKind::Iri: c.operand = "http://example.org/data/X" + std::to_string(rng.below(5)); break;
        case RangeKind::Text:
            c.operand = c.op == Operator::Regex ? "^[A-M]" : std::string(1, static_cast<char>('a' + rng.below(26)));
            break;
    }
    return c;
}

void random_mutation(Rng& rng, PrototypeGraph& g, const Ontology& o, std::size_t max_elements) {
    static const auto classes = user_classes(o);
    const bool full = element_count(g) + 1 > max_elements;
    for (int attempt = 0; attempt < 16; ++attempt) {
        switch (full ? 4 + rng.below(2) : rng.below(6)) {
            case 0:
                g.add_node(o, rng.pick(classes));
                return;
            case 1:
                if (try_add_edge(rng, g, o)) return;
                break;
            case 2:
                if (try_add_subquery(rng, g, o, nullptr)) return;
                break;
            case 3: {
                std::vector<SubQueryId> constraints;
                for (const auto& [id, s] : g.subqueries())
                    if (s.kind == SubQueryKind::Constraint) constraints.push_back(id);
                if (constraints.empty()) break;
                SubQueryId id = rng.pick(constraints);
                g.update_subquery(o, id, random_condition(rng, *o.find_property(g.subquery(id).property), nullptr));
                return;
            }
            default: {
                if (g.empty()) break;
                std::vector<std::pair<ElementKind, std::uint64_t>> all;
                for (const auto& [id, n] : g.nodes()) all.emplace_back(ElementKind::Node, id.value);
                for (const auto& [id, e] : g.edges()) all.emplace_back(ElementKind::Edge, id.value);
                for (const auto& [id, s] : g.subqueries()) all.emplace_back(ElementKind::SubQuery, id.value);
                auto [kind, id] = rng.pick(all);
                g.remove_element(kind, id);
                return;
            }
        }
    }
    g.add_node(o, rng.pick(classes));
}

PrototypeGraph random_graph(Rng& rng, const Ontology& o, std::size_t nodes, std::size_t subqueries,
                            const TripleStore* store) {
    static const auto classes = user_classes(o);
    PrototypeGraph g;
    g.add_node(o, rng.pick(classes));
    for (int guard = 0; g.nodes().size() < nodes && guard < 200; ++guard) {
        // grow from an existing node along any admissible link
        std::vector<NodeId> ids;
        for (const auto& [id, n] : g.nodes()) ids.push_back(id);
        NodeId anchor = rng.pick(ids);
        const std::string& cls = g.node(anchor).cls;
        std::vector<std::pair<LinkDef, bool>> options;  // link, anchor is tail
        for (const auto& [id, l] : o.links()) {
            if (o.subtype_of(cls, l.fromtype)) options.emplace_back(l, true);
            if (o.subtype_of(cls, l.totype)) options.emplace_back(l, false);
        }
        if (options.empty()) continue;
        auto [link, outgoing] = rng.pick(options);
        const std::string& other_root = outgoing ? link.totype : link.fromtype;
        auto candidates = o.subclasses_of(other_root);
        candidates.erase(std::remove(candidates.begin(), candidates.end(), std::string(Ontology::kRoot)),
                         candidates.end());
        if (candidates.empty()) continue;
        NodeId fresh = g.add_node(o, rng.pick(candidates));
        if (outgoing) g.add_edge(o, anchor, link.id, fresh);
        else g.add_edge(o, fresh, link.id, anchor);
    }
    for (std::size_t i = 0, guard = 0; i < subqueries && guard < 50; ++guard)
        if (try_add_subquery(rng, g, o, store)) ++i;
    return g;
}

ChangeSet random_raw_changeset(Rng& rng, const PrototypeGraph& g, const Ontology& o) {
    static const auto classes = user_classes(o);
    ChangeSet cs;
    std::vector<NodeId> existing;
    for (const auto& [id, n] : g.nodes()) existing.push_back(id);
    std::vector<std::string> refs;
    const std::size_t adds = rng.below(4);
    for (std::size_t i = 0; i < adds; ++i) {
        std::string ref = "r" + std::to_string(i);
        refs.push_back(ref);
        cs.add_nodes.push_back({ref, rng.pick(classes)});
    }
    if (rng.chance(0.1) && !refs.empty()) cs.add_nodes.push_back({refs.front(), rng.pick(classes)});  // duplicate ref
    auto any_ref = [&]() -> NodeRef {
        const double r = static_cast<double>(rng.below(100)) / 100.0;
        if (r < 0.15) return std::string("ghost" + std::to_string(rng.below(3)));  // never declared
        if (r < 0.2) return NodeId{g.next_node_id() + rng.below(3)};           // stale id
        if (!refs.empty() && (existing.empty() || r < 0.6)) return rng.pick(refs);
        if (!existing.empty()) return rng.pick(existing);
        return std::string("ghost0");
    };
    auto class_of = [&](const NodeRef& r) -> std::string {
        if (const auto* id = std::get_if<NodeId>(&r)) {
            auto it = g.nodes().find(*id);
            return it == g.nodes().end() ? std::string() : it->second.cls;
        }
        for (const auto& a : cs.add_nodes)
            if (a.ref == std::get<std::string>(r)) return a.cls;
        return {};
    };
    const std::size_t edges = rng.below(4);
    for (std::size_t i = 0; i < edges; ++i) {
        NodeRef tail = any_ref(), head = any_ref();
        std::string tc = class_of(tail), hc = class_of(head);
        std::vector<LinkDef> links;
        if (!tc.empty() && !hc.empty()) {
            links = o.links_between(tc, hc);
            if (links.empty()) {
                links = o.links_between(hc, tc);
                if (!links.empty()) std::swap(tail, head);  // admissible only the other way round
                if (!links.empty() && rng.chance(0.5)) std::swap(tail, head);
            }
        }
        if (links.empty()) {
            std::vector<LinkDef> all;
            for (const auto& [id, l] : o.links()) all.push_back(l);
            links = all;
        }
        const auto& link = rng.pick(links);
        if (rng.chance(0.3)) cs.add_edges.push_back({head, link.id, tail});  // deliberately reversed
        else cs.add_edges.push_back({tail, link.id, head});
    }
    const std::size_t subs = rng.below(4);
    for (std::size_t i = 0; i < subs; ++i) {
        NodeRef node = any_ref();
        std::string cls = class_of(node);
        std::vector<PropertyDef> props = cls.empty() ? std::vector<PropertyDef>{} : o.properties_of(cls);
        if (props.empty() || rng.chance(0.15)) {
            props.clear();
            for (const auto& [id, p] : o.properties()) props.push_back(p);  // possibly out of domain
        }
        const auto& p = rng.pick(props);
        if (rng.chance(0.5)) {
            Condition c = random_condition(rng, p, nullptr);
            if (rng.chance(0.1)) c.op = Operator::Lt;  // possibly wrong for the kind
            cs.add_constraints.push_back({node, p.id, c});
        } else {
            cs.add_values.push_back({node, p.id});
        }
    }
    if (!existing.empty() && rng.chance(0.3)) cs.delete_nodes.push_back(rng.pick(existing));
    if (rng.chance(0.1)) cs.delete_nodes.push_back(NodeId{g.next_node_id() + 7});
    for (const auto& [id, e] : g.edges())
        if (rng.chance(0.15)) cs.delete_edges.push_back(id);
    for (const auto& [id, s] : g.subqueries())
        if (rng.chance(0.15)) cs.delete_subqueries.push_back(id);
    if (rng.chance(0.1)) cs.delete_subqueries.push_back(SubQueryId{g.next_subquery_id() + 1});
    return cs;
}

// ---------------------------------------------------------------------------

GraphDiff pairwise_diff_oracle(const PrototypeGraph& left, const PrototypeGraph& right) {
    GraphDiff d;
    std::vector<ProtoNode> ln, rn;
    for (const auto& [id, n] : left.nodes()) ln.push_back(n);
    for (const auto& [id, n] : right.nodes()) rn.push_back(n);
    for (const auto& r : rn) {
        bool found = false;
        for (const auto& l : ln) found = found || l.id == r.id;
        (found ? d.nodes_shared : d.nodes_added).insert(r.id);
    }
    for (const auto& l : ln) {
        bool found = false;
        for (const auto& r : rn) found = found || l.id == r.id;
        if (!found) d.nodes_deleted.insert(l.id);
    }

    std::vector<ProtoEdge> le, re;
    for (const auto& [id, e] : left.edges()) le.push_back(e);
    for (const auto& [id, e] : right.edges()) re.push_back(e);
    for (const auto& r : re) {
        bool found = false;
        for (const auto& l : le) found = found || l.id == r.id;
        (found ? d.edges_shared : d.edges_added).insert(r.id);
    }
    for (const auto& l : le) {
        bool found = false;
        for (const auto& r : re) found = found || l.id == r.id;
        if (!found) d.edges_deleted.insert(l.id);
    }

    std::vector<SubQuery> ls, rs;
    for (const auto& [id, s] : left.subqueries()) ls.push_back(s);
    for (const auto& [id, s] : right.subqueries()) rs.push_back(s);
    for (const auto& r : rs) {
        const SubQuery* match = nullptr;
        for (const auto& l : ls)
            if (l.id == r.id) match = &l;
        if (!match || !d.nodes_shared.count(r.node)) {
            d.subqueries_added.insert(r.id);
            continue;
        }
        d.subqueries_shared.insert(r.id);
        bool same = match->node == r.node && match->property == r.property && match->kind == r.kind &&
                    match->condition.has_value() == r.condition.has_value();
        if (same && r.condition)
            same = match->condition->op == r.condition->op && match->condition->negated == r.condition->negated &&
                   match->condition->operand == r.condition->operand;
        if (!same) d.subqueries_changed.insert(r.id);
    }
    for (const auto& l : ls) {
        bool shared = false;
        for (const auto& r : rs) shared = shared || (r.id == l.id && d.subqueries_shared.count(r.id));
        if (!shared) d.subqueries_deleted.insert(l.id);
    }
    return d;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<std::string>> row_multiset(const ResultTable& t) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : t.rows) {
        std::vector<std::string> keys;
        for (const auto& c : r) keys.push_back(cell_key(c));
        out.push_back(std::move(keys));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace kgtest
