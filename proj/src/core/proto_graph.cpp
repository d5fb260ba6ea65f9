#include "kgdiff/proto_graph.hpp"

#include <fstream>
#include <regex>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"
#include "kgdiff/values.hpp"

namespace kgdiff {

using json = nlohmann::json;

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Node: return "node";
        case ElementKind::Edge: return "edge";
        case ElementKind::SubQuery: return "subquery";
    }
    return "node";
}

ElementKind element_kind_from_string(std::string_view name) {
    if (name == "node") return ElementKind::Node;
    if (name == "edge") return ElementKind::Edge;
    if (name == "subquery") return ElementKind::SubQuery;
    throw std::invalid_argument("unknown element kind: " + std::string(name));
}

std::string_view to_string(Operator op) {
    switch (op) {
        case Operator::Eq: return "eq";
        case Operator::Neq: return "neq";
        case Operator::Lt: return "lt";
        case Operator::Leq: return "leq";
        case Operator::Gt: return "gt";
        case Operator::Geq: return "geq";
        case Operator::Contains: return "contains";
        case Operator::Regex: return "regex";
    }
    return "eq";
}

Operator operator_from_string(std::string_view name) {
    static constexpr std::pair<std::string_view, Operator> kOps[] = {
        {"eq", Operator::Eq}, {"neq", Operator::Neq}, {"lt", Operator::Lt}, {"leq", Operator::Leq},
        {"gt", Operator::Gt}, {"geq", Operator::Geq}, {"contains", Operator::Contains}, {"regex", Operator::Regex}};
    for (auto [n, op] : kOps)
        if (n == name) return op;
    throw std::invalid_argument("unknown operator: " + std::string(name));
}

bool operator_allowed(Operator op, RangeKind kind) {
    switch (op) {
        case Operator::Eq:
        case Operator::Neq: return true;
        case Operator::Lt:
        case Operator::Leq:
        case Operator::Gt:
        case Operator::Geq: return kind == RangeKind::Numeric || kind == RangeKind::Date;
        case Operator::Contains:
        case Operator::Regex: return kind == RangeKind::Text;
    }
    return false;
}

void check_condition(const Condition& c, RangeKind kind) {
    if (!operator_allowed(c.op, kind))
        throw OperatorKindError("operator " + std::string(to_string(c.op)) + " is not valid for " +
                                std::string(to_string(kind)) + " properties");
    const std::string& v = c.operand;
    switch (kind) {
        case RangeKind::Numeric:
            if (!values::parse_number(v)) throw OperatorKindError("operand '" + v + "' is not a number");
            break;
        case RangeKind::Date:
            if (!values::parse_datetime(v)) throw OperatorKindError("operand '" + v + "' is not an ISO-8601 date");
            break;
        case RangeKind::Boolean:
            if (!values::parse_boolean(v)) throw OperatorKindError("operand '" + v + "' is not a boolean");
            break;
        case RangeKind::Iri:
            if (v.empty() || v.find_first_of(" <>\"{}|^`\\") != std::string::npos)
                throw OperatorKindError("operand '" + v + "' is not an IRI");
            break;
        case RangeKind::Text:
            if (c.op == Operator::Regex) {
                try {
                    std::regex re(v);
                } catch (const std::regex_error&) {
                    throw OperatorKindError("operand '" + v + "' is not a valid regular expression");
                }
            }
            break;
    }
}

std::string_view to_string(SubQueryKind kind) { return kind == SubQueryKind::Constraint ? "constraint" : "value"; }

SubQueryKind subquery_kind_from_string(std::string_view name) {
    if (name == "constraint") return SubQueryKind::Constraint;
    if (name == "value") return SubQueryKind::Value;
    throw std::invalid_argument("unknown sub-query kind: " + std::string(name));
}

std::string_view to_string(ViolationRule rule) {
    switch (rule) {
        case ViolationRule::UnknownClass: return "UnknownClass";
        case ViolationRule::UnknownLink: return "UnknownLink";
        case ViolationRule::UnknownProperty: return "UnknownProperty";
        case ViolationRule::DanglingReference: return "DanglingReference";
        case ViolationRule::TypeMismatch: return "TypeMismatch";
        case ViolationRule::PropertyDomain: return "PropertyDomain";
        case ViolationRule::OperatorKind: return "OperatorKind";
        case ViolationRule::ConditionPresence: return "ConditionPresence";
        case ViolationRule::IdCounter: return "IdCounter";
    }
    return "Unknown";
}

std::string canonical_subquery(const SubQuery& s) {
    std::string out = "node=" + std::to_string(s.node.value) + ";property=" + s.property +
                      ";kind=" + std::string(to_string(s.kind));
    if (s.condition) {
        out += ";op=" + std::string(to_string(s.condition->op)) + ";negated=" +
               (s.condition->negated ? "1" : "0") + ";operand=" + json(s.condition->operand).dump();
    }
    return out;
}

// ---------------------------------------------------------------------------

const ProtoNode& PrototypeGraph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownElementError("unknown node " + std::to_string(id.value));
    return it->second;
}

const ProtoEdge& PrototypeGraph::edge(EdgeId id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw UnknownElementError("unknown edge " + std::to_string(id.value));
    return it->second;
}

const SubQuery& PrototypeGraph::subquery(SubQueryId id) const {
    auto it = subqueries_.find(id);
    if (it == subqueries_.end()) throw UnknownElementError("unknown sub-query " + std::to_string(id.value));
    return it->second;
}

NodeId PrototypeGraph::add_node(const Ontology& o, std::string_view cls) {
    o.class_def(cls);
    NodeId id{next_node_++};
    nodes_.emplace(id, ProtoNode{id, std::string(cls)});
    ++version_;
    return id;
}

EdgeId PrototypeGraph::add_edge(const Ontology& o, NodeId tail, std::string_view link, NodeId head) {
    const auto& t = node(tail);
    const auto& h = node(head);
    const LinkDef* l = o.find_link(link);
    if (!l) throw UnknownElementError("unknown link " + std::string(link));
    if (!o.subtype_of(t.cls, l->fromtype))
        throw TypeMismatchError("tail node " + std::to_string(tail.value) + " has class " + t.cls +
                                ", link " + l->id + " expects a subtype of " + l->fromtype);
    if (!o.subtype_of(h.cls, l->totype))
        throw TypeMismatchError("head node " + std::to_string(head.value) + " has class " + h.cls +
                                ", link " + l->id + " expects a subtype of " + l->totype);
    EdgeId id{next_edge_++};
    edges_.emplace(id, ProtoEdge{id, tail, std::string(link), head});
    ++version_;
    return id;
}

SubQueryId PrototypeGraph::set_subquery(const Ontology& o, NodeId n, std::string_view property, SubQueryKind kind,
                                        std::optional<Condition> condition) {
    const auto& target = node(n);
    const PropertyDef* p = o.find_property(property);
    if (!p) throw UnknownElementError("unknown property " + std::string(property));
    if (!o.subtype_of(target.cls, p->domain))
        throw PropertyDomainError("property " + p->id + " (domain " + p->domain + ") does not apply to class " +
                                  target.cls);
    if (kind == SubQueryKind::Constraint) {
        if (!condition) throw OperatorKindError("constraint sub-query requires a condition");
        check_condition(*condition, p->range_kind);
    } else if (condition) {
        throw OperatorKindError("value sub-query takes no condition");
    }
    SubQueryId id{next_subquery_++};
    subqueries_.emplace(id, SubQuery{id, n, std::string(property), kind, std::move(condition), 0});
    ++version_;
    return id;
}

void PrototypeGraph::update_subquery(const Ontology& o, SubQueryId id, Condition condition) {
    auto it = subqueries_.find(id);
    if (it == subqueries_.end()) throw UnknownElementError("unknown sub-query " + std::to_string(id.value));
    SubQuery& s = it->second;
    if (s.kind != SubQueryKind::Constraint) throw OperatorKindError("value sub-query takes no condition");
    const PropertyDef* p = o.find_property(s.property);
    if (!p) throw UnknownElementError("unknown property " + s.property);
    check_condition(condition, p->range_kind);
    s.condition = std::move(condition);
    ++s.revision;
    ++version_;
}

RemovalReport PrototypeGraph::remove_node(NodeId id) {
    node(id);
    RemovalReport report;
    for (auto it = edges_.begin(); it != edges_.end();) {
        if (it->second.tail == id || it->second.head == id) {
            report.edges.push_back(it->first);
            it = edges_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = subqueries_.begin(); it != subqueries_.end();) {
        if (it->second.node == id) {
            report.subqueries.push_back(it->first);
            it = subqueries_.erase(it);
        } else {
            ++it;
        }
    }
    nodes_.erase(id);
    report.nodes.push_back(id);
    ++version_;
    return report;
}

RemovalReport PrototypeGraph::remove_edge(EdgeId id) {
    edge(id);
    edges_.erase(id);
    ++version_;
    RemovalReport report;
    report.edges.push_back(id);
    return report;
}

RemovalReport PrototypeGraph::remove_subquery(SubQueryId id) {
    subquery(id);
    subqueries_.erase(id);
    ++version_;
    RemovalReport report;
    report.subqueries.push_back(id);
    return report;
}

RemovalReport PrototypeGraph::remove_element(ElementKind kind, std::uint64_t id) {
    switch (kind) {
        case ElementKind::Node: return remove_node(NodeId{id});
        case ElementKind::Edge: return remove_edge(EdgeId{id});
        case ElementKind::SubQuery: return remove_subquery(SubQueryId{id});
    }
    throw UnknownElementError("unknown element kind");
}

void PrototypeGraph::insert_unchecked(ProtoNode n) {
    next_node_ = std::max(next_node_, n.id.value + 1);
    nodes_[n.id] = std::move(n);
}

void PrototypeGraph::insert_unchecked(ProtoEdge e) {
    next_edge_ = std::max(next_edge_, e.id.value + 1);
    edges_[e.id] = std::move(e);
}

void PrototypeGraph::insert_unchecked(SubQuery s) {
    next_subquery_ = std::max(next_subquery_, s.id.value + 1);
    subqueries_[s.id] = std::move(s);
}

void PrototypeGraph::set_counters(std::uint64_t next_node, std::uint64_t next_edge, std::uint64_t next_subquery) {
    next_node_ = next_node;
    next_edge_ = next_edge;
    next_subquery_ = next_subquery;
}

// ---------------------------------------------------------------------------

std::vector<Violation> validate(const PrototypeGraph& g, const Ontology& o) {
    std::vector<Violation> out;
    auto add = [&](ElementKind k, std::uint64_t id, ViolationRule r, std::string msg) {
        out.push_back(Violation{k, id, r, std::move(msg)});
    };
    for (const auto& [id, n] : g.nodes()) {
        if (!o.has_class(n.cls)) add(ElementKind::Node, id.value, ViolationRule::UnknownClass, "unknown class " + n.cls);
        if (id.value >= g.next_node_id())
            add(ElementKind::Node, id.value, ViolationRule::IdCounter, "id not below the node counter");
    }
    for (const auto& [id, e] : g.edges()) {
        auto tail = g.nodes().find(e.tail);
        auto head = g.nodes().find(e.head);
        if (tail == g.nodes().end() || head == g.nodes().end()) {
            add(ElementKind::Edge, id.value, ViolationRule::DanglingReference, "edge endpoint missing");
            continue;
        }
        if (id.value >= g.next_edge_id())
            add(ElementKind::Edge, id.value, ViolationRule::IdCounter, "id not below the edge counter");
        const LinkDef* l = o.find_link(e.link);
        if (!l) {
            add(ElementKind::Edge, id.value, ViolationRule::UnknownLink, "unknown link " + e.link);
            continue;
        }
        if (!o.has_class(tail->second.cls) || !o.has_class(head->second.cls)) continue;  // reported on the node
        if (!o.subtype_of(tail->second.cls, l->fromtype))
            add(ElementKind::Edge, id.value, ViolationRule::TypeMismatch,
                "tail class " + tail->second.cls + " is not a subtype of " + l->fromtype);
        else if (!o.subtype_of(head->second.cls, l->totype))
            add(ElementKind::Edge, id.value, ViolationRule::TypeMismatch,
                "head class " + head->second.cls + " is not a subtype of " + l->totype);
    }
    for (const auto& [id, s] : g.subqueries()) {
        auto n = g.nodes().find(s.node);
        if (n == g.nodes().end()) {
            add(ElementKind::SubQuery, id.value, ViolationRule::DanglingReference, "sub-query node missing");
            continue;
        }
        if (id.value >= g.next_subquery_id())
            add(ElementKind::SubQuery, id.value, ViolationRule::IdCounter, "id not below the sub-query counter");
        const PropertyDef* p = o.find_property(s.property);
        if (!p) {
            add(ElementKind::SubQuery, id.value, ViolationRule::UnknownProperty, "unknown property " + s.property);
            continue;
        }
        if (o.has_class(n->second.cls) && !o.subtype_of(n->second.cls, p->domain))
            add(ElementKind::SubQuery, id.value, ViolationRule::PropertyDomain,
                "property " + p->id + " does not apply to class " + n->second.cls);
        if ((s.kind == SubQueryKind::Constraint) != s.condition.has_value()) {
            add(ElementKind::SubQuery, id.value, ViolationRule::ConditionPresence,
                "condition must be present iff the sub-query is a constraint");
        } else if (s.condition) {
            try {
                check_condition(*s.condition, p->range_kind);
            } catch (const OperatorKindError& e) {
                add(ElementKind::SubQuery, id.value, ViolationRule::OperatorKind, e.what());
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string serialize_graph(const PrototypeGraph& g) {
    json nodes = json::array();
    for (const auto& [id, n] : g.nodes()) nodes.push_back({{"id", id.value}, {"class", n.cls}});
    json edges = json::array();
    for (const auto& [id, e] : g.edges())
        edges.push_back({{"id", id.value}, {"tail", e.tail.value}, {"link", e.link}, {"head", e.head.value}});
    json subs = json::array();
    for (const auto& [id, s] : g.subqueries()) {
        json j = {{"id", id.value},
                  {"node", s.node.value},
                  {"property", s.property},
                  {"kind", to_string(s.kind)},
                  {"revision", s.revision}};
        if (s.condition)
            j["condition"] = {{"op", to_string(s.condition->op)},
                              {"negated", s.condition->negated},
                              {"operand", s.condition->operand}};
        subs.push_back(std::move(j));
    }
    json doc = {{"format", kGraphFormatVersion},
                {"version", g.version()},
                {"next_ids", {{"node", g.next_node_id()}, {"edge", g.next_edge_id()}, {"subquery", g.next_subquery_id()}}},
                {"nodes", std::move(nodes)},
                {"edges", std::move(edges)},
                {"subqueries", std::move(subs)}};
    return doc.dump(2) + "\n";
}

PrototypeGraph deserialize_graph(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw GraphFormatError(std::string("graph file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<int>() != kGraphFormatVersion)
            throw GraphFormatError("unsupported graph format " + doc.at("format").dump());
        PrototypeGraph g;
        for (const auto& n : doc.at("nodes"))
            g.insert_unchecked(ProtoNode{NodeId{n.at("id").get<std::uint64_t>()}, n.at("class").get<std::string>()});
        for (const auto& e : doc.at("edges"))
            g.insert_unchecked(ProtoEdge{EdgeId{e.at("id").get<std::uint64_t>()},
                                         NodeId{e.at("tail").get<std::uint64_t>()}, e.at("link").get<std::string>(),
                                         NodeId{e.at("head").get<std::uint64_t>()}});
        for (const auto& s : doc.at("subqueries")) {
            SubQuery q;
            q.id = SubQueryId{s.at("id").get<std::uint64_t>()};
            q.node = NodeId{s.at("node").get<std::uint64_t>()};
            q.property = s.at("property").get<std::string>();
            q.kind = subquery_kind_from_string(s.at("kind").get<std::string>());
            q.revision = s.value("revision", std::uint64_t{0});
            if (s.contains("condition")) {
                const auto& c = s.at("condition");
                q.condition = Condition{operator_from_string(c.at("op").get<std::string>()),
                                        c.value("negated", false), c.at("operand").get<std::string>()};
            }
            g.insert_unchecked(std::move(q));
        }
        if (doc.contains("next_ids")) {
            const auto& ids = doc.at("next_ids");
            g.set_counters(std::max(g.next_node_id(), ids.at("node").get<std::uint64_t>()),
                           std::max(g.next_edge_id(), ids.at("edge").get<std::uint64_t>()),
                           std::max(g.next_subquery_id(), ids.at("subquery").get<std::uint64_t>()));
        }
        g.set_version(doc.value("version", std::uint64_t{0}));
        return g;
    } catch (const json::exception& e) {
        throw GraphFormatError(std::string("malformed graph document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw GraphFormatError(std::string("malformed graph document: ") + e.what());
    }
}

PrototypeGraph load_graph_file(const std::filesystem::path& path) { return deserialize_graph(read_file(path)); }

void save_graph_file(const PrototypeGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StorageError("cannot write " + path.string());
    out << serialize_graph(g);
}

}  // namespace kgdiff
