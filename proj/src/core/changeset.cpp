#include "kgdiff/changeset.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"

namespace kgdiff {

using nlohmann::json;

std::string to_string(const NodeRef& r) {
    if (const auto* id = std::get_if<NodeId>(&r)) return "node " + std::to_string(id->value);
    return "ref '" + std::get<std::string>(r) + "'";
}

bool ChangeSet::empty() const noexcept {
    return add_nodes.empty() && add_edges.empty() && delete_nodes.empty() && delete_edges.empty() &&
           add_constraints.empty() && add_values.empty() && delete_subqueries.empty();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json ref_json(const NodeRef& r) {
    if (const auto* id = std::get_if<NodeId>(&r)) return id->value;
    return std::get<std::string>(r);
}

[[noreturn]] void shape_error(const std::string& where, const std::string& what) {
    throw SchemaViolationError(where + ": " + what);
}

NodeRef ref_from(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return NodeId{j.get<std::uint64_t>()};
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return NodeId{static_cast<std::uint64_t>(j.get<std::int64_t>())};
    if (j.is_string()) return j.get<std::string>();
    shape_error(where, "expected a node id or a temporary reference string");
}

std::string string_from(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) shape_error(where, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

const json& field(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) shape_error(where, std::string("missing field '") + key + "'");
    return *it;
}

void only_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    if (!obj.is_object()) shape_error(where, "expected an object");
    for (const auto& [k, _] : obj.items())
        if (std::none_of(keys.begin(), keys.end(), [&](const char* allowed) { return k == allowed; }))
            shape_error(where, "unexpected field '" + k + "'");
}

template <class Id>
std::vector<Id> ids_from(const json& arr, const std::string& where) {
    std::vector<Id> out;
    for (const auto& j : arr) {
        if (!j.is_number_integer() || j.get<std::int64_t>() < 0) shape_error(where, "expected a non-negative id");
        out.push_back(Id{j.get<std::uint64_t>()});
    }
    return out;
}

}  // namespace

json changeset_to_json(const ChangeSet& cs) {
    json doc = json::object();
    doc["add_nodes"] = json::array();
    for (const auto& n : cs.add_nodes) doc["add_nodes"].push_back({{"ref", n.ref}, {"class", n.cls}});
    doc["add_edges"] = json::array();
    for (const auto& e : cs.add_edges)
        doc["add_edges"].push_back({{"tail", ref_json(e.tail)}, {"link", e.link}, {"head", ref_json(e.head)}});
    doc["delete_nodes"] = json::array();
    for (auto id : cs.delete_nodes) doc["delete_nodes"].push_back(id.value);
    doc["delete_edges"] = json::array();
    for (auto id : cs.delete_edges) doc["delete_edges"].push_back(id.value);
    doc["add_constraints"] = json::array();
    for (const auto& c : cs.add_constraints)
        doc["add_constraints"].push_back({{"node", ref_json(c.node)},
                                          {"property", c.property},
                                          {"condition",
                                           {{"op", to_string(c.condition.op)},
                                            {"negated", c.condition.negated},
                                            {"value", c.condition.operand}}}});
    doc["add_values"] = json::array();
    for (const auto& v : cs.add_values) doc["add_values"].push_back({{"node", ref_json(v.node)}, {"property", v.property}});
    doc["delete_subqueries"] = json::array();
    for (auto id : cs.delete_subqueries) doc["delete_subqueries"].push_back(id.value);
    return doc;
}

ChangeSet changeset_from_json(const json& doc) {
    only_keys(doc, {"add_nodes", "add_edges", "delete_nodes", "delete_edges", "add_constraints", "add_values",
                    "delete_subqueries"},
              "change set");
    auto list = [&](const char* key) -> json {
        auto it = doc.find(key);
        if (it == doc.end() || it->is_null()) return json::array();
        if (!it->is_array()) shape_error(key, "expected an array");
        return *it;
    };
    ChangeSet cs;
    for (const auto& j : list("add_nodes")) {
        only_keys(j, {"ref", "class"}, "add_nodes");
        cs.add_nodes.push_back({string_from(j, "ref", "add_nodes"), string_from(j, "class", "add_nodes")});
    }
    for (const auto& j : list("add_edges")) {
        only_keys(j, {"tail", "link", "head"}, "add_edges");
        cs.add_edges.push_back({ref_from(field(j, "tail", "add_edges"), "add_edges"), string_from(j, "link", "add_edges"),
                                ref_from(field(j, "head", "add_edges"), "add_edges")});
    }
    cs.delete_nodes = ids_from<NodeId>(list("delete_nodes"), "delete_nodes");
    cs.delete_edges = ids_from<EdgeId>(list("delete_edges"), "delete_edges");
    cs.delete_subqueries = ids_from<SubQueryId>(list("delete_subqueries"), "delete_subqueries");
    for (const auto& j : list("add_constraints")) {
        only_keys(j, {"node", "property", "condition"}, "add_constraints");
        AddConstraint c;
        c.node = ref_from(field(j, "node", "add_constraints"), "add_constraints");
        c.property = string_from(j, "property", "add_constraints");
        const json& cond = field(j, "condition", "add_constraints");
        only_keys(cond, {"op", "negated", "value"}, "condition");
        try {
            c.condition.op = operator_from_string(string_from(cond, "op", "condition"));
        } catch (const std::invalid_argument& e) {
            shape_error("condition", e.what());
        }
        if (auto it = cond.find("negated"); it != cond.end()) {
            if (!it->is_boolean()) shape_error("condition", "'negated' must be a boolean");
            c.condition.negated = it->get<bool>();
        }
        const json& value = field(cond, "value", "condition");
        if (value.is_string()) c.condition.operand = value.get<std::string>();
        else if (value.is_number() || value.is_boolean()) c.condition.operand = value.dump();
        else shape_error("condition", "'value' must be a string, number or boolean");
        cs.add_constraints.push_back(std::move(c));
    }
    for (const auto& j : list("add_values")) {
        only_keys(j, {"node", "property"}, "add_values");
        cs.add_values.push_back({ref_from(field(j, "node", "add_values"), "add_values"), string_from(j, "property", "add_values")});
    }
    return cs;
}

ChangeSet parse_changeset(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaViolationError(std::string("change set is not JSON: ") + e.what());
    }
    return changeset_from_json(doc);
}

// ---------------------------------------------------------------------------
// Constrained schema

ConstrainedSchema build_constrained_schema(const Candidates& candidates, const PrototypeGraph& g,
                                           const Ontology& o) {
    ConstrainedSchema s;
    for (const auto& c : candidates.classes)
        if (o.has_class(c.id)) s.classes.insert(c.id);
    for (const auto& l : candidates.links)
        if (o.find_link(l.id)) s.links.insert(l.id);
    for (const auto& [id, n] : g.nodes()) {
        s.classes.insert(n.cls);
        s.nodes.insert(id);
    }
    for (const auto& [id, e] : g.edges()) {
        s.links.insert(e.link);
        s.edges.insert(id);
    }
    for (const auto& [id, q] : g.subqueries()) s.subqueries.insert(id);
    for (const auto& cls : s.classes)
        for (const auto& p : o.properties_of(cls)) s.properties.insert(p.id);
    for (const auto& link : s.links) {
        const LinkDef* l = o.find_link(link);
        if (!l) continue;
        for (const auto& from : s.classes) {
            if (!o.subtype_of(from, l->fromtype)) continue;
            for (const auto& to : s.classes)
                if (o.subtype_of(to, l->totype)) s.rules.insert({from, link, to});
        }
    }
    return s;
}

json ConstrainedSchema::json_schema() const {
    auto enum_of = [](const auto& values, json base) {
        json arr = json::array();
        for (const auto& v : values) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, std::string>) arr.push_back(v);
            else arr.push_back(v.value);
        }
        if (arr.empty()) return json{{"not", json::object()}};
        base["enum"] = arr;
        return base;
    };
    auto array_of = [](json items) { return json{{"type", "array"}, {"items", std::move(items)}}; };
    auto object_of = [](json props) {
        json required = json::array();
        for (const auto& [k, _] : props.items()) required.push_back(k);
        return json{{"type", "object"}, {"properties", std::move(props)}, {"required", required},
                    {"additionalProperties", false}};
    };
    const json node_ref = {{"anyOf", {enum_of(nodes, {{"type", "integer"}}), {{"type", "string"}}}}};
    json ops = json::array();
    for (auto op : {Operator::Eq, Operator::Neq, Operator::Lt, Operator::Leq, Operator::Gt, Operator::Geq,
                    Operator::Contains, Operator::Regex})
        ops.push_back(to_string(op));

    json props = {
        {"add_nodes", array_of(object_of({{"ref", {{"type", "string"}}}, {"class", enum_of(classes, {{"type", "string"}})}}))},
        {"add_edges", array_of(object_of({{"tail", node_ref}, {"link", enum_of(links, {{"type", "string"}})}, {"head", node_ref}}))},
        {"delete_nodes", array_of(enum_of(nodes, {{"type", "integer"}}))},
        {"delete_edges", array_of(enum_of(edges, {{"type", "integer"}}))},
        {"add_constraints",
         array_of(object_of({{"node", node_ref},
                             {"property", enum_of(properties, {{"type", "string"}})},
                             {"condition", object_of({{"op", {{"type", "string"}, {"enum", ops}}},
                                                      {"negated", {{"type", "boolean"}}},
                                                      {"value", {{"type", "string"}}}})}}))},
        {"add_values", array_of(object_of({{"node", node_ref}, {"property", enum_of(properties, {{"type", "string"}})}}))},
        {"delete_subqueries", array_of(enum_of(subqueries, {{"type", "integer"}}))},
    };
    json schema = object_of(std::move(props));
    schema["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    schema["title"] = "ChangeSet";
    json rules_doc = json::array();
    for (const auto& r : rules) rules_doc.push_back({r.from, r.link, r.to});
    schema["x-connection-rules"] = rules_doc;
    return schema;
}

void check_shape(const ChangeSet& cs, const ConstrainedSchema& schema) {
    for (const auto& n : cs.add_nodes)
        if (!schema.classes.count(n.cls)) throw SchemaViolationError("class outside the allowed set: " + n.cls);
    for (const auto& e : cs.add_edges)
        if (!schema.links.count(e.link)) throw SchemaViolationError("link outside the allowed set: " + e.link);
    for (const auto& c : cs.add_constraints)
        if (!schema.properties.count(c.property))
            throw SchemaViolationError("property outside the allowed set: " + c.property);
    for (const auto& v : cs.add_values)
        if (!schema.properties.count(v.property))
            throw SchemaViolationError("property outside the allowed set: " + v.property);
}

// ---------------------------------------------------------------------------
// Repair

std::string_view to_string(RepairAction::Kind kind) {
    switch (kind) {
        case RepairAction::Kind::Synthesized: return "synthesized";
        case RepairAction::Kind::Flipped: return "flipped";
        case RepairAction::Kind::Dropped: return "dropped";
    }
    return "dropped";
}

namespace {

std::string describe(const AddEdge& e) { return to_string(e.tail) + " -" + e.link + "-> " + to_string(e.head); }

template <class Id, class Exists>
std::vector<Id> clean_ids(const std::vector<Id>& ids, Exists exists, const char* what,
                          std::vector<RepairAction>& report) {
    std::vector<Id> out;
    for (Id id : ids) {
        if (std::find(out.begin(), out.end(), id) != out.end()) continue;
        if (!exists(id)) {
            report.push_back({RepairAction::Kind::Dropped, std::string("delete of unknown ") + what + " " +
                                                               std::to_string(id.value)});
            continue;
        }
        out.push_back(id);
    }
    return out;
}

}  // namespace

RepairResult repair_changeset(const ChangeSet& raw, const PrototypeGraph& g, const Ontology& o) {
    RepairResult r;
    auto& cs = r.changeset;
    auto& report = r.report;
    auto drop = [&](std::string detail) { report.push_back({RepairAction::Kind::Dropped, std::move(detail)}); };

    cs.delete_nodes = clean_ids(raw.delete_nodes, [&](NodeId id) { return g.nodes().count(id) > 0; }, "node", report);
    cs.delete_edges = clean_ids(raw.delete_edges, [&](EdgeId id) { return g.edges().count(id) > 0; }, "edge", report);
    cs.delete_subqueries = clean_ids(raw.delete_subqueries, [&](SubQueryId id) { return g.subqueries().count(id) > 0; },
                                     "sub-query", report);
    const std::set<NodeId> deleted(cs.delete_nodes.begin(), cs.delete_nodes.end());

    std::map<std::string, std::string> declared;
    for (const auto& n : raw.add_nodes) {
        if (n.ref.empty()) drop("node with an empty reference");
        else if (!o.has_class(n.cls)) drop("node '" + n.ref + "' of unknown class " + n.cls);
        else if (declared.count(n.ref)) drop("second declaration of ref '" + n.ref + "'");
        else {
            declared[n.ref] = n.cls;
            cs.add_nodes.push_back(n);
        }
    }

    auto class_of = [&](const NodeRef& ref) -> std::optional<std::string> {
        if (const auto* id = std::get_if<NodeId>(&ref)) {
            auto it = g.nodes().find(*id);
            if (it == g.nodes().end() || deleted.count(*id)) return std::nullopt;
            return it->second.cls;
        }
        auto it = declared.find(std::get<std::string>(ref));
        if (it == declared.end()) return std::nullopt;
        return it->second;
    };

    // (1) synthesize endpoints that name undeclared temporary refs
    for (const auto& e : raw.add_edges) {
        const LinkDef* l = o.find_link(e.link);
        if (!l) continue;
        auto synthesize = [&](const NodeRef& ref, const std::string& cls) {
            const auto* name = std::get_if<std::string>(&ref);
            if (!name || name->empty() || declared.count(*name)) return;
            declared[*name] = cls;
            cs.add_nodes.push_back({*name, cls});
            report.push_back({RepairAction::Kind::Synthesized, "node '" + *name + "' of class " + cls + " for " + describe(e)});
        };
        synthesize(e.tail, l->fromtype);
        synthesize(e.head, l->totype);
    }

    // (2) flip reversed edges, (3) drop what still does not fit
    for (auto e : raw.add_edges) {
        const LinkDef* l = o.find_link(e.link);
        if (!l) {
            drop("edge with unknown link: " + describe(e));
            continue;
        }
        auto tail = class_of(e.tail);
        auto head = class_of(e.head);
        if (!tail || !head) {
            drop("edge with an unknown or deleted endpoint: " + describe(e));
            continue;
        }
        auto admissible = [&](const std::string& t, const std::string& h) {
            return o.subtype_of(t, l->fromtype) && o.subtype_of(h, l->totype);
        };
        if (!admissible(*tail, *head)) {
            if (admissible(*head, *tail)) {
                std::swap(e.tail, e.head);
                report.push_back({RepairAction::Kind::Flipped, describe(e)});
            } else {
                drop("edge not admitted by the ontology: " + describe(e));
                continue;
            }
        }
        cs.add_edges.push_back(std::move(e));
    }

    auto property_fits = [&](const NodeRef& node, const std::string& property, std::string& why) -> const PropertyDef* {
        auto cls = class_of(node);
        if (!cls) {
            why = "unknown or deleted " + to_string(node);
            return nullptr;
        }
        const PropertyDef* p = o.find_property(property);
        if (!p) {
            why = "unknown property " + property;
            return nullptr;
        }
        if (!o.subtype_of(*cls, p->domain)) {
            why = "property " + property + " does not apply to class " + *cls;
            return nullptr;
        }
        return p;
    };
    for (const auto& c : raw.add_constraints) {
        std::string why;
        const PropertyDef* p = property_fits(c.node, c.property, why);
        if (p) {
            try {
                check_condition(c.condition, p->range_kind);
            } catch (const OperatorKindError& e) {
                why = e.what();
                p = nullptr;
            }
        }
        if (!p) drop("constraint: " + why);
        else cs.add_constraints.push_back(c);
    }
    for (const auto& v : raw.add_values) {
        std::string why;
        if (!property_fits(v.node, v.property, why)) drop("value: " + why);
        else cs.add_values.push_back(v);
    }

    try {
        auto applied = apply_changeset(g, o, cs);
        auto violations = validate(applied.graph, o);
        if (!violations.empty()) throw UnrepairableError("repaired change set violates: " + violations.front().message);
    } catch (const UnrepairableError&) {
        throw;
    } catch (const Error& e) {
        throw UnrepairableError(std::string("repaired change set does not apply: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Apply

ApplyResult apply_changeset(const PrototypeGraph& g, const Ontology& o, const ChangeSet& cs) {
    ApplyResult r{g.snapshot(), {}, {}};
    PrototypeGraph& work = r.graph;
    for (auto id : cs.delete_subqueries) work.remove_subquery(id);
    for (auto id : cs.delete_edges) work.remove_edge(id);
    for (auto id : cs.delete_nodes) work.remove_node(id);
    for (const auto& n : cs.add_nodes) {
        if (r.refs.count(n.ref)) throw UnknownElementError("temporary ref '" + n.ref + "' declared twice");
        r.refs[n.ref] = work.add_node(o, n.cls);
    }
    auto resolve = [&](const NodeRef& ref) {
        if (const auto* id = std::get_if<NodeId>(&ref)) return *id;
        auto it = r.refs.find(std::get<std::string>(ref));
        if (it == r.refs.end()) throw UnknownElementError("undeclared temporary ref " + to_string(ref));
        return it->second;
    };
    for (const auto& e : cs.add_edges) work.add_edge(o, resolve(e.tail), e.link, resolve(e.head));
    for (const auto& c : cs.add_constraints)
        work.set_subquery(o, resolve(c.node), c.property, SubQueryKind::Constraint, c.condition);
    for (const auto& v : cs.add_values) work.set_subquery(o, resolve(v.node), v.property, SubQueryKind::Value);
    r.diff = diff_graphs(g, work);
    return r;
}

}  // namespace kgdiff
