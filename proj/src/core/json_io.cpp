#include "kgdiff/json_io.hpp"

#include <stdexcept>

#include "kgdiff/error.hpp"

namespace kgdiff {

using nlohmann::json;

json term_to_json(const rdf::Term& t) {
    json j;
    switch (t.kind) {
        case rdf::TermKind::Iri: j["type"] = "uri"; break;
        case rdf::TermKind::BlankNode: j["type"] = "bnode"; break;
        case rdf::TermKind::Literal:
            j["type"] = "literal";
            if (!t.lang.empty()) j["xml:lang"] = t.lang;
            else if (!t.datatype.empty()) j["datatype"] = t.datatype;
            break;
    }
    j["value"] = t.value;
    return j;
}

json to_json(const ResultTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& c : row) r.push_back(c ? term_to_json(*c) : json());
        rows.push_back(std::move(r));
    }
    return {{"columns", t.columns}, {"rows", std::move(rows)}, {"row_count", t.rows.size()}};
}

namespace {

template <class Id>
json ids(const std::set<Id>& s) {
    json a = json::array();
    for (auto id : s) a.push_back(id.value);
    return a;
}

json keys(const std::set<InstanceKey>& s) {
    json a = json::array();
    for (const auto& key : s) {
        json k = json::object();
        for (const auto& [node, iri] : key) k[node_variable(node)] = iri;
        a.push_back(std::move(k));
    }
    return a;
}

}  // namespace

json to_json(const GraphDiff& d) {
    return {{"nodes", {{"added", ids(d.nodes_added)}, {"deleted", ids(d.nodes_deleted)}, {"shared", ids(d.nodes_shared)}}},
            {"edges", {{"added", ids(d.edges_added)}, {"deleted", ids(d.edges_deleted)}, {"shared", ids(d.edges_shared)}}},
            {"subqueries",
             {{"added", ids(d.subqueries_added)},
              {"deleted", ids(d.subqueries_deleted)},
              {"shared", ids(d.subqueries_shared)},
              {"changed", ids(d.subqueries_changed)}}},
            {"identity", d.is_identity()}};
}

json to_json(const InstanceDiff& d) {
    json key_nodes = json::array();
    for (auto id : d.key_nodes) key_nodes.push_back(id.value);
    return {{"key_nodes", key_nodes},
            {"added", keys(d.instances_added)},
            {"removed", keys(d.instances_removed)},
            {"shared", keys(d.instances_shared)},
            {"counts",
             {{"added", d.instances_added.size()},
              {"removed", d.instances_removed.size()},
              {"shared", d.instances_shared.size()}}}};
}

json to_json(const std::vector<RepairAction>& report) {
    json a = json::array();
    for (const auto& r : report) a.push_back({{"action", to_string(r.kind)}, {"detail", r.detail}});
    return a;
}

json to_json(const std::vector<Violation>& violations) {
    json a = json::array();
    for (const auto& v : violations)
        a.push_back({{"kind", to_string(v.kind)}, {"id", v.id}, {"rule", to_string(v.rule)}, {"message", v.message}});
    return a;
}

json graph_to_json(const PrototypeGraph& g) { return json::parse(serialize_graph(g)); }

json ontology_summary(const Ontology& o) {
    return {{"id", o.content_hash()},
            {"classes", o.classes().size()},
            {"links", o.links().size()},
            {"properties", o.properties().size()},
            {"ignored_triples", o.ignored_triples()},
            {"warnings", o.warnings()}};
}

json ontology_listing(const Ontology& o) {
    json classes = json::array(), links = json::array(), properties = json::array();
    for (const auto& [id, c] : o.classes())
        classes.push_back({{"id", id}, {"label", c.label}, {"comment", c.comment}, {"parents", c.parents}});
    for (const auto& [id, l] : o.links())
        links.push_back({{"id", id}, {"label", l.label}, {"comment", l.comment}, {"fromtype", l.fromtype}, {"totype", l.totype}});
    for (const auto& [id, p] : o.properties())
        properties.push_back({{"id", id},
                              {"label", p.label},
                              {"comment", p.comment},
                              {"domain", p.domain},
                              {"range_kind", to_string(p.range_kind)},
                              {"datatype", p.datatype}});
    json out = ontology_summary(o);
    out["class_list"] = classes;
    out["link_list"] = links;
    out["property_list"] = properties;
    return out;
}

std::string diff_report(const PrototypeGraph& left, const PrototypeGraph& right, const Ontology* o) {
    const GraphDiff d = diff_graphs(left, right);
    auto cls_label = [&](const std::string& cls) {
        if (o && o->has_class(cls) && !o->class_def(cls).label.empty()) return o->class_def(cls).label;
        return local_name(cls);
    };
    auto node_text = [&](const PrototypeGraph& g, NodeId id) {
        return "node " + std::to_string(id.value) + " (" + cls_label(g.node(id).cls) + ")";
    };
    auto edge_text = [&](const PrototypeGraph& g, EdgeId id) {
        const auto& e = g.edge(id);
        return "edge " + std::to_string(id.value) + " " + node_text(g, e.tail) + " -" + local_name(e.link) + "-> " +
               node_text(g, e.head);
    };
    auto sub_text = [&](const PrototypeGraph& g, SubQueryId id) {
        const auto& s = g.subquery(id);
        std::string out = std::string(to_string(s.kind)) + " " + std::to_string(id.value) + " " +
                          local_name(s.property) + " on node " + std::to_string(s.node.value);
        if (s.condition)
            out += std::string(": ") + (s.condition->negated ? "not " : "") + std::string(to_string(s.condition->op)) +
                   " \"" + s.condition->operand + "\"";
        return out;
    };
    std::string out;
    for (auto id : d.nodes_deleted) out += "- " + node_text(left, id) + "\n";
    for (auto id : d.nodes_added) out += "+ " + node_text(right, id) + "\n";
    for (auto id : d.edges_deleted) out += "- " + edge_text(left, id) + "\n";
    for (auto id : d.edges_added) out += "+ " + edge_text(right, id) + "\n";
    for (auto id : d.subqueries_deleted) out += "- " + sub_text(left, id) + "\n";
    for (auto id : d.subqueries_added) out += "+ " + sub_text(right, id) + "\n";
    for (auto id : d.subqueries_changed) out += "~ " + sub_text(left, id) + "  =>  " + sub_text(right, id) + "\n";
    if (out.empty()) out = "no differences\n";
    return out;
}

Condition condition_from_json(const json& j) {
    try {
        Condition c;
        c.op = operator_from_string(j.at("op").get<std::string>());
        c.negated = j.value("negated", false);
        const json& v = j.contains("value") ? j.at("value") : j.at("operand");
        c.operand = v.is_string() ? v.get<std::string>() : v.dump();
        return c;
    } catch (const json::exception& e) {
        throw GraphFormatError(std::string("malformed condition: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw GraphFormatError(e.what());
    }
}

json condition_to_json(const Condition& c) {
    return {{"op", to_string(c.op)}, {"negated", c.negated}, {"value", c.operand}};
}

}  // namespace kgdiff
