#include "kgdiff/sparql_gen.hpp"

#include "kgdiff/error.hpp"
#include "kgdiff/results.hpp"
#include "kgdiff/values.hpp"

namespace kgdiff {

namespace {

const std::string kXsdDouble(rdf::vocab::kXsdDouble);
const std::string kXsdDateTime(rdf::vocab::kXsdDateTime);
const std::string kXsdBoolean(rdf::vocab::kXsdBoolean);

std::string comparison(Operator op) {
    switch (op) {
        case Operator::Eq: return "=";
        case Operator::Neq: return "!=";
        case Operator::Lt: return "<";
        case Operator::Leq: return "<=";
        case Operator::Gt: return ">";
        case Operator::Geq: return ">=";
        default: return "=";
    }
}

std::string quoted(const std::string& s) { return "\"" + rdf::escape_string(s) + "\""; }

void require_valid(const PrototypeGraph& g, const Ontology& o) {
    if (g.empty()) throw EmptyGraphError("the prototype graph has no nodes");
    auto violations = validate(g, o);
    if (!violations.empty()) {
        std::string msg = std::to_string(violations.size()) + " validation violation(s): ";
        msg += std::string(to_string(violations.front().rule)) + " on " +
               std::string(to_string(violations.front().kind)) + " " + std::to_string(violations.front().id) +
               " (" + violations.front().message + ")";
        throw InvalidGraphError(msg);
    }
}

}  // namespace

std::string filter_expression(const Condition& c, RangeKind kind, const std::string& var) {
    check_condition(c, kind);
    const std::string v = "?" + var;
    std::string expr;
    switch (kind) {
        case RangeKind::Numeric:
            expr = "<" + kXsdDouble + ">(" + v + ") " + comparison(c.op) + " " +
                   quoted(values::format_number(*values::parse_number(c.operand))) + "^^<" + kXsdDouble + ">";
            break;
        case RangeKind::Date:
            expr = "<" + kXsdDateTime + ">(" + v + ") " + comparison(c.op) + " " +
                   quoted(*values::normalize_datetime(c.operand)) + "^^<" + kXsdDateTime + ">";
            break;
        case RangeKind::Boolean:
            expr = "<" + kXsdBoolean + ">(" + v + ") " + comparison(c.op) + " " +
                   quoted(*values::parse_boolean(c.operand) ? "true" : "false") + "^^<" + kXsdBoolean + ">";
            break;
        case RangeKind::Iri:
            expr = v + " " + comparison(c.op) + " <" + c.operand + ">";
            break;
        case RangeKind::Text:
            if (c.op == Operator::Contains)
                expr = "CONTAINS(LCASE(STR(" + v + ")), LCASE(" + quoted(c.operand) + "))";
            else if (c.op == Operator::Regex)
                expr = "REGEX(STR(" + v + "), " + quoted(c.operand) + ")";
            else
                expr = "STR(" + v + ") " + comparison(c.op) + " " + quoted(c.operand);
            break;
    }
    return c.negated ? "!(" + expr + ")" : expr;
}

std::string where_block(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options) {
    require_valid(g, o);
    std::string out = "{";
    for (const auto& [id, n] : g.nodes()) {
        const std::string v = "?" + node_variable(id);
        if (options.expand_subclasses) {
            auto subs = o.subclasses_of(n.cls);
            if (subs.size() > 1) {
                out += " {";
                for (std::size_t i = 0; i < subs.size(); ++i) {
                    if (i > 0) out += " UNION {";
                    out += " " + v + " a <" + subs[i] + "> . }";
                }
                continue;
            }
        }
        out += " " + v + " a <" + n.cls + "> .";
    }
    for (const auto& [id, e] : g.edges())
        out += " ?" + node_variable(e.tail) + " <" + e.link + "> ?" + node_variable(e.head) + " .";
    for (const auto& [id, s] : g.subqueries()) {
        const std::string var = subquery_variable(id);
        out += " ?" + node_variable(s.node) + " <" + s.property + "> ?" + var + " .";
        if (s.kind == SubQueryKind::Constraint)
            out += " FILTER(" + filter_expression(*s.condition, o.find_property(s.property)->range_kind, var) + ")";
    }
    out += " }";
    return out;
}

SparqlQuery generate_select(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options) {
    SparqlQuery q;
    const std::string where = where_block(g, o, options);
    std::string head = "SELECT";
    for (const auto& [id, n] : g.nodes()) {
        q.projection.push_back({node_variable(id), id});
        head += " ?" + node_variable(id);
    }
    for (const auto& [id, s] : g.subqueries()) {
        if (s.kind != SubQueryKind::Value) continue;
        q.projection.push_back({subquery_variable(id), id});
        head += " ?" + subquery_variable(id);
    }
    q.text = head + " WHERE " + where;
    if (options.limit) q.text += " LIMIT " + std::to_string(*options.limit);
    return q;
}

SparqlQuery generate_count(const PrototypeGraph& g, const Ontology& o, const SparqlOptions& options) {
    SparqlQuery q;
    q.text = "SELECT (COUNT(*) AS ?c) WHERE " + where_block(g, o, options);
    return q;
}

}  // namespace kgdiff
