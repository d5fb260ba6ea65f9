#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgdiff/rdf.hpp"
#include "kgdiff/results.hpp"
#include "kgdiff/triple_store.hpp"

// A small SPARQL 1.1 SELECT engine over TripleStore. It covers the query
// forms this project emits plus common hand-written ones: PREFIX/BASE,
// SELECT [DISTINCT] vars | * | (COUNT([DISTINCT] *|expr) AS ?v), basic graph
// patterns with ';' ',' and 'a' abbreviations, nested groups, UNION, FILTER
// with logical/comparison operators, IN, string builtins, REGEX and XSD
// casts, LIMIT and OFFSET. Anything else raises UnsupportedQueryError.

namespace kgdiff::sparql {

struct PatternTerm {
    std::optional<std::string> variable;  // set for ?x
    rdf::Term term;                       // used when variable is empty
};

struct TriplePattern {
    PatternTerm subject, predicate, object;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Variable, Constant, Or, And, Not, Compare, In, NotIn, Call, Cast };
    Kind kind = Kind::Constant;
    std::string name;  // variable name, comparison operator, function name, or cast IRI
    rdf::Term constant;
    std::vector<ExprPtr> args;
};

struct Group;

struct UnionPattern {
    std::vector<Group> branches;
};

struct Filter {
    ExprPtr expr;
};

struct Group {
    std::vector<std::variant<TriplePattern, Filter, UnionPattern, Group>> elements;
};

struct CountProjection {
    bool distinct = false;
    ExprPtr expr;  // null for COUNT(*)
    std::string alias;
};

struct Query {
    bool distinct = false;
    bool select_all = false;
    std::vector<std::string> variables;
    std::optional<CountProjection> count;
    Group where;
    std::optional<std::size_t> limit;
    std::size_t offset = 0;
};

/// Throws ParseError on syntax errors and UnsupportedQueryError on valid but
/// unsupported constructs.
Query parse_query(std::string_view text);

ResultTable evaluate(const Query& q, const TripleStore& store);

inline ResultTable run(std::string_view text, const TripleStore& store) { return evaluate(parse_query(text), store); }

}  // namespace kgdiff::sparql
