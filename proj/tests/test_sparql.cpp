#include <gtest/gtest.h>

#include "kgdiff/error.hpp"
#include "kgdiff/sparql_engine.hpp"
#include "kgdiff/sparql_gen.hpp"
#include "kgdiff/triple_store.hpp"
#include "support.hpp"

using namespace kgdiff;
using kgtest::ex;

TEST(FilterExpression, EncodingsPerRangeKind) {
    EXPECT_EQ(filter_expression({Operator::Gt, false, "10"}, RangeKind::Numeric, "s1"),
              "<http://www.w3.org/2001/XMLSchema#double>(?s1) > \"10\"^^<http://www.w3.org/2001/XMLSchema#double>");
    EXPECT_EQ(filter_expression({Operator::Leq, true, "2020-01-31"}, RangeKind::Date, "s2"),
              "!(<http://www.w3.org/2001/XMLSchema#dateTime>(?s2) <= "
              "\"2020-01-31T00:00:00\"^^<http://www.w3.org/2001/XMLSchema#dateTime>)");
    EXPECT_EQ(filter_expression({Operator::Eq, true, "1"}, RangeKind::Boolean, "s0"),
              "!(<http://www.w3.org/2001/XMLSchema#boolean>(?s0) = "
              "\"true\"^^<http://www.w3.org/2001/XMLSchema#boolean>)");
    EXPECT_EQ(filter_expression({Operator::Contains, false, "Ab\"c"}, RangeKind::Text, "s3"),
              "CONTAINS(LCASE(STR(?s3)), LCASE(\"Ab\\\"c\"))");
    EXPECT_EQ(filter_expression({Operator::Neq, false, "http://x/y"}, RangeKind::Iri, "s4"), "?s4 != <http://x/y>");
    EXPECT_THROW(filter_expression({Operator::Lt, false, "x"}, RangeKind::Text, "s"), OperatorKindError);
}

TEST(GenerateSelect, ProjectionOrderAndLimit) {
    auto b = load_graph_file(kgtest::fixture("fig1_b.graph"));
    auto q = generate_select(b, kgtest::toy(), {.limit = 5, .expand_subclasses = false});
    ASSERT_EQ(q.projection.size(), 4u);
    EXPECT_EQ(q.projection[0].name, "n0");
    EXPECT_EQ(q.projection[3].name, "s0");
    EXPECT_NE(q.text.find("SELECT ?n0 ?n1 ?n2 ?s0 WHERE {"), std::string::npos);
    EXPECT_EQ(q.text.substr(q.text.size() - 8), " LIMIT 5");
    EXPECT_EQ(q.text.find('\n'), std::string::npos);

    auto c = generate_count(b, kgtest::toy());
    EXPECT_EQ(c.text.rfind("SELECT (COUNT(*) AS ?c) WHERE ", 0), 0u);
    EXPECT_NE(c.text.find(where_block(b, kgtest::toy())), std::string::npos);
}

TEST(GenerateSelect, ExpandsSubclassesIntoUnion) {
    PrototypeGraph g;
    g.add_node(kgtest::toy(), ex("Person"));
    auto plain = generate_select(g, kgtest::toy());
    auto expanded = generate_select(g, kgtest::toy(), {.limit = std::nullopt, .expand_subclasses = true});
    EXPECT_EQ(plain.text.find("UNION"), std::string::npos);
    EXPECT_NE(expanded.text.find("{ ?n0 a <http://example.org/onto/Athlete> . } UNION"), std::string::npos);
}

TEST(GenerateSelect, RejectsEmptyAndInvalidGraphs) {
    EXPECT_THROW(generate_select(PrototypeGraph{}, kgtest::toy()), EmptyGraphError);
    PrototypeGraph g;
    g.insert_unchecked(ProtoNode{NodeId{0}, ex("Ghost")});
    g.set_counters(1, 0, 0);
    EXPECT_THROW(generate_select(g, kgtest::toy()), InvalidGraphError);
}

// ---------------------------------------------------------------------------
// The local engine

namespace {

const TripleStore& tiny() {
    static const TripleStore s = TripleStore::parse(R"(
        @prefix e: <http://e/> .
        @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
        e:a a e:T ; e:n 3 ; e:s "Alpha" ; e:d "2020-01-01"^^xsd:date .
        e:b a e:T ; e:n "7"^^xsd:double ; e:s "beta"@en .
        e:c a e:U ; e:n "x" ; e:r e:a .
    )",
                                                    rdf::Format::Turtle);
    return s;
}

std::size_t rows(const std::string& q) { return sparql::run(q, tiny()).rows.size(); }

}  // namespace

TEST(SparqlEngine, BasicPatternsJoinsAndUnion) {
    EXPECT_EQ(rows("SELECT ?x WHERE { ?x a <http://e/T> }"), 2u);
    EXPECT_EQ(rows("PREFIX e: <http://e/> SELECT * { ?x e:r ?y . ?y e:s ?s }"), 1u);
    EXPECT_EQ(rows("PREFIX e: <http://e/> SELECT ?x WHERE { { ?x a e:T } UNION { ?x a e:U } }"), 3u);
    EXPECT_EQ(rows("PREFIX e: <http://e/> SELECT ?x WHERE { ?x a e:T ; e:s ?s . } LIMIT 1"), 1u);
    EXPECT_EQ(rows("PREFIX e: <http://e/> SELECT ?x WHERE { ?x a e:T } OFFSET 1"), 1u);
    EXPECT_EQ(rows("PREFIX e: <http://e/> SELECT DISTINCT ?t WHERE { ?x a ?t }"), 2u);
}

TEST(SparqlEngine, FiltersCastsAndBuiltins) {
    const std::string p = "PREFIX e: <http://e/> PREFIX xsd: <http://www.w3.org/2001/XMLSchema#> ";
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:n ?n FILTER(xsd:double(?n) > \"5\"^^xsd:double) }"), 1u);
    // cast failure is an error: the row is dropped under negation too
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:n ?n FILTER(!(xsd:double(?n) > \"5\"^^xsd:double)) }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:s ?s FILTER(CONTAINS(LCASE(STR(?s)), LCASE(\"ALP\"))) }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:s ?s FILTER(REGEX(STR(?s), \"^b\")) }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:s ?s FILTER(LANG(?s) = \"en\") }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:r ?y FILTER(?y = e:a && ISIRI(?y)) }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x e:d ?d FILTER(xsd:dateTime(?d) >= \"2020-01-01T00:00:00\"^^xsd:dateTime) }"), 1u);
    EXPECT_EQ(rows(p + "SELECT ?x WHERE { ?x a ?t FILTER(?t IN (e:U)) }"), 1u);
}

TEST(SparqlEngine, CountAndErrors) {
    auto t = sparql::run("SELECT (COUNT(*) AS ?c) WHERE { ?x a <http://e/T> }", tiny());
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0]->value, "2");
    EXPECT_THROW(sparql::run("ASK { ?x ?p ?o }", tiny()), UnsupportedQueryError);
    EXPECT_THROW(sparql::run("SELECT ?x WHERE { ?x ?p ?o . OPTIONAL { ?x ?q ?z } }", tiny()), UnsupportedQueryError);
    EXPECT_THROW(sparql::run("SELECT ?x WHERE { ?x ?p }", tiny()), ParseError);
}

TEST(TripleStore, IndexedMatchEqualsScan) {
    const auto& s = kgtest::dataset("tv_places.ttl");
    EXPECT_LE(s.size(), 200u);
    kgtest::Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto& t = rng.pick(s.triples());
        std::optional<rdf::Term> a, b, c;
        if (rng.chance(0.5)) a = t.subject;
        if (rng.chance(0.5)) b = t.predicate;
        if (rng.chance(0.5)) c = t.object;
        auto m = s.match(a, b, c);
        auto sc = s.scan(a, b, c);
        std::sort(m.begin(), m.end());
        std::sort(sc.begin(), sc.end());
        ASSERT_EQ(m, sc);
    }
}

TEST(EvalLocal, Fig1PatternOnToyData) {
    auto b = load_graph_file(kgtest::fixture("fig1_b.graph"));
    auto t = eval_local(kgtest::dataset("tv_places.ttl"), b, kgtest::toy());
    EXPECT_EQ(t.columns, (std::vector<std::string>{"n0", "n1", "n2", "s0"}));
    EXPECT_EQ(t.rows.size(), 4u);  // Lupin/Paris, Emily/Paris, Emily/Lyon, Riviera/Nice
}

TEST(EvalLocal, ConditionsAgreeWithHandComputedCases) {
    using K = RangeKind;
    auto lit = [](std::string v, std::string dt = {}) { return rdf::Term::literal(std::move(v), std::move(dt)); };
    EXPECT_EQ(condition_holds({Operator::Gt, false, "5"}, K::Numeric, lit("7")), true);
    EXPECT_EQ(condition_holds({Operator::Gt, true, "5"}, K::Numeric, lit("7")), false);
    EXPECT_EQ(condition_holds({Operator::Gt, true, "5"}, K::Numeric, lit("x")), std::nullopt);
    EXPECT_EQ(condition_holds({Operator::Eq, false, "true"}, K::Boolean, lit("1")), true);
    EXPECT_EQ(condition_holds({Operator::Lt, false, "2000-01-01"}, K::Date, lit("1999-12-31T23:59:59Z")), true);
    EXPECT_EQ(condition_holds({Operator::Contains, false, "PAR"}, K::Text, lit("Paris")), true);
    EXPECT_EQ(condition_holds({Operator::Eq, false, "http://x"}, K::Iri, rdf::Term::iri("http://x")), true);
    EXPECT_EQ(condition_holds({Operator::Eq, false, "http://x"}, K::Iri, lit("http://x")), false);
}

// Smaller sibling of the acceptance sweep: both routes agree on random graphs.
TEST(CodegenSoundness, LocalEngineAgreesWithEvalLocal) {
    const Ontology& o = kgtest::toy();
    kgtest::Rng rng(17);
    for (const char* name : {"tv_places.ttl", "authors_medals.ttl", "tissues.ttl"}) {
        const auto& store = kgtest::dataset(name);
        for (int i = 0; i < 10; ++i) {
            auto g = kgtest::random_graph(rng, o, 1 + rng.below(3), rng.below(3), &store);
            auto q = generate_select(g, o, {.limit = std::nullopt, .expand_subclasses = true});
            auto via_engine = sparql::run(q.text, store);
            auto direct = eval_local(store, g, o);
            ASSERT_EQ(via_engine.columns, direct.columns) << q.text;
            ASSERT_EQ(kgtest::row_multiset(via_engine), kgtest::row_multiset(direct)) << q.text;
        }
    }
}
