#include <gtest/gtest.h>

#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"
#include "kgdiff/nl.hpp"
#include "support.hpp"

using namespace kgdiff;
using kgtest::ex;
using nlohmann::json;

namespace {

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

struct NlFixture : ::testing::Test {
    HashingEmbedder embedder;
    EmbeddingIndex index;
    ScriptedLanguageModel lm;
    void SetUp() override { index = build_embedding_index(kgtest::toy(), embedder, kgtest::scratch_dir("nl_index")); }
    NlContext ctx(AuditLog* audit = nullptr, std::size_t k = kDefaultCandidates) {
        NlContext c;
        c.index = &index;
        c.embedder = &embedder;
        c.lm = &lm;
        c.audit = audit;
        c.k = k;
        return c;
    }
};

}  // namespace

TEST(GraphSummary, ListsElementsWithIds) {
    auto g = load_graph_file(kgtest::fixture("fig1_b.graph"));
    auto s = graph_summary(g, kgtest::toy());
    EXPECT_TRUE(contains(s, "node 2: country <" + ex("Country") + ">\n"));
    EXPECT_TRUE(contains(s, "edge 1: node 1 -<" + ex("country") + ">-> node 2\n"));
    EXPECT_TRUE(contains(s, "subquery 1: node 2 <" + ex("name") + "> constraint eq \"France\"\n"));
    EXPECT_EQ(graph_summary(PrototypeGraph{}, kgtest::toy()), "(empty graph)\n");
}

TEST(FewShot, ShippedExemplarsLoad) {
    auto shots = load_few_shot(default_few_shot_path());
    ASSERT_FALSE(shots.empty());
    for (const auto& s : shots) EXPECT_NO_THROW(changeset_from_json(s.changeset)) << s.request;
    auto dir = kgtest::scratch_dir("fewshot_bad");
    std::ofstream(dir / "bad.json") << R"({"examples": [{"graph": 1}]})";
    EXPECT_THROW(load_few_shot(dir / "bad.json"), StorageError);
}

TEST(BuildPrompt, CarriesGraphVocabularyAndExemplars) {
    const Ontology& o = kgtest::toy();
    auto g = load_graph_file(kgtest::fixture("fig1_a.graph"));
    Candidates c;
    c.classes = {{VocabKind::Class, ex("Country"), 1.0}};
    c.links = {{VocabKind::Link, ex("country"), 1.0}};
    auto schema = build_constrained_schema(c, g, o);
    std::vector<FewShotExample> shots{{"(empty graph)\n", "ships", json{{"add_nodes", json::array()}}}};
    auto msgs = build_prompt("shows set in French cities", schema, g, o, shots);
    ASSERT_EQ(msgs.size(), 4u);
    EXPECT_EQ(msgs[0].role, "system");
    EXPECT_EQ(msgs[1].role, "user");
    EXPECT_TRUE(contains(msgs[1].content, "Request: ships"));
    EXPECT_EQ(msgs[2].role, "assistant");
    const auto& user = msgs[3].content;
    EXPECT_TRUE(contains(user, "node 1: city"));
    EXPECT_TRUE(contains(user, "- <" + ex("City") + "> <" + ex("country") + "> <" + ex("Country") + ">"));
    EXPECT_TRUE(contains(user, "- <" + ex("populationTotal") + "> on <" + ex("PopulatedPlace") + ">, numeric"));
    EXPECT_FALSE(contains(user, ex("Ship")));
    EXPECT_TRUE(contains(user, "\nRequest: shows set in French cities"));
}

TEST_F(NlFixture, ProposalIsRepairedAppliedToACopyAndAudited) {
    const Ontology& o = kgtest::toy();
    auto g = load_graph_file(kgtest::fixture("fig1_a.graph"));
    const auto before = g;
    lm.push(R"({"add_edges": [{"tail": 1, "link": ")" + ex("country") + R"(", "head": "fr"}],
                "add_constraints": [{"node": "fr", "property": ")" + ex("name") +
            R"(", "condition": {"op": "eq", "negated": false, "value": "France"}}]})");
    AuditLog audit(kgtest::scratch_dir("nl_audit") / "nl.jsonl");
    auto p = propose_changeset(ctx(&audit), "shows located in a city of the country France", g, o);
    EXPECT_EQ(g, before);
    EXPECT_EQ(p.base_version, g.version());
    // "fr" was never declared: synthesized with the link's target class
    EXPECT_EQ(p.repaired.changeset.add_nodes, (std::vector<AddNode>{{"fr", ex("Country")}}));
    ASSERT_EQ(p.repaired.changeset.add_edges.size(), 1u);
    EXPECT_EQ(p.repaired.changeset.add_edges[0].tail, NodeRef{NodeId{1}});
    EXPECT_EQ(p.applied.diff.nodes_added.size(), 1u);
    EXPECT_EQ(p.applied.diff.edges_added.size(), 1u);
    EXPECT_EQ(p.applied.diff.subqueries_added.size(), 1u);
    EXPECT_TRUE(validate(p.applied.graph, o).empty());

    ASSERT_EQ(lm.prompts().size(), 1u);
    std::ifstream in(audit.file());
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    auto rec = json::parse(line);
    EXPECT_EQ(rec["graph_version"], g.version_tag());
    EXPECT_TRUE(rec.contains("reply") && rec.contains("prompt") && rec.contains("time"));
}

TEST_F(NlFixture, OffSchemaRepliesAreRejected) {
    const Ontology& o = kgtest::toy();
    auto g = load_graph_file(kgtest::fixture("fig1_a.graph"));
    lm.push("I think you want countries");
    EXPECT_THROW(propose_changeset(ctx(), "country", g, o), SchemaViolationError);
    lm.push(R"({"add_nodes": [{"ref": "t", "class": "http://example.org/onto/Tissue"}]})");
    EXPECT_THROW(propose_changeset(ctx(nullptr, 2), "television", g, o), SchemaViolationError);
    EXPECT_THROW(propose_changeset(ctx(), "anything", g, o), LmError) << "script exhausted";
    NlContext empty;
    EXPECT_THROW(propose_changeset(empty, "x", g, o), LmError);
}

TEST(HttpLanguageModel, ChatCompletionsWithJsonSchema) {
    httplib::Server server;
    json seen;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "{\"add_nodes\": []}"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    server.Post("/broken/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\": []}", "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    HttpLanguageModel lm(base + "/v1", "tiny-model", "k");
    json schema = {{"type", "object"}};
    EXPECT_EQ(lm.complete({{"user", "hi"}}, schema), "{\"add_nodes\": []}");
    EXPECT_EQ(seen["model"], "tiny-model");
    EXPECT_EQ(seen["response_format"]["json_schema"]["schema"], schema);
    EXPECT_EQ(seen["messages"][0]["content"], "hi");

    HttpLanguageModel broken(base + "/broken", "m");
    EXPECT_THROW(broken.complete({{"user", "hi"}}, schema), LmError);
    HttpLanguageModel missing(base + "/nothing-here", "m");
    EXPECT_THROW(missing.complete({{"user", "hi"}}, schema), LmError);
    server.stop();
    t.join();
}
