#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"
#include "kgdiff/overview.hpp"
#include "kgdiff/values.hpp"
#include "support.hpp"

using namespace kgdiff;
using kgtest::ex;

TEST(SelectChart, DecisionTable) {
    const auto C = ColumnKind::Continuous, D = ColumnKind::Discrete;
    auto meta = [](ColumnKind k) { return ColumnMeta{SubQueryId{0}, k, 1}; };
    for (std::size_t rows : {999u, 1000u, 1001u}) {
        std::vector<ColumnMeta> one_c{meta(C)}, one_d{meta(D)};
        EXPECT_EQ(select_chart(one_c, rows, 1000), ChartKind::Histogram);
        EXPECT_EQ(select_chart(one_d, rows, 1000), ChartKind::Categories);
        std::vector<ColumnMeta> cc{meta(C), meta(C)};
        EXPECT_EQ(select_chart(cc, rows, 1000), rows > 1000 ? ChartKind::Heatmap : ChartKind::Scatter);
        for (auto pair : {std::vector<ColumnMeta>{meta(C), meta(D)}, std::vector<ColumnMeta>{meta(D), meta(C)},
                          std::vector<ColumnMeta>{meta(D), meta(D)}})
            EXPECT_THROW(select_chart(pair, rows, 1000), UnsupportedSelectionError);
    }
    EXPECT_THROW(select_chart({}, 5, 1000), UnsupportedSelectionError);
    std::vector<ColumnMeta> three{meta(C), meta(C), meta(C)};
    EXPECT_THROW(select_chart(three, 5, 1000), UnsupportedSelectionError);
}

TEST(Buckets, EdgesAndAssignmentMatchArithmetic) {
    auto e = bucket_edges(0, 10, 4);
    EXPECT_EQ(e, (std::vector<double>{0, 2.5, 5, 7.5, 10}));
    EXPECT_EQ(bucket_edges(3, 3, 2), (std::vector<double>{3, 3.5, 4}));
    EXPECT_EQ(bucket_of(e, 0), 0u);
    EXPECT_EQ(bucket_of(e, 2.5), 1u);
    EXPECT_EQ(bucket_of(e, 10), 3u) << "last bucket is closed";
    EXPECT_EQ(bucket_of(e, -1), 0u);
    EXPECT_EQ(bucket_of(e, 99), 3u);
}

// Oracle: floor((v - lo) / width), clamped into the last bucket.
TEST(Buckets, HistogramAgreesWithFloorOracleAndConserves) {
    kgtest::Rng rng(23);
    for (int run = 0; run < 100; ++run) {
        std::vector<double> v;
        for (std::size_t i = 0, n = 1 + rng.below(300); i < n; ++i)
            v.push_back(static_cast<double>(rng.below(1000)) / 8.0 - 20.0);
        const std::size_t buckets = 1 + rng.below(30);
        auto h = histogram(v, buckets);
        ASSERT_EQ(h.counts.size(), buckets);
        EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), v.size());
        const double lo = *std::min_element(v.begin(), v.end());
        double hi = *std::max_element(v.begin(), v.end());
        if (hi == lo) hi = lo + 1;
        std::vector<std::size_t> expect(buckets, 0);
        for (double x : v) {
            auto b = static_cast<std::size_t>(std::floor((x - lo) / ((hi - lo) / static_cast<double>(buckets))));
            // floating edges can put a value exactly on a boundary; trust the edge table there
            if (b < buckets && b > 0 && x < h.edges[b]) --b;
            if (b + 1 < buckets && x >= h.edges[b + 1]) ++b;
            ++expect[std::min(b, buckets - 1)];
        }
        EXPECT_EQ(h.counts, expect);
    }
    EXPECT_THROW(histogram(std::vector<double>{}, 5), EmptySeriesError);
}

TEST(Categories, RanksByCountThenName) {
    std::vector<std::string> v{"b", "a", "c", "b", "a", "d", "e"};
    auto c = top_categories(v, 3);
    ASSERT_EQ(c.top.size(), 3u);
    EXPECT_EQ(c.top[0], (std::pair<std::string, std::size_t>{"a", 2}));
    EXPECT_EQ(c.top[1], (std::pair<std::string, std::size_t>{"b", 2}));
    EXPECT_EQ(c.top[2], (std::pair<std::string, std::size_t>{"c", 1}));
    EXPECT_EQ(c.other, 2u);
}

TEST(Categories, ConserveOnRandomSeries) {
    kgtest::Rng rng(29);
    for (int run = 0; run < 100; ++run) {
        std::vector<std::string> v;
        for (std::size_t i = 0, n = 1 + rng.below(200); i < n; ++i) v.push_back("k" + std::to_string(rng.below(40)));
        auto c = top_categories(v, 1 + rng.below(20));
        std::size_t total = c.other;
        for (const auto& [name, count] : c.top) total += count;
        EXPECT_EQ(total, v.size());
    }
}

namespace {

struct Scenario {
    PrototypeGraph g;
    SubQueryId height, birth, name;
    ResultTable t;
};

Scenario people(std::size_t rows) {
    const Ontology& o = kgtest::toy();
    Scenario s;
    NodeId p = s.g.add_node(o, ex("Person"));
    s.height = s.g.set_subquery(o, p, ex("height"), SubQueryKind::Value);
    s.birth = s.g.set_subquery(o, p, ex("birthDate"), SubQueryKind::Value);
    s.name = s.g.set_subquery(o, p, ex("name"), SubQueryKind::Value);
    s.t.columns = {"n0", "s0", "s1", "s2"};
    for (std::size_t i = 0; i < rows; ++i) {
        Cell h = i % 5 == 4 ? Cell{} : Cell{rdf::Term::literal(std::to_string(150 + i % 50))};
        Cell d = rdf::Term::literal(std::to_string(1950 + i % 60) + "-01-01");
        s.t.rows.push_back({rdf::Term::iri("http://p/" + std::to_string(i)), h, d,
                            rdf::Term::literal("name" + std::to_string(i % 7))});
    }
    return s;
}

}  // namespace

TEST(BuildChart, PicksKindFromSelectionAndRows) {
    auto s = people(40);
    const Ontology& o = kgtest::toy();
    std::vector<SubQueryId> h{s.height};
    auto c = build_chart(s.t, s.g, o, h);
    EXPECT_EQ(c.chart, ChartKind::Histogram);
    EXPECT_EQ(c.series[0].non_null, 32u);
    EXPECT_EQ(std::accumulate(c.series[0].counts.begin(), c.series[0].counts.end(), std::size_t{0}), 32u);

    std::vector<SubQueryId> n{s.name};
    auto cat = build_chart(s.t, s.g, o, n);
    EXPECT_EQ(cat.chart, ChartKind::Categories);
    EXPECT_EQ(cat.categories.size(), 7u);

    std::vector<SubQueryId> hd{s.height, s.birth};
    EXPECT_EQ(build_chart(s.t, s.g, o, hd).chart, ChartKind::Scatter);
    auto big = people(1200);
    auto heat = build_chart(big.t, big.g, o, hd);
    EXPECT_EQ(heat.chart, ChartKind::Heatmap);
    EXPECT_EQ(heat.axes[1].unit, "epoch seconds");
    std::size_t cells = 0;
    for (const auto& col : heat.series[0].grid) cells += std::accumulate(col.begin(), col.end(), std::size_t{0});
    EXPECT_EQ(cells, heat.series[0].non_null);

    std::vector<SubQueryId> hn{s.height, s.name};
    EXPECT_THROW(build_chart(s.t, s.g, o, hn), UnsupportedSelectionError);
}

TEST(BuildOverlay, SharesEdgesAcrossSides) {
    auto l = people(30), r = people(60);
    std::vector<SubQueryId> h{l.height};
    auto c = build_overlay(l.t, l.g, r.t, r.g, kgtest::toy(), h);
    ASSERT_EQ(c.series.size(), 2u);
    EXPECT_EQ(c.series[0].name, "left");
    EXPECT_EQ(c.series[1].counts.size(), c.x_edges.size() - 1);
    auto empty = l;
    empty.t.rows.clear();
    EXPECT_NO_THROW(build_overlay(empty.t, empty.g, r.t, r.g, kgtest::toy(), h));
    EXPECT_THROW(build_overlay(empty.t, empty.g, empty.t, empty.g, kgtest::toy(), h), EmptySeriesError);
    std::vector<SubQueryId> hd{l.height, l.birth};
    auto big = people(1200);
    EXPECT_THROW(build_overlay(l.t, l.g, big.t, big.g, kgtest::toy(), hd), ChartKindMismatchError);
}

TEST(ChartJson, DateAxesGetIsoLabels) {
    auto s = people(10);
    std::vector<SubQueryId> d{s.birth};
    auto j = nlohmann::json::parse(chart_to_json(build_chart(s.t, s.g, kgtest::toy(), d)));
    EXPECT_EQ(j["chart"], "histogram");
    EXPECT_EQ(j["x_edges_labels"][0], "1950-01-01T00:00:00Z");
    EXPECT_EQ(j["parameters"]["buckets"], 20);
}

TEST(Csv, QuotingRoundTripsThroughAnIndependentReader) {
    kgtest::Rng rng(31);
    const std::string alphabet = "ab,\"\r\n x";
    for (int run = 0; run < 200; ++run) {
        std::vector<std::vector<std::string>> rows;
        std::string text;
        for (std::size_t r = 0, nr = 1 + rng.below(4); r < nr; ++r) {
            std::vector<std::string> row;
            for (std::size_t c = 0, nc = 1 + rng.below(4); c < nc; ++c) {
                std::string f;
                for (std::size_t k = 0, nk = rng.below(6); k < nk; ++k) f += alphabet[rng.below(alphabet.size())];
                row.push_back(f);
            }
            text += csv_record(row);
            rows.push_back(row);
        }
        ASSERT_EQ(kgtest::parse_csv(text), rows);
    }
}

TEST(Csv, ResultsInstancesAndCharts) {
    ResultTable t{{"n0", "s0"}, {{rdf::Term::iri("http://a"), rdf::Term::literal("x,\"y\"")}, {std::nullopt, std::nullopt}}};
    auto rows = kgtest::parse_csv(export_csv(t));
    EXPECT_EQ(rows, (std::vector<std::vector<std::string>>{{"n0", "s0"}, {"http://a", "x,\"y\""}, {"", ""}}));

    InstanceDiff d;
    d.key_nodes = {NodeId{0}};
    d.instances_added = {{{NodeId{0}, "http://b"}}};
    d.instances_shared = {{{NodeId{0}, "http://a"}}, {{NodeId{0}, "http://c"}}};
    rows = kgtest::parse_csv(export_csv(d));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n0", "diff_status"}));
    EXPECT_EQ(rows[1], (std::vector<std::string>{"http://b", "added"}));

    auto s = people(20);
    std::vector<SubQueryId> h{s.height};
    auto chart = build_chart(s.t, s.g, kgtest::toy(), h);
    rows = kgtest::parse_csv(export_csv(chart));
    EXPECT_EQ(rows.size(), chart.x_edges.size());  // header + one row per bucket
    std::size_t total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) total += std::stoul(rows[i][2]);
    EXPECT_EQ(total, chart.series[0].non_null);
}
