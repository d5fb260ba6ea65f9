#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgdiff/diff.hpp"
#include "kgdiff/ontology.hpp"
#include "kgdiff/proto_graph.hpp"
#include "kgdiff/results.hpp"

namespace kgdiff {

enum class ColumnKind { Continuous, Discrete };
ColumnKind column_kind(RangeKind kind);  // numeric/date are continuous

struct ColumnMeta {
    SubQueryId subquery;
    ColumnKind kind = ColumnKind::Discrete;
    std::size_t non_null_count = 0;
};

enum class ChartKind { Histogram, Categories, Scatter, Heatmap };
std::string_view to_string(ChartKind kind);

struct OverviewOptions {
    std::size_t buckets = 20;
    std::size_t top_k = 15;
    std::size_t heatmap_threshold = 1000;
    std::size_t grid = 40;  // heatmap bins per axis
};

/// 1 column: histogram (continuous) or categories (discrete). 2 continuous
/// columns: heatmap above the threshold, scatter otherwise. Anything else
/// raises UnsupportedSelectionError.
ChartKind select_chart(std::span<const ColumnMeta> cols, std::size_t row_count, std::size_t heatmap_threshold);

/// buckets+1 equal-width edges over [lo, hi]; lo == hi gives [lo, lo+1].
std::vector<double> bucket_edges(double lo, double hi, std::size_t buckets);
/// Bucket of v: edges[i] <= v < edges[i+1], the last bucket closed.
/// Values outside the edges are clamped into the first/last bucket.
std::size_t bucket_of(std::span<const double> edges, double v);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};
Histogram histogram(std::span<const double> values, std::size_t buckets);
std::vector<std::size_t> count_into(std::span<const double> edges, std::span<const double> values);

struct Categories {
    std::vector<std::pair<std::string, std::size_t>> top;  // by count desc, then name asc
    std::size_t other = 0;
};
Categories top_categories(std::span<const std::string> values, std::size_t k);

struct Axis {
    std::string label;
    std::string property;
    RangeKind kind = RangeKind::Numeric;
    std::string unit;  // "epoch seconds" for dates, empty otherwise
};

struct ChartSeries {
    std::string name;
    std::size_t non_null = 0;
    std::vector<std::size_t> counts;  // histogram buckets or categories (aligned)
    std::size_t other = 0;            // categories remainder
    std::vector<std::array<double, 2>> points;   // scatter
    std::vector<std::vector<std::size_t>> grid;  // heatmap [x][y]
};

struct ChartSpec {
    ChartKind chart = ChartKind::Histogram;
    std::vector<Axis> axes;
    OverviewOptions parameters;
    std::vector<double> x_edges;  // histogram / heatmap
    std::vector<double> y_edges;  // heatmap
    std::optional<std::array<double, 4>> bounds;  // scatter: xmin, xmax, ymin, ymax
    std::vector<std::string> categories;
    std::vector<ChartSeries> series;
};

/// Overview chart of the selected value sub-queries of one execution.
ChartSpec build_chart(const ResultTable& t, const PrototypeGraph& g, const Ontology& o,
                      std::span<const SubQueryId> selected, const OverviewOptions& options = {});

/// Two-series chart whose buckets, grid or category axis span both sides.
ChartSpec build_overlay(const ResultTable& left, const PrototypeGraph& left_graph, const ResultTable& right,
                        const PrototypeGraph& right_graph, const Ontology& o, std::span<const SubQueryId> selected,
                        const OverviewOptions& options = {});

std::string chart_to_json(const ChartSpec& c);

/// RFC 4180 field quoting and record assembly (CRLF line ends).
std::string csv_field(std::string_view s);
std::string csv_record(std::span<const std::string> fields);

std::string export_csv(const ResultTable& t);
std::string export_csv(const InstanceDiff& d);
std::string export_csv(const ChartSpec& c);

}  // namespace kgdiff
