#include "kgdiff/overview.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"
#include "kgdiff/values.hpp"

namespace kgdiff {

ColumnKind column_kind(RangeKind kind) {
    return kind == RangeKind::Numeric || kind == RangeKind::Date ? ColumnKind::Continuous : ColumnKind::Discrete;
}

std::string_view to_string(ChartKind kind) {
    switch (kind) {
        case ChartKind::Histogram: return "histogram";
        case ChartKind::Categories: return "categories";
        case ChartKind::Scatter: return "scatter";
        case ChartKind::Heatmap: return "heatmap";
    }
    return "histogram";
}

ChartKind select_chart(std::span<const ColumnMeta> cols, std::size_t row_count, std::size_t heatmap_threshold) {
    if (cols.empty() || cols.size() > 2)
        throw UnsupportedSelectionError("select one or two value columns, got " + std::to_string(cols.size()));
    if (cols.size() == 1)
        return cols[0].kind == ColumnKind::Continuous ? ChartKind::Histogram : ChartKind::Categories;
    if (cols[0].kind != ColumnKind::Continuous || cols[1].kind != ColumnKind::Continuous)
        throw UnsupportedSelectionError("two-column overviews need two continuous columns");
    return row_count > heatmap_threshold ? ChartKind::Heatmap : ChartKind::Scatter;
}

std::vector<double> bucket_edges(double lo, double hi, std::size_t buckets) {
    if (buckets == 0) throw UnsupportedSelectionError("bucket count must be at least 1");
    if (!(hi > lo)) hi = lo + 1;
    std::vector<double> edges(buckets + 1);
    const double width = (hi - lo) / static_cast<double>(buckets);
    for (std::size_t i = 0; i < buckets; ++i) edges[i] = lo + width * static_cast<double>(i);
    edges[buckets] = hi;
    return edges;
}

std::size_t bucket_of(std::span<const double> edges, double v) {
    const std::size_t n = edges.size() - 1;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.begin()) return 0;
    return std::min<std::size_t>(static_cast<std::size_t>(it - edges.begin()) - 1, n - 1);
}

std::vector<std::size_t> count_into(std::span<const double> edges, std::span<const double> values) {
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    for (double v : values) ++counts[bucket_of(edges, v)];
    return counts;
}

Histogram histogram(std::span<const double> values, std::size_t buckets) {
    if (values.empty()) throw EmptySeriesError("no values to bucket");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    Histogram h;
    h.edges = bucket_edges(*lo, *hi, buckets);
    h.counts = count_into(h.edges, values);
    return h;
}

Categories top_categories(std::span<const std::string> values, std::size_t k) {
    if (k == 0) throw UnsupportedSelectionError("top-k must be at least 1");
    if (values.empty()) throw EmptySeriesError("no values to count");
    std::map<std::string, std::size_t> counts;
    for (const auto& v : values) ++counts[v];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Categories c;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (i < k) c.top.push_back(ranked[i]);
        else c.other += ranked[i].second;
    }
    return c;
}

namespace {

struct Column {
    SubQueryId subquery;
    const PropertyDef* property = nullptr;
    std::vector<std::vector<Cell>> sides;  // per side, one cell per row
};

std::optional<double> as_continuous(const Cell& c, RangeKind kind) {
    if (!c || !c->is_literal()) return std::nullopt;
    return kind == RangeKind::Date ? values::parse_datetime(c->value) : values::parse_number(c->value);
}

std::optional<std::string> as_discrete(const Cell& c, RangeKind kind) {
    if (!c || c->is_blank()) return std::nullopt;
    if (kind == RangeKind::Boolean) {
        if (auto b = values::parse_boolean(c->value)) return std::string(*b ? "true" : "false");
    }
    return c->value;
}

std::vector<double> continuous_values(const std::vector<Cell>& cells, RangeKind kind) {
    std::vector<double> out;
    for (const auto& c : cells)
        if (auto v = as_continuous(c, kind)) out.push_back(*v);
    return out;
}

std::vector<std::array<double, 2>> paired_values(const Column& x, const Column& y, std::size_t side) {
    std::vector<std::array<double, 2>> out;
    const auto& xs = x.sides[side];
    const auto& ys = y.sides[side];
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
        auto a = as_continuous(xs[i], x.property->range_kind);
        auto b = as_continuous(ys[i], y.property->range_kind);
        if (a && b) out.push_back({*a, *b});
    }
    return out;
}

Axis axis_for(const PropertyDef& p) {
    Axis a;
    a.label = p.label.empty() ? local_name(p.id) : p.label;
    a.property = p.id;
    a.kind = p.range_kind;
    if (p.range_kind == RangeKind::Date) a.unit = "epoch seconds";
    return a;
}

ChartSpec compose(std::vector<Column> cols, std::vector<std::string> names, std::vector<std::size_t> row_counts,
                  const OverviewOptions& options) {
    ChartSpec spec;
    spec.parameters = options;
    std::optional<ChartKind> kind;
    for (std::size_t s = 0; s < names.size(); ++s) {
        std::vector<ColumnMeta> metas;
        for (const auto& c : cols) {
            ColumnMeta m{c.subquery, column_kind(c.property->range_kind), 0};
            for (const auto& cell : c.sides[s])
                if (m.kind == ColumnKind::Continuous ? as_continuous(cell, c.property->range_kind).has_value()
                                                     : as_discrete(cell, c.property->range_kind).has_value())
                    ++m.non_null_count;
            metas.push_back(m);
        }
        ChartKind k = select_chart(metas, row_counts[s], options.heatmap_threshold);
        if (kind && *kind != k)
            throw ChartKindMismatchError("left side needs a " + std::string(to_string(*kind)) +
                                         " but right side needs a " + std::string(to_string(k)));
        kind = k;
    }
    spec.chart = *kind;
    for (const auto& c : cols) spec.axes.push_back(axis_for(*c.property));
    for (const auto& n : names) {
        ChartSeries series;
        series.name = n;
        spec.series.push_back(std::move(series));
    }

    switch (spec.chart) {
        case ChartKind::Histogram: {
            const RangeKind rk = cols[0].property->range_kind;
            std::vector<std::vector<double>> per_side;
            std::vector<double> all;
            for (const auto& cells : cols[0].sides) {
                per_side.push_back(continuous_values(cells, rk));
                all.insert(all.end(), per_side.back().begin(), per_side.back().end());
            }
            if (all.empty()) throw EmptySeriesError("the selected column has no usable values");
            auto [lo, hi] = std::minmax_element(all.begin(), all.end());
            spec.x_edges = bucket_edges(*lo, *hi, options.buckets);
            for (std::size_t s = 0; s < per_side.size(); ++s) {
                spec.series[s].counts = count_into(spec.x_edges, per_side[s]);
                spec.series[s].non_null = per_side[s].size();
            }
            break;
        }
        case ChartKind::Categories: {
            const RangeKind rk = cols[0].property->range_kind;
            std::vector<std::vector<std::string>> per_side;
            std::vector<std::string> all;
            for (const auto& cells : cols[0].sides) {
                per_side.emplace_back();
                for (const auto& c : cells)
                    if (auto v = as_discrete(c, rk)) per_side.back().push_back(*v);
                all.insert(all.end(), per_side.back().begin(), per_side.back().end());
            }
            Categories combined = top_categories(all, options.top_k);
            for (const auto& [name, _] : combined.top) spec.categories.push_back(name);
            for (std::size_t s = 0; s < per_side.size(); ++s) {
                std::map<std::string, std::size_t> counts;
                for (const auto& v : per_side[s]) ++counts[v];
                auto& series = spec.series[s];
                series.non_null = per_side[s].size();
                std::size_t shown = 0;
                for (const auto& name : spec.categories) {
                    series.counts.push_back(counts[name]);
                    shown += counts[name];
                }
                series.other = series.non_null - shown;
            }
            break;
        }
        case ChartKind::Scatter:
        case ChartKind::Heatmap: {
            std::vector<std::vector<std::array<double, 2>>> per_side;
            std::vector<double> xs, ys;
            for (std::size_t s = 0; s < names.size(); ++s) {
                per_side.push_back(paired_values(cols[0], cols[1], s));
                for (const auto& p : per_side.back()) {
                    xs.push_back(p[0]);
                    ys.push_back(p[1]);
                }
            }
            if (xs.empty()) throw EmptySeriesError("no rows bind both selected columns");
            auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
            auto [ylo, yhi] = std::minmax_element(ys.begin(), ys.end());
            if (spec.chart == ChartKind::Scatter) {
                spec.bounds = std::array<double, 4>{*xlo, *xhi, *ylo, *yhi};
                for (std::size_t s = 0; s < names.size(); ++s) {
                    spec.series[s].points = per_side[s];
                    spec.series[s].non_null = per_side[s].size();
                }
            } else {
                spec.x_edges = bucket_edges(*xlo, *xhi, options.grid);
                spec.y_edges = bucket_edges(*ylo, *yhi, options.grid);
                for (std::size_t s = 0; s < names.size(); ++s) {
                    auto& grid = spec.series[s].grid;
                    grid.assign(options.grid, std::vector<std::size_t>(options.grid, 0));
                    for (const auto& p : per_side[s]) ++grid[bucket_of(spec.x_edges, p[0])][bucket_of(spec.y_edges, p[1])];
                    spec.series[s].non_null = per_side[s].size();
                }
            }
            break;
        }
    }
    return spec;
}

std::vector<Column> columns_from(const std::vector<PairedSeries>& paired, const Ontology& o, bool two_sided) {
    std::vector<Column> cols;
    for (const auto& p : paired) {
        Column c;
        c.subquery = p.subquery;
        c.property = o.find_property(p.property);
        if (!c.property) throw UnknownElementError("property not in the ontology: " + p.property);
        c.sides.push_back(p.left);
        if (two_sided) c.sides.push_back(p.right);
        cols.push_back(std::move(c));
    }
    return cols;
}

}  // namespace

ChartSpec build_chart(const ResultTable& t, const PrototypeGraph& g, const Ontology& o,
                      std::span<const SubQueryId> selected, const OverviewOptions& options) {
    if (selected.empty() || selected.size() > 2)
        throw UnsupportedSelectionError("select one or two value columns, got " + std::to_string(selected.size()));
    auto paired = diff_result_values(t, g, t, g, selected);
    return compose(columns_from(paired, o, false), {"result"}, {t.rows.size()}, options);
}

ChartSpec build_overlay(const ResultTable& left, const PrototypeGraph& left_graph, const ResultTable& right,
                        const PrototypeGraph& right_graph, const Ontology& o, std::span<const SubQueryId> selected,
                        const OverviewOptions& options) {
    if (selected.empty() || selected.size() > 2)
        throw UnsupportedSelectionError("select one or two value columns, got " + std::to_string(selected.size()));
    auto paired = diff_result_values(left, left_graph, right, right_graph, selected);
    return compose(columns_from(paired, o, true), {"left", "right"}, {left.rows.size(), right.rows.size()}, options);
}

// ---------------------------------------------------------------------------

std::string chart_to_json(const ChartSpec& c) {
    using nlohmann::json;
    json doc;
    doc["chart"] = to_string(c.chart);
    json axes = json::array();
    for (const auto& a : c.axes)
        axes.push_back({{"label", a.label}, {"property", a.property}, {"kind", to_string(a.kind)}, {"unit", a.unit}});
    doc["axes"] = axes;
    doc["parameters"] = {{"buckets", c.parameters.buckets},
                         {"top_k", c.parameters.top_k},
                         {"heatmap_threshold", c.parameters.heatmap_threshold},
                         {"grid", c.parameters.grid}};
    auto edges = [&](const char* key, const std::vector<double>& e, const Axis& axis) {
        if (e.empty()) return;
        doc[key] = e;
        if (axis.kind == RangeKind::Date) {
            json labels = json::array();
            for (double v : e) labels.push_back(values::format_iso8601(v));
            doc[std::string(key) + "_labels"] = labels;
        }
    };
    if (!c.axes.empty()) edges("x_edges", c.x_edges, c.axes[0]);
    if (c.axes.size() > 1) edges("y_edges", c.y_edges, c.axes[1]);
    if (c.bounds) doc["bounds"] = *c.bounds;
    if (c.chart == ChartKind::Categories) doc["categories"] = c.categories;
    json series = json::array();
    for (const auto& s : c.series) {
        json j = {{"name", s.name}, {"non_null", s.non_null}};
        switch (c.chart) {
            case ChartKind::Histogram: j["counts"] = s.counts; break;
            case ChartKind::Categories:
                j["counts"] = s.counts;
                j["other"] = s.other;
                break;
            case ChartKind::Scatter: j["points"] = s.points; break;
            case ChartKind::Heatmap: j["grid"] = s.grid; break;
        }
        series.push_back(std::move(j));
    }
    doc["series"] = series;
    return doc.dump();
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_record(std::span<const std::string> fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_field(fields[i]);
    }
    out += "\r\n";
    return out;
}

std::string export_csv(const ResultTable& t) {
    std::string out = csv_record(t.columns);
    for (const auto& row : t.rows) {
        std::vector<std::string> fields;
        for (const auto& c : row) fields.push_back(c ? c->value : std::string());
        out += csv_record(fields);
    }
    return out;
}

std::string export_csv(const InstanceDiff& d) {
    std::vector<std::string> header;
    for (NodeId id : d.key_nodes) header.push_back(node_variable(id));
    header.push_back("diff_status");
    std::string out = csv_record(header);
    auto emit = [&](const std::set<InstanceKey>& keys, const char* status) {
        for (const auto& key : keys) {
            std::vector<std::string> fields;
            for (const auto& [node, iri] : key) fields.push_back(iri);
            fields.push_back(status);
            out += csv_record(fields);
        }
    };
    emit(d.instances_added, "added");
    emit(d.instances_removed, "removed");
    emit(d.instances_shared, "shared");
    return out;
}

std::string export_csv(const ChartSpec& c) {
    std::vector<std::string> header;
    std::string out;
    auto edge_label = [&](std::size_t axis, double v) {
        return c.axes.size() > axis && c.axes[axis].kind == RangeKind::Date ? values::format_iso8601(v)
                                                                            : values::format_number(v);
    };
    switch (c.chart) {
        case ChartKind::Histogram:
            header = {"bucket_start", "bucket_end"};
            for (const auto& s : c.series) header.push_back(s.name);
            out = csv_record(header);
            for (std::size_t i = 0; i + 1 < c.x_edges.size(); ++i) {
                std::vector<std::string> f{edge_label(0, c.x_edges[i]), edge_label(0, c.x_edges[i + 1])};
                for (const auto& s : c.series) f.push_back(std::to_string(s.counts[i]));
                out += csv_record(f);
            }
            break;
        case ChartKind::Categories:
            header = {"category"};
            for (const auto& s : c.series) header.push_back(s.name);
            out = csv_record(header);
            for (std::size_t i = 0; i < c.categories.size(); ++i) {
                std::vector<std::string> f{c.categories[i]};
                for (const auto& s : c.series) f.push_back(std::to_string(s.counts[i]));
                out += csv_record(f);
            }
            {
                std::vector<std::string> f{"other"};
                for (const auto& s : c.series) f.push_back(std::to_string(s.other));
                out += csv_record(f);
            }
            break;
        case ChartKind::Scatter:
            out = csv_record(std::vector<std::string>{"series", "x", "y"});
            for (const auto& s : c.series)
                for (const auto& p : s.points)
                    out += csv_record(std::vector<std::string>{s.name, edge_label(0, p[0]), edge_label(1, p[1])});
            break;
        case ChartKind::Heatmap:
            header = {"x_start", "x_end", "y_start", "y_end"};
            for (const auto& s : c.series) header.push_back(s.name);
            out = csv_record(header);
            for (std::size_t i = 0; i + 1 < c.x_edges.size(); ++i)
                for (std::size_t j = 0; j + 1 < c.y_edges.size(); ++j) {
                    std::vector<std::string> f{edge_label(0, c.x_edges[i]), edge_label(0, c.x_edges[i + 1]),
                                               edge_label(1, c.y_edges[j]), edge_label(1, c.y_edges[j + 1])};
                    for (const auto& s : c.series) f.push_back(std::to_string(s.grid[i][j]));
                    out += csv_record(f);
                }
            break;
    }
    return out;
}

}  // namespace kgdiff
