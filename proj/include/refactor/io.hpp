#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "refactor/matrix.hpp"
#include "refactor/metrics.hpp"
#include "refactor/sim.hpp"

namespace refactor {

enum class DatasetFormat { wide_csv, long_csv };

inline DatasetFormat dataset_format_from_string(const std::string& s) {
    if (s == "wide" || s == "wide_csv") return DatasetFormat::wide_csv;
    if (s == "long" || s == "long_csv") return DatasetFormat::long_csv;
    throw std::invalid_argument("unknown dataset format: " + s);
}

struct DatasetSpec {
    std::string path;
    DatasetFormat format = DatasetFormat::wide_csv;
    std::string missing_token = "NA";
    // long-format column names
    std::string row_column = "row";
    std::string col_column = "col";
    std::string value_column = "value";
};

namespace csv {

/// RFC 4180 tokenizer: quoted fields may contain commas, quotes
/// (doubled) and newlines.
inline std::vector<std::vector<std::string>> parse(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            row.push_back(field);
            field.clear();
        } else if (ch == '\n') {
            row.push_back(field);
            field.clear();
            rows.push_back(row);
            row.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (quoted) throw std::runtime_error("csv: unterminated quoted field");
    if (any && (!field.empty() || !row.empty())) {
        row.push_back(field);
        rows.push_back(row);
    }
    return rows;
}

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string render(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace csv

/// Load a rectangular header-first CSV of 0/1 cells; `missing_token`
/// cells become masked. Any other value is rejected with its location.
inline ResponseMatrix load_wide(const std::string& path, const std::string& missing_token = "NA") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_wide: cannot open " + path);
    const auto rows = csv::parse(in);
    if (rows.size() < 2) throw std::runtime_error("load_wide: need a header row and data rows");
    const std::vector<std::string>& header = rows[0];
    const std::size_t p = header.size();
    const std::size_t n = rows.size() - 1;

    RealMatrix values = RealMatrix::Zero(static_cast<Eigen::Index>(n),
                                         static_cast<Eigen::Index>(p));
    BoolMask mask = BoolMask::Constant(static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(p), true);
    std::vector<std::string> row_labels;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = rows[i + 1];
        if (r.size() != p)
            throw std::runtime_error("load_wide: ragged row " + std::to_string(i + 1) + " (" +
                                     std::to_string(r.size()) + " fields, expected " +
                                     std::to_string(p) + ")");
        row_labels.push_back(std::to_string(i + 1));
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& cell = r[j];
            if (cell == missing_token) {
                mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = false;
                continue;
            }
            if (cell == "0" || cell == "0.0") {
                values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
            } else if (cell == "1" || cell == "1.0") {
                values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
            } else {
                throw std::runtime_error("load_wide: non-binary value '" + cell + "' at row " +
                                         std::to_string(i + 1) + ", column '" + header[j] + "'");
            }
        }
    }
    return ResponseMatrix(std::move(values), std::move(mask), std::move(row_labels), header);
}

/// Load (row id, item id, response) triplets and pivot to wide form.
/// Ids are assigned positions in first-appearance order; duplicate
/// (row, item) pairs are an error; never-seen cells stay masked.
inline ResponseMatrix load_long(const std::string& path, const std::string& row_column = "row",
                                const std::string& col_column = "col",
                                const std::string& value_column = "value",
                                const std::string& missing_token = "NA") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_long: cannot open " + path);
    const auto rows = csv::parse(in);
    if (rows.size() < 2) throw std::runtime_error("load_long: need a header row and data rows");
    const auto& header = rows[0];
    long ri = -1, ci = -1, vi = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k] == row_column) ri = static_cast<long>(k);
        if (header[k] == col_column) ci = static_cast<long>(k);
        if (header[k] == value_column) vi = static_cast<long>(k);
    }
    if (ri < 0 || ci < 0 || vi < 0)
        throw std::runtime_error("load_long: missing one of the columns '" + row_column + "', '" +
                                 col_column + "', '" + value_column + "'");

    std::vector<std::string> row_ids, col_ids;
    std::map<std::string, int> row_pos, col_pos;
    struct Triple {
        int r, c;
        double v;
    };
    std::vector<Triple> triples;
    std::map<std::pair<int, int>, bool> seen;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& rec = rows[k];
        if (rec.size() != header.size())
            throw std::runtime_error("load_long: ragged row " + std::to_string(k));
        const std::string& rid = rec[static_cast<std::size_t>(ri)];
        const std::string& cid = rec[static_cast<std::size_t>(ci)];
        const std::string& val = rec[static_cast<std::size_t>(vi)];
        if (val == missing_token) continue;
        double v;
        if (val == "0" || val == "0.0")
            v = 0.0;
        else if (val == "1" || val == "1.0")
            v = 1.0;
        else
            throw std::runtime_error("load_long: non-binary response '" + val + "' at line " +
                                     std::to_string(k + 1));
        if (!row_pos.count(rid)) {
            row_pos[rid] = static_cast<int>(row_ids.size());
            row_ids.push_back(rid);
        }
        if (!col_pos.count(cid)) {
            col_pos[cid] = static_cast<int>(col_ids.size());
            col_ids.push_back(cid);
        }
        const int r = row_pos[rid];
        const int c = col_pos[cid];
        if (seen.count({r, c}))
            throw std::runtime_error("load_long: duplicate (row, item) pair ('" + rid + "', '" +
                                     cid + "')");
        seen[{r, c}] = true;
        triples.push_back({r, c, v});
    }
    const auto n = static_cast<Eigen::Index>(row_ids.size());
    const auto p = static_cast<Eigen::Index>(col_ids.size());
    RealMatrix values = RealMatrix::Zero(n, p);
    BoolMask mask = BoolMask::Constant(n, p, false);
    for (const auto& t : triples) {
        values(t.r, t.c) = t.v;
        mask(t.r, t.c) = true;
    }
    return ResponseMatrix(std::move(values), std::move(mask), std::move(row_ids),
                          std::move(col_ids));
}

enum class ReportFormat { json, csv_long };

/// Serializable run report: dataset facts, the effective configuration,
/// and one metric panel per (kind, mode) evaluated. `generated_at` stays
/// empty unless the caller stamps it, so identical runs serialize to
/// identical bytes.
struct ReportDocument {
    int schema_version = 1;
    std::string dataset_id;
    Eigen::Index n_rows = 0;
    Eigen::Index n_cols = 0;
    double missing_rate = 0.0;
    std::string generated_at;
    nlohmann::json config_echo = nlohmann::json::object();
    std::vector<MetricPanel> panels;
    nlohmann::json extras = nlohmann::json::object();
};

inline nlohmann::json panel_to_json(const MetricPanel& p) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [id, v] : p.values) {
        if (v.missing())
            metrics[id] = nlohmann::json{{"missing", v.missing_reason}};
        else
            metrics[id] = v.value;
    }
    return nlohmann::json{{"dataset_id", p.dataset_id}, {"kind", p.kind},   {"mode", p.mode},
                          {"seed", p.seed},             {"metrics", metrics}};
}

inline MetricPanel panel_from_json(const nlohmann::json& j) {
    MetricPanel p;
    p.dataset_id = j.at("dataset_id").get<std::string>();
    p.kind = j.at("kind").get<std::string>();
    p.mode = j.at("mode").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [id, v] : j.at("metrics").items()) {
        if (v.is_object())
            p.set(id, MetricValue::absent(v.at("missing").get<std::string>()));
        else
            p.set(id, MetricValue::of(v.get<double>()));
    }
    return p;
}

inline nlohmann::json report_to_json(const ReportDocument& doc) {
    nlohmann::json panels = nlohmann::json::array();
    for (const auto& p : doc.panels) panels.push_back(panel_to_json(p));
    nlohmann::json j{{"schema_version", doc.schema_version},
                     {"dataset",
                      {{"id", doc.dataset_id},
                       {"n_rows", doc.n_rows},
                       {"n_cols", doc.n_cols},
                       {"missing_rate", doc.missing_rate}}},
                     {"config", doc.config_echo},
                     {"panels", panels},
                     {"extras", doc.extras}};
    j["generated_at"] = doc.generated_at.empty() ? nlohmann::json() : nlohmann::json(doc.generated_at);
    return j;
}

inline ReportDocument report_from_json(const nlohmann::json& j) {
    ReportDocument doc;
    doc.schema_version = j.at("schema_version").get<int>();
    doc.dataset_id = j.at("dataset").at("id").get<std::string>();
    doc.n_rows = j.at("dataset").at("n_rows").get<Eigen::Index>();
    doc.n_cols = j.at("dataset").at("n_cols").get<Eigen::Index>();
    doc.missing_rate = j.at("dataset").at("missing_rate").get<double>();
    doc.config_echo = j.at("config");
    doc.extras = j.at("extras");
    if (!j.at("generated_at").is_null()) doc.generated_at = j.at("generated_at").get<std::string>();
    for (const auto& p : j.at("panels")) doc.panels.push_back(panel_from_json(p));
    return doc;
}

/// Write a report. json is the full document; csv_long is one row per
/// (panel, metric) for plotting. Keys serialize in sorted order and
/// floats with full precision, so equal documents give equal bytes.
inline void write_report(const ReportDocument& doc, const std::string& path, ReportFormat fmt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_report: cannot open " + path + " for writing");
    if (fmt == ReportFormat::json) {
        out << report_to_json(doc).dump(2) << '\n';
    } else {
        out << "dataset,kind,mode,seed,metric,value,missing_reason\n";
        for (const auto& p : doc.panels)
            for (const auto& [id, v] : p.values) {
                out << csv::quote(p.dataset_id) << ',' << csv::quote(p.kind) << ','
                    << csv::quote(p.mode) << ',' << p.seed << ',' << csv::quote(id) << ','
                    << (v.missing() ? "" : csv::render(v.value)) << ','
                    << csv::quote(v.missing_reason) << '\n';
            }
    }
    if (!out) throw std::runtime_error("write_report: failed writing " + path);
}

inline ReportDocument read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return report_from_json(j);
}

/// Long-form simulation results as plot-ready CSV.
inline void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_results_csv: cannot open " + path);
    out << "study,rep,grid,kind,mode,metric,value,missing_reason\n";
    for (const auto& r : rows) {
        out << csv::quote(r.study) << ',' << r.rep << ','
            << (std::isnan(r.grid_value) ? "" : csv::render(r.grid_value)) << ','
            << csv::quote(r.kind) << ',' << csv::quote(r.mode) << ',' << csv::quote(r.metric)
            << ',' << (std::isnan(r.value) ? "" : csv::render(r.value)) << ','
            << csv::quote(r.missing_reason) << '\n';
    }
    if (!out) throw std::runtime_error("write_results_csv: failed writing " + path);
}

inline nlohmann::json results_to_json(const std::vector<ResultRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j{{"study", r.study},   {"rep", r.rep},       {"kind", r.kind},
                         {"mode", r.mode},     {"metric", r.metric},
                         {"missing_reason", r.missing_reason}};
        j["grid"] = std::isnan(r.grid_value) ? nlohmann::json() : nlohmann::json(r.grid_value);
        j["value"] = std::isnan(r.value) ? nlohmann::json() : nlohmann::json(r.value);
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace refactor
