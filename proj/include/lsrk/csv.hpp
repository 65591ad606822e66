#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsrk/data.hpp"

namespace lsrk {

// Column-name mapping for longitudinal CSV files. Defaults match the canonical
// schema: subject_id, time, y, x1..x{d1}, z1..z{d2}. A sidecar JSON file may
// rename columns:
//   {"subject":"id","time":"day","response":"protime",
//    "predictors":["bili","albumin"],"covariates":["age"]}
struct CsvSchema {
    std::string subject = "subject_id";
    std::string time = "time";
    std::string response = "y";
    std::vector<std::string> predictors;  // empty: autodetect x1, x2, ...
    std::vector<std::string> covariates;  // empty: autodetect z1, z2, ...

    static CsvSchema from_json_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw input_error("schema: cannot open '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw input_error("schema: invalid JSON in '" + path + "': " + e.what());
        }
        CsvSchema s;
        if (j.contains("subject")) s.subject = j["subject"].get<std::string>();
        if (j.contains("time")) s.time = j["time"].get<std::string>();
        if (j.contains("response")) s.response = j["response"].get<std::string>();
        if (j.contains("predictors")) s.predictors = j["predictors"].get<std::vector<std::string>>();
        if (j.contains("covariates")) s.covariates = j["covariates"].get<std::vector<std::string>>();
        return s;
    }
};

struct CsvLoadOptions {
    // Times are min-max rescaled to [0,1] with this range; unset derives it from the data.
    std::optional<TimeRange> time_range;
    // Rows with original-scale time strictly above this are dropped before grouping.
    std::optional<double> max_time;
    // Rows with empty cells are dropped (no partial observations).
    bool drop_incomplete_rows = true;
};

struct CsvLoadReport {
    int rows_read = 0;
    int rows_dropped_incomplete = 0;
    int rows_dropped_time_window = 0;
    TimeRange applied_range;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_cell(const std::string& cell, const std::string& column, int line_no) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw input_error("csv: non-numeric cell '" + cell + "' in column '" + column + "' at row " +
                          std::to_string(line_no));
    return value;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline LongitudinalDataset load_longitudinal_csv(const std::string& path, CsvSchema schema = CsvSchema{},
                                                 CsvLoadOptions options = CsvLoadOptions{},
                                                 CsvLoadReport* report = nullptr) {
    std::ifstream in(path);
    if (!in) throw input_error("csv: cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw input_error("csv: empty file '" + path + "'");
    const std::vector<std::string> header = detail::split_csv_line(header_line);
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) throw input_error("csv: missing column '" + name + "' in '" + path + "'");
        return it->second;
    };

    if (schema.predictors.empty())
        for (int p = 1; col.count("x" + std::to_string(p)); ++p) schema.predictors.push_back("x" + std::to_string(p));
    if (schema.covariates.empty())
        for (int q = 1; col.count("z" + std::to_string(q)); ++q) schema.covariates.push_back("z" + std::to_string(q));

    const int c_subject = require(schema.subject);
    const int c_time = require(schema.time);
    const int c_response = require(schema.response);
    std::vector<int> c_pred, c_cov;
    for (const auto& name : schema.predictors) c_pred.push_back(require(name));
    for (const auto& name : schema.covariates) c_cov.push_back(require(name));
    const int d1 = static_cast<int>(c_pred.size());
    const int d2 = static_cast<int>(c_cov.size());

    struct Row {
        double t;
        double y;
        std::vector<double> x;
        std::vector<double> z;
    };
    std::vector<std::string> subject_order;
    std::map<std::string, std::vector<Row>> by_subject;
    CsvLoadReport rep;

    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() < header.size())
            throw input_error("csv: row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(header.size()));
        ++rep.rows_read;

        bool incomplete = cells[static_cast<std::size_t>(c_time)].empty() ||
                          cells[static_cast<std::size_t>(c_response)].empty() ||
                          cells[static_cast<std::size_t>(c_subject)].empty();
        for (int c : c_pred) incomplete = incomplete || cells[static_cast<std::size_t>(c)].empty();
        for (int c : c_cov) incomplete = incomplete || cells[static_cast<std::size_t>(c)].empty();
        if (incomplete) {
            if (options.drop_incomplete_rows) {
                ++rep.rows_dropped_incomplete;
                continue;
            }
            throw input_error("csv: empty cell at row " + std::to_string(line_no));
        }

        Row row;
        row.t = detail::parse_cell(cells[static_cast<std::size_t>(c_time)], schema.time, line_no);
        if (options.max_time && row.t > *options.max_time) {
            ++rep.rows_dropped_time_window;
            continue;
        }
        row.y = detail::parse_cell(cells[static_cast<std::size_t>(c_response)], schema.response, line_no);
        for (int p = 0; p < d1; ++p)
            row.x.push_back(detail::parse_cell(cells[static_cast<std::size_t>(c_pred[static_cast<std::size_t>(p)])],
                                               schema.predictors[static_cast<std::size_t>(p)], line_no));
        for (int q = 0; q < d2; ++q)
            row.z.push_back(detail::parse_cell(cells[static_cast<std::size_t>(c_cov[static_cast<std::size_t>(q)])],
                                               schema.covariates[static_cast<std::size_t>(q)], line_no));

        const std::string& id = cells[static_cast<std::size_t>(c_subject)];
        if (!by_subject.count(id)) subject_order.push_back(id);
        by_subject[id].push_back(std::move(row));
    }

    if (subject_order.size() < 2) throw input_error("csv: fewer than 2 subjects in '" + path + "'");

    TimeRange range;
    if (options.time_range) {
        range = *options.time_range;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& [id, rows] : by_subject)
            for (const auto& r : rows) {
                lo = std::min(lo, r.t);
                hi = std::max(hi, r.t);
            }
        range = TimeRange{lo, hi};
    }
    if (!(range.span() > 0.0)) {
        // Degenerate range (all times equal): map everything to 0.
        range.hi = range.lo + 1.0;
    }
    rep.applied_range = range;

    std::vector<SubjectRecord> subjects;
    for (const std::string& id : subject_order) {
        auto& rows = by_subject[id];
        std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
        SubjectRecord rec;
        rec.subject_id = id;
        const int m = static_cast<int>(rows.size());
        rec.u.resize(d1, m);
        for (int j = 0; j < m; ++j) {
            const Row& r = rows[static_cast<std::size_t>(j)];
            const double t01 = range.to_unit(r.t);
            if (t01 < -1e-12 || t01 > 1.0 + 1e-12)
                throw input_error("csv: time " + detail::format_double(r.t) + " outside the supplied range");
            rec.times.push_back(std::clamp(t01, 0.0, 1.0));
            rec.v.push_back(r.y);
            for (int p = 0; p < d1; ++p) rec.u(p, j) = r.x[static_cast<std::size_t>(p)];
        }
        rec.z = rows.front().z;
        for (const auto& r : rows)
            for (int q = 0; q < d2; ++q)
                if (r.z[static_cast<std::size_t>(q)] != rec.z[static_cast<std::size_t>(q)])
                    throw input_error("csv: covariate '" + schema.covariates[static_cast<std::size_t>(q)] +
                                      "' varies within subject '" + id + "'");
        subjects.push_back(std::move(rec));
    }

    LongitudinalDataset data(std::move(subjects), d1, d2, range);
    data.response_name = schema.response;
    data.predictor_names = schema.predictors;
    data.covariate_names = schema.covariates;
    if (report) *report = rep;
    return data;
}

// Writes the canonical schema with original-scale times. Reloading with the
// same explicit time range reproduces the dataset.
inline void write_longitudinal_csv(const LongitudinalDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("csv: cannot write '" + path + "'");
    out << "subject_id,time,y";
    for (int p = 1; p <= data.d1(); ++p) out << ",x" << p;
    for (int q = 1; q <= data.d2(); ++q) out << ",z" << q;
    out << "\n";
    for (const auto& s : data.subjects()) {
        for (int j = 0; j < s.m(); ++j) {
            out << s.subject_id << ',' << detail::format_double(data.time_range().from_unit(s.times[static_cast<std::size_t>(j)]))
                << ',' << detail::format_double(s.v[static_cast<std::size_t>(j)]);
            for (int p = 0; p < data.d1(); ++p) out << ',' << detail::format_double(s.u(p, j));
            for (int q = 0; q < data.d2(); ++q) out << ',' << detail::format_double(s.z[static_cast<std::size_t>(q)]);
            out << "\n";
        }
    }
}

}  // namespace lsrk
