#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dml/dataset.hpp"
#include "dml/error_matrix.hpp"
#include "dml/matrix.hpp"
#include "dml/solver.hpp"

namespace dml {

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Shortest round-trip decimal form; locale-independent.
inline std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

/// Scientific form with 17 significant digits, for transform files.
inline std::string format_double_full(double value) {
    char buffer[64];
    const auto result =
        std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::scientific, 16);
    return std::string(buffer, result.ptr);
}

inline bool parse_double(std::string_view token, double& out) {
    const char* begin = token.data();
    const char* end = token.data() + token.size();
    const auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc() && result.ptr == end;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            fields.emplace_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace detail

/// Dense CSV loader. One row per pattern; the designated column (last by
/// default) is the class label, everything else must be numeric. A
/// header row is detected when any feature cell of the first row is
/// non-numeric. Labels map to dense 0-based ids in first-appearance
/// order.
inline Dataset load_dense_csv(const std::string& path,
                              std::optional<std::size_t> label_column = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::map<std::string, int> label_ids;
    std::size_t expected_fields = 0;
    std::size_t line_number = 0;
    bool first_content_line = true;

    std::string line;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string_view content = detail::trim(line);
        if (content.empty()) continue;
        std::vector<std::string> fields = detail::split(content, ',');

        const std::size_t label_index =
            label_column ? *label_column : fields.size() - 1;
        if (label_index >= fields.size())
            throw parse_error(path + ": line " + std::to_string(line_number) +
                              ": label column out of range");

        if (first_content_line) {
            bool header = false;
            for (std::size_t f = 0; f < fields.size(); ++f) {
                if (f == label_index) continue;
                double ignored;
                if (!detail::parse_double(fields[f], ignored)) header = true;
            }
            first_content_line = false;
            expected_fields = fields.size();
            if (header) continue;
        }

        if (fields.size() != expected_fields)
            throw parse_error(path + ": line " + std::to_string(line_number) + ": expected " +
                              std::to_string(expected_fields) + " fields, got " +
                              std::to_string(fields.size()));

        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (f == label_index) continue;
            double value;
            if (!detail::parse_double(fields[f], value))
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": non-numeric feature value '" + fields[f] + "'");
            row.push_back(value);
        }
        const std::string& token = fields[label_index];
        auto [it, inserted] = label_ids.try_emplace(token, static_cast<int>(label_ids.size()));
        labels.push_back(it->second);
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw parse_error(path + ": no data rows");
    Matrix x(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];

    std::string name = path;
    if (const std::size_t slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (const std::size_t dot = name.find_last_of('.'); dot != std::string::npos && dot > 0)
        name = name.substr(0, dot);
    return make_dataset(std::move(x), std::move(labels), std::move(name));
}

/// Sparse "label idx:val idx:val ..." loader with 1-based, strictly
/// increasing indices per line. Unmentioned features are 0; the feature
/// count is the maximum index observed anywhere in the file.
inline Dataset load_sparse(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");

    struct SparseRow {
        std::vector<std::pair<std::size_t, double>> entries;
        int label;
    };
    std::vector<SparseRow> rows;
    std::map<std::string, int> label_ids;
    std::size_t max_index = 0;
    std::size_t line_number = 0;

    std::string line;
    while (std::getline(in, line)) {
        ++line_number;
        std::istringstream tokens{std::string(detail::trim(line))};
        std::string token;
        if (!(tokens >> token)) continue;  // blank line

        SparseRow row;
        auto [it, inserted] = label_ids.try_emplace(token, static_cast<int>(label_ids.size()));
        row.label = it->second;

        std::size_t previous_index = 0;
        while (tokens >> token) {
            const std::size_t colon = token.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= token.size())
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": malformed token '" + token + "'");
            double index_value;
            double value;
            if (!detail::parse_double(std::string_view(token).substr(0, colon), index_value) ||
                index_value < 1.0 || index_value != static_cast<std::size_t>(index_value))
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": bad feature index in '" + token + "'");
            if (!detail::parse_double(std::string_view(token).substr(colon + 1), value))
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": bad feature value in '" + token + "'");
            const std::size_t index = static_cast<std::size_t>(index_value);
            if (index <= previous_index)
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": feature indices must be strictly increasing");
            previous_index = index;
            max_index = std::max(max_index, index);
            row.entries.emplace_back(index, value);
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw parse_error(path + ": no data rows");
    if (max_index == 0) throw parse_error(path + ": no features present");
    Matrix x(rows.size(), max_index);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        labels[i] = rows[i].label;
        for (const auto& [index, value] : rows[i].entries) x(i, index - 1) = value;
    }

    std::string name = path;
    if (const std::size_t slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (const std::size_t dot = name.find_last_of('.'); dot != std::string::npos && dot > 0)
        name = name.substr(0, dot);
    return make_dataset(std::move(x), std::move(labels), std::move(name));
}

inline void save_dense_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j)
            out << detail::format_double(ds.patterns(i, j)) << ',';
        out << ds.labels[i] << '\n';
    }
}

/// Transform file format: first line "r d", then r rows of d
/// space-separated values at 17 significant digits.
inline void write_transform(const TransformMatrix& a, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j) out << ' ';
            out << detail::format_double_full(a(i, j));
        }
        out << '\n';
    }
}

inline TransformMatrix read_transform(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows == 0 || cols == 0)
        throw parse_error(path + ": bad transform header");
    TransformMatrix a(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (!(in >> a(i, j))) throw parse_error(path + ": truncated transform");
    return a;
}

inline void write_trace_csv(const EnergyTrace& trace, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "sweep,temperature,energy,accepted\n";
    for (const TraceRecord& rec : trace)
        out << rec.sweep << ',' << detail::format_double(rec.temperature) << ','
            << detail::format_double(rec.energy) << ',' << rec.accepted << '\n';
}

/// 2-D projection snapshot: projected coordinates with labels, the four
/// transform entries repeated per row so each file is self-contained.
inline void write_snapshot_csv(const Dataset& ds, const TransformMatrix& a,
                               const std::string& path) {
    if (a.rows() != 2 || a.cols() != 2)
        throw std::invalid_argument("write_snapshot_csv: transform must be 2x2");
    std::ofstream out = detail::open_output(path);
    out << "x,y,label,a00,a01,a10,a11\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double px = a(0, 0) * ds.patterns(i, 0) + a(0, 1) * ds.patterns(i, 1);
        const double py = a(1, 0) * ds.patterns(i, 0) + a(1, 1) * ds.patterns(i, 1);
        out << detail::format_double(px) << ',' << detail::format_double(py) << ','
            << ds.labels[i] << ',' << detail::format_double(a(0, 0)) << ','
            << detail::format_double(a(0, 1)) << ',' << detail::format_double(a(1, 0)) << ','
            << detail::format_double(a(1, 1)) << '\n';
    }
}

/// Error-matrix CSV, one row per dataset, one column per method
/// (the orientation of published comparison tables).
inline void write_error_matrix_csv(const ErrorMatrix& em, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "dataset";
    for (const std::string& m : em.methods) out << ',' << m;
    out << '\n';
    for (std::size_t d = 0; d < em.datasets.size(); ++d) {
        out << em.datasets[d];
        for (std::size_t m = 0; m < em.methods.size(); ++m)
            out << ',' << detail::format_double(em.errors(m, d));
        out << '\n';
    }
}

inline ErrorMatrix read_error_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");
    std::vector<std::string> header = detail::split(detail::trim(line), ',');
    if (header.size() < 2) throw parse_error(path + ": header needs at least one method column");

    ErrorMatrix em;
    em.methods.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> columns_by_dataset;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string_view content = detail::trim(line);
        if (content.empty()) continue;
        std::vector<std::string> fields = detail::split(content, ',');
        if (fields.size() != header.size())
            throw parse_error(path + ": line " + std::to_string(line_number) +
                              ": expected " + std::to_string(header.size()) + " fields");
        em.datasets.push_back(fields[0]);
        std::vector<double> row(em.methods.size());
        for (std::size_t m = 0; m < em.methods.size(); ++m)
            if (!detail::parse_double(fields[m + 1], row[m]))
                throw parse_error(path + ": line " + std::to_string(line_number) +
                                  ": non-numeric error value '" + fields[m + 1] + "'");
        columns_by_dataset.push_back(std::move(row));
    }
    if (em.datasets.empty()) throw parse_error(path + ": no data rows");
    em.errors = Matrix(em.methods.size(), em.datasets.size());
    for (std::size_t d = 0; d < em.datasets.size(); ++d)
        for (std::size_t m = 0; m < em.methods.size(); ++m)
            em.errors(m, d) = columns_by_dataset[d][m];
    em.validate();
    return em;
}

}  // namespace dml
