#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>
#include <agfit/index_map.hpp>
#include <agfit/stats.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace agfit::io {

struct Cell
{
    std::string text;
    std::size_t line;
    std::size_t column;
};

using Row = std::vector<Cell>;

inline std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

/// Comma-separated rows; blank lines and lines starting with '#' are skipped.
/// Columns are 1-based positions of the cell within its line.
inline std::vector<Row> read_csv(std::istream& in)
{
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        Row row;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            const auto end = comma == std::string::npos ? line.size() : comma;
            row.push_back({trim(std::string_view(line).substr(start, end - start)), line_no, start + 1});
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::optional<double> parse_double(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

inline std::optional<int> parse_int(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string> default_labels(std::size_t p)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < p; ++i) out.push_back(std::to_string(i));
    return out;
}

inline void check_unique(const std::vector<std::string>& labels, const Row& where)
{
    std::unordered_set<std::string> seen;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k].empty() || !seen.insert(labels[k]).second) {
            const auto& cell = where.empty() ? Cell{"", 1, 1} : where[std::min(k, where.size() - 1)];
            throw ParseError("labels must be unique and nonempty ('" + labels[k] + "')", cell.line, cell.column);
        }
    }
}

/// Square matrix with optional column labels in the first row and optional
/// row labels in the first column.
template <class Value>
struct LabeledSquare
{
    std::vector<std::string> labels;
    std::vector<std::vector<Value>> values;
    std::vector<std::vector<Cell>> cells;
};

template <class Value, class Parser>
LabeledSquare<Value> read_labeled_square(std::istream& in, Parser parse, const char* what)
{
    auto rows = read_csv(in);
    if (rows.empty()) throw ParseError(std::string("empty ") + what + " file", 1, 1);

    std::vector<std::string> col_labels;
    Row header_cells;
    const bool has_header = std::any_of(rows.front().begin(), rows.front().end(),
                                        [&](const Cell& c) { return !parse(c.text).has_value(); });
    std::size_t first_data = 0;
    if (has_header) {
        header_cells = rows.front();
        first_data = 1;
    }
    const std::size_t p = rows.size() - first_data;
    if (p == 0) throw ParseError(std::string(what) + " has a header but no rows", rows.front().front().line, 1);

    LabeledSquare<Value> out;
    std::vector<std::string> row_labels;
    for (std::size_t r = first_data; r < rows.size(); ++r) {
        const auto& row = rows[r];
        std::size_t offset = 0;
        if (!parse(row.front().text).has_value() && row.size() == p + 1) {
            row_labels.push_back(row.front().text);
            offset = 1;
        }
        if (row.size() - offset != p) {
            throw ParseError(std::string(what) + " must be square: expected " + std::to_string(p) + " values, found " +
                                 std::to_string(row.size() - offset),
                             row.front().line, row.back().column);
        }
        std::vector<Value> values;
        std::vector<Cell> cells;
        for (std::size_t c = offset; c < row.size(); ++c) {
            const auto v = parse(row[c].text);
            if (!v) throw ParseError("cannot read '" + row[c].text + "' as a number", row[c].line, row[c].column);
            values.push_back(*v);
            cells.push_back(row[c]);
        }
        out.values.push_back(std::move(values));
        out.cells.push_back(std::move(cells));
    }
    if (!row_labels.empty() && row_labels.size() != p) {
        throw ParseError("row labels must be given on every row or none", rows[first_data].front().line, 1);
    }

    if (has_header) {
        for (const auto& c : header_cells) col_labels.push_back(c.text);
        if (col_labels.size() == p + 1) {
            col_labels.erase(col_labels.begin());
            header_cells.erase(header_cells.begin());
        }
        if (col_labels.size() != p) {
            throw ParseError("header has " + std::to_string(col_labels.size()) + " labels for " + std::to_string(p) + " columns",
                             header_cells.front().line, header_cells.front().column);
        }
        check_unique(col_labels, header_cells);
        if (!row_labels.empty() && row_labels != col_labels) {
            throw ParseError("row labels differ from column labels", rows[first_data].front().line, 1);
        }
        out.labels = col_labels;
    } else if (!row_labels.empty()) {
        Row first_cells;
        for (std::size_t r = first_data; r < rows.size(); ++r) first_cells.push_back(rows[r].front());
        check_unique(row_labels, first_cells);
        out.labels = row_labels;
    } else {
        out.labels = default_labels(p);
    }
    return out;
}

/// Adjacency-matrix CSV: cells in {0, 1, 2} with a_ij = a_ji = 1 for i - j,
/// a_ij = a_ji = 2 for i <-> j and a_ij = 1, a_ji = 0 for i -> j. Coding
/// errors are reported as parse errors at the offending cell; violations
/// of the ancestral conditions surface as the usual graph errors.
inline AncestralGraph read_graph(std::istream& in)
{
    const auto sq = read_labeled_square<int>(in, parse_int, "adjacency matrix");
    const auto p = sq.values.size();
    Eigen::MatrixXi a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const int v = sq.values[i][j];
            if (v < 0 || v > 2) {
                const auto& c = sq.cells[i][j];
                throw ParseError("adjacency entries must be 0, 1 or 2, found " + std::to_string(v), c.line, c.column);
            }
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            const int x = sq.values[i][j];
            const int y = sq.values[j][i];
            const bool ok = i == j ? x == 0 : (x == y && x != 0) || (x == 0 && y == 0) || (x == 1 && y == 0) || (x == 0 && y == 1);
            if (!ok) {
                const auto& c = sq.cells[i][j];
                throw ParseError("invalid edge coding a[" + sq.labels[i] + "][" + sq.labels[j] + "]=" + std::to_string(x) + ", a[" +
                                     sq.labels[j] + "][" + sq.labels[i] + "]=" + std::to_string(y),
                                 c.line, c.column);
            }
        }
    }
    return from_adjacency(a, sq.labels);
}

/// Inverse of read_graph. Default labels 0..p-1 are left out, since a
/// numeric header could not be told apart from a matrix row.
inline void write_graph(std::ostream& out, const AncestralGraph& g)
{
    const auto a = to_adjacency(g);
    const bool labeled = g.labels() != default_labels(g.size());
    if (labeled) {
        for (const auto& l : g.labels()) out << ',' << l;
        out << '\n';
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (labeled) out << g.labels()[static_cast<std::size_t>(i)] << ',';
        for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << a(i, j);
        out << '\n';
    }
}

struct LabeledMatrix
{
    std::vector<std::string> labels;
    Eigen::MatrixXd values;
};

/// Symmetric covariance or correlation matrix in the adjacency-matrix layout.
inline LabeledMatrix read_covariance(std::istream& in)
{
    const auto sq = read_labeled_square<double>(in, parse_double, "covariance matrix");
    const auto p = static_cast<Eigen::Index>(sq.values.size());
    LabeledMatrix out{sq.labels, Eigen::MatrixXd(p, p)};
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) out.values(i, j) = sq.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return out;
}

/// Raw data: one observation per row, one variable per column, optional
/// header row of labels. Returned with variables in rows (p x n).
inline LabeledMatrix read_data(std::istream& in)
{
    const auto rows = read_csv(in);
    if (rows.empty()) throw ParseError("empty data file", 1, 1);
    const bool has_header =
        std::any_of(rows.front().begin(), rows.front().end(), [](const Cell& c) { return !parse_double(c.text).has_value(); });
    const std::size_t first = has_header ? 1 : 0;
    const std::size_t p = rows.front().size();
    const std::size_t n = rows.size() - first;
    if (n == 0) throw ParseError("data file has no observations", rows.front().front().line, 1);

    LabeledMatrix out;
    if (has_header) {
        for (const auto& c : rows.front()) out.labels.push_back(c.text);
        check_unique(out.labels, rows.front());
    } else {
        out.labels = default_labels(p);
    }
    out.values.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != p) {
            throw ParseError("expected " + std::to_string(p) + " values, found " + std::to_string(row.size()), row.front().line,
                             row.back().column);
        }
        for (std::size_t c = 0; c < p; ++c) {
            const auto v = parse_double(row[c].text);
            if (!v) throw ParseError("cannot read '" + row[c].text + "' as a number", row[c].line, row[c].column);
            out.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r - first)) = *v;
        }
    }
    return out;
}

template <class Reader>
auto read_file(const std::string& path, Reader reader)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open '" + path + "'");
    return reader(in);
}

/// Graph and sample statistics over a common variable order.
struct Problem
{
    AncestralGraph graph;
    SampleStats stats;
};

/// Matches the graph's vertices to the data's variables by label. Every
/// graph label must occur in the data; extra data variables are dropped.
/// The variable order of the data is kept.
inline std::vector<std::size_t> match_labels(const std::vector<std::string>& graph_labels,
                                             const std::vector<std::string>& data_labels)
{
    std::vector<std::string> missing;
    for (const auto& l : graph_labels) {
        if (std::find(data_labels.begin(), data_labels.end(), l) == data_labels.end()) missing.push_back(l);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(ErrorCode::label_mismatch, "graph vertices missing from the data: " + list);
    }
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < data_labels.size(); ++k) {
        if (std::find(graph_labels.begin(), graph_labels.end(), data_labels[k]) != graph_labels.end()) keep.push_back(k);
    }
    return keep;
}

/// Graph relabelled into the given label order.
inline AncestralGraph reorder(const AncestralGraph& g, const std::vector<std::string>& order)
{
    std::vector<std::size_t> pos(g.size());
    for (std::size_t k = 0; k < order.size(); ++k) pos[*g.find_label(order[k])] = k;
    std::vector<Edge> edges;
    for (const auto& e : g.edges()) edges.push_back({pos[e.from], pos[e.to], e.kind});
    return AncestralGraph::validate(order, std::move(edges));
}

inline Problem align(const AncestralGraph& g, const LabeledMatrix& cov, std::size_t n, bool mean_adjusted)
{
    const auto keep = match_labels(g.labels(), cov.labels);
    std::vector<std::string> order;
    for (auto k : keep) order.push_back(cov.labels[k]);
    const auto idx = as_eigen_indices(keep);
    return {reorder(g, order), SampleStats::from_covariance(gather(cov.values, idx, idx), n, mean_adjusted)};
}

inline Problem align_data(const AncestralGraph& g, const LabeledMatrix& data, bool mean_adjusted)
{
    const auto keep = match_labels(g.labels(), data.labels);
    std::vector<std::string> order;
    Eigen::MatrixXd y(static_cast<Eigen::Index>(keep.size()), data.values.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        order.push_back(data.labels[keep[r]]);
        y.row(static_cast<Eigen::Index>(r)) = data.values.row(static_cast<Eigen::Index>(keep[r]));
    }
    return {reorder(g, order), empirical_covariance(y, mean_adjusted)};
}

} // namespace agfit::io
