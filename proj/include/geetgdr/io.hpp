#pragma once
#include <geetgdr/dataset.hpp>
#include <geetgdr/types.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// CSV formats: UTF-8, comma separated, '.' decimal point, header row required.
// expression.csv: "subject_id", feature names...; one row per subject.
// outcomes.csv:   "subject_id", time labels in temporal order.

namespace geetgdr::io {

/// Error tied to a file location. line and column are 1-based; 0 means n/a.
class input_error : public validation_error
{
public:
    input_error(const std::string& file, std::size_t line, std::size_t column,
                const std::string& msg)
        : validation_error({locate(file, line, column) + ": " + msg})
    {}

private:
    static std::string locate(const std::string& file, std::size_t line, std::size_t column)
    {
        std::string s = file;
        if (line) s += ":" + std::to_string(line);
        if (column) s += ":" + std::to_string(column);
        return s;
    }
};

struct CsvRow
{
    std::size_t line;
    std::vector<std::string> fields;
};

struct CsvTable
{
    std::string path;
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

/// Splits one record; double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_record(std::string_view line, const std::string& path,
                                             std::size_t line_no)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw input_error(path, line_no, 0, "unterminated quoted field");
    out.push_back(std::move(cur));
    return out;
}

inline CsvTable parse_csv(std::istream& in, const std::string& path)
{
    CsvTable table;
    table.path = path;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty()) continue;
        auto fields = split_record(line, path, line_no);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw input_error(path, line_no, 0,
                              "expected " + std::to_string(table.header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back({line_no, std::move(fields)});
    }
    if (!have_header) throw input_error(path, 0, 0, "missing header row");
    return table;
}

inline CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error(path, 0, 0, "cannot open file");
    return parse_csv(in, path);
}

inline double parse_double(std::string_view s, const std::string& path, std::size_t line,
                           std::size_t column)
{
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (first == last) throw input_error(path, line, column, "missing value");
    if (ec != std::errc() || ptr != last) {
        throw input_error(path, line, column, "not a number: '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) throw input_error(path, line, column, "non-finite value");
    return v;
}

/// A numeric table keyed by the first column.
struct LabeledMatrix
{
    std::vector<std::string> row_ids;
    std::vector<std::string> col_names;
    Matrix values;
};

inline LabeledMatrix to_labeled_matrix(const CsvTable& table, std::string_view id_header = "subject_id")
{
    if (table.header.empty() || table.header.front() != id_header) {
        throw input_error(table.path, 1, 1, "first column header must be '" + std::string(id_header) + "'");
    }
    if (table.header.size() < 2) throw input_error(table.path, 1, 0, "no data columns");
    LabeledMatrix m;
    m.col_names.assign(table.header.begin() + 1, table.header.end());
    m.values.resize(static_cast<Index>(table.rows.size()), static_cast<Index>(m.col_names.size()));
    std::unordered_map<std::string, std::size_t> seen_cols;
    for (std::size_t c = 0; c < m.col_names.size(); ++c) {
        if (m.col_names[c].empty()) throw input_error(table.path, 1, c + 2, "empty column name");
        if (!seen_cols.emplace(m.col_names[c], c).second) {
            throw input_error(table.path, 1, c + 2, "duplicate column name '" + m.col_names[c] + "'");
        }
    }
    std::unordered_map<std::string, std::size_t> seen_rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.fields[0].empty()) throw input_error(table.path, row.line, 1, "empty subject identifier");
        if (!seen_rows.emplace(row.fields[0], r).second) {
            throw input_error(table.path, row.line, 1, "duplicate subject identifier '" + row.fields[0] + "'");
        }
        m.row_ids.push_back(row.fields[0]);
        for (std::size_t c = 1; c < row.fields.size(); ++c) {
            m.values(static_cast<Index>(r), static_cast<Index>(c - 1)) =
                parse_double(row.fields[c], table.path, row.line, c + 1);
        }
    }
    return m;
}

/// Reorders `m` to the given row id order; throws if the id sets differ.
inline Matrix align_rows(const LabeledMatrix& m, const std::vector<std::string>& ids,
                         const std::string& path, const std::string& reference_path)
{
    std::unordered_map<std::string, Index> pos;
    for (std::size_t i = 0; i < m.row_ids.size(); ++i) pos.emplace(m.row_ids[i], static_cast<Index>(i));
    std::vector<std::string> problems;
    Matrix out(static_cast<Index>(ids.size()), m.values.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = pos.find(ids[i]);
        if (it == pos.end()) {
            problems.push_back(path + ": subject '" + ids[i] + "' from " + reference_path + " is missing");
            continue;
        }
        out.row(static_cast<Index>(i)) = m.values.row(it->second);
    }
    std::unordered_map<std::string, int> ref;
    for (const auto& id : ids) ref.emplace(id, 0);
    for (const auto& id : m.row_ids) {
        if (!ref.count(id)) problems.push_back(path + ": subject '" + id + "' not present in " + reference_path);
    }
    if (!problems.empty()) throw validation_error(std::move(problems));
    return out;
}

/// Loads expression and outcome files; outcomes are matched to expression rows by id.
inline LongitudinalDataset load_dataset(const std::string& expression_path,
                                        const std::string& outcomes_path)
{
    const auto expr = to_labeled_matrix(read_csv(expression_path));
    const auto outc = to_labeled_matrix(read_csv(outcomes_path));
    RawDataset raw;
    raw.subject_ids = expr.row_ids;
    raw.feature_names = expr.col_names;
    raw.time_labels = outc.col_names;
    raw.covariates = expr.values;
    raw.outcomes = align_rows(outc, expr.row_ids, outcomes_path, expression_path);
    return validate_dataset(std::move(raw));
}

/// Shortest decimal representation that round-trips.
inline std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_labeled_matrix(std::ostream& out, const std::vector<std::string>& row_ids,
                                 const std::vector<std::string>& col_names, const Matrix& values)
{
    out << "subject_id";
    for (const auto& c : col_names) out << ',' << csv_field(c);
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        out << csv_field(row_ids[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
        out << '\n';
    }
}

inline void write_dataset(const LongitudinalDataset& ds, std::ostream& expression,
                          std::ostream& outcomes)
{
    write_labeled_matrix(expression, ds.subject_ids(), ds.feature_names(), ds.covariates());
    write_labeled_matrix(outcomes, ds.subject_ids(), ds.time_labels(), ds.outcomes());
}

} // namespace geetgdr::io
