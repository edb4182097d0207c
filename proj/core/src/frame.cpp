#include "forester/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/rng.hpp"

namespace forester {

std::string to_string(ColumnKind kind) {
    return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

std::string to_string(TaskType task) {
    switch (task) {
    case TaskType::Binary: return "binary";
    case TaskType::Multiclass: return "multiclass";
    case TaskType::Regression: return "regression";
    }
    return "unknown";
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::size_t Column::n_missing() const {
    std::size_t n = 0;
    for (char m : missing) n += (m != 0);
    return n;
}

Column make_numeric_column(std::string name, std::vector<double> values,
                           std::vector<char> missing) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Numeric;
    if (missing.empty()) missing.assign(values.size(), 0);
    c.missing = std::move(missing);
    c.text.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!c.missing[i]) {
            char buf[32];
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), values[i]);
            c.text[i].assign(buf, p);
        }
    }
    c.numeric = std::move(values);
    return c;
}

Column make_text_column(std::string name, std::vector<std::string> values,
                        std::vector<char> missing) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    if (missing.empty()) missing.assign(values.size(), 0);
    c.missing = std::move(missing);
    c.numeric.assign(values.size(), 0.0);
    c.text = std::move(values);
    return c;
}

Frame::Frame(std::vector<Column> columns, std::optional<std::string> target)
    : columns_(std::move(columns)), target_name_(std::move(target)) {
    n_rows_ = columns_.empty() ? 0 : columns_.front().size();
    std::set<std::string> seen;
    for (const Column& c : columns_) {
        if (c.size() != n_rows_)
            throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) +
                            " rows, expected " + std::to_string(n_rows_));
        if (c.missing.size() != c.size())
            throw DataError("column '" + c.name + "' missing mask length mismatch");
        if (!seen.insert(c.name).second)
            throw DataError("duplicate column name '" + c.name + "'");
    }
    if (target_name_ && !seen.count(*target_name_))
        throw DataError("target column '" + *target_name_ + "' does not exist");
}

const Column& Frame::column(const std::string& name) const {
    auto idx = column_index(name);
    if (!idx) throw DataError("unknown column '" + name + "'");
    return columns_[*idx];
}

std::optional<std::size_t> Frame::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::string> Frame::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const Column& c : columns_) names.push_back(c.name);
    return names;
}

std::vector<std::string> Frame::feature_names() const {
    std::vector<std::string> names;
    for (const Column& c : columns_)
        if (!target_name_ || c.name != *target_name_) names.push_back(c.name);
    return names;
}

bool Frame::is_missing(std::size_t col, std::size_t row) const {
    if (probe_) probe_->note(row);
    return columns_[col].missing[row] != 0;
}

double Frame::number_at(std::size_t col, std::size_t row) const {
    if (probe_) probe_->note(row);
    return columns_[col].numeric[row];
}

const std::string& Frame::text_at(std::size_t col, std::size_t row) const {
    if (probe_) probe_->note(row);
    return columns_[col].text[row];
}

void Frame::set_target(const std::string& name) {
    if (!has_column(name)) throw DataError("target column '" + name + "' does not exist");
    target_name_ = name;
}

Frame Frame::select_rows(const std::vector<std::size_t>& rows) const {
    std::vector<Column> out;
    out.reserve(columns_.size());
    for (std::size_t ci = 0; ci < columns_.size(); ++ci) {
        const Column& src = columns_[ci];
        Column c;
        c.name = src.name;
        c.kind = src.kind;
        c.text.reserve(rows.size());
        c.numeric.reserve(rows.size());
        c.missing.reserve(rows.size());
        for (std::size_t r : rows) {
            if (r >= n_rows_) throw DataError("row index out of range");
            if (probe_) probe_->note(r);
            c.text.push_back(src.text[r]);
            c.numeric.push_back(src.numeric[r]);
            c.missing.push_back(src.missing[r]);
        }
        out.push_back(std::move(c));
    }
    return Frame(std::move(out), target_name_);
}

Frame Frame::select_columns(const std::vector<std::string>& names) const {
    std::vector<Column> out;
    for (const std::string& n : names) out.push_back(column(n));
    std::optional<std::string> target = target_name_;
    if (target && std::find(names.begin(), names.end(), *target) == names.end())
        target = std::nullopt;
    return Frame(std::move(out), target);
}

Frame Frame::drop_columns(const std::vector<std::string>& names) const {
    std::vector<std::string> keep;
    for (const Column& c : columns_)
        if (std::find(names.begin(), names.end(), c.name) == names.end())
            keep.push_back(c.name);
    return select_columns(keep);
}

Frame Frame::with_column_replaced(const Column& column) const {
    std::vector<Column> out = columns_;
    for (Column& c : out) {
        if (c.name == column.name) {
            c = column;
            return Frame(std::move(out), target_name_);
        }
    }
    throw DataError("unknown column '" + column.name + "'");
}

FrameView::FrameView(const Frame& frame) : frame_(&frame) {
    rows_.resize(frame.n_rows());
    for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i] = i;
}

namespace {

std::vector<std::vector<std::string>> tokenize_csv(const std::string& content, char delimiter) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;
    std::size_t i = 0;
    const std::size_t n = content.size();
    auto end_cell = [&] {
        row.push_back(cell);
        cell.clear();
        cell_started = false;
    };
    auto end_row = [&] {
        end_cell();
        rows.push_back(std::move(row));
        row.clear();
    };
    while (i < n) {
        const char ch = content[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"' && !cell_started) {
            in_quotes = true;
            cell_started = true;
        } else if (ch == delimiter) {
            end_cell();
        } else if (ch == '\r') {
            // swallow; handled with the following \n or treated as row end
            if (i + 1 >= n || content[i + 1] != '\n') end_row();
        } else if (ch == '\n') {
            end_row();
        } else {
            cell.push_back(ch);
            cell_started = true;
        }
        ++i;
    }
    if (in_quotes) throw ParseError("unterminated quoted field at end of input");
    if (!cell.empty() || !row.empty() || cell_started) end_row();
    return rows;
}

bool needs_quoting(const std::string& s, char delimiter) {
    return s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string::npos;
}

std::string quote_cell(const std::string& s, char delimiter) {
    if (!needs_quoting(s, delimiter)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

Frame parse_csv(const std::string& content, const CsvOptions& options) {
    auto rows = tokenize_csv(content, options.delimiter);
    if (rows.empty()) return Frame();

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (options.header) {
        header = rows[0];
        first_data = 1;
        std::set<std::string> seen;
        for (const std::string& h : header)
            if (!seen.insert(h).second)
                throw ParseError("duplicate header name '" + h + "'");
    } else {
        for (std::size_t i = 0; i < rows[0].size(); ++i)
            header.push_back("col" + std::to_string(i));
    }
    const std::size_t width = header.size();

    std::set<std::string> markers;
    for (const std::string& m : options.missing_markers) markers.insert(to_lower(trim(m)));

    const std::size_t n_data = rows.size() - first_data;
    std::vector<Column> columns(width);
    for (std::size_t c = 0; c < width; ++c) {
        columns[c].name = header[c];
        columns[c].kind = ColumnKind::Categorical;
        columns[c].text.reserve(n_data);
        columns[c].missing.reserve(n_data);
    }
    for (std::size_t r = first_data; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw ParseError("ragged row " + std::to_string(r + 1) + ": expected " +
                             std::to_string(width) + " cells, got " +
                             std::to_string(rows[r].size()));
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& cell = rows[r][c];
            const bool miss = markers.count(to_lower(trim(cell))) > 0;
            columns[c].text.push_back(miss ? std::string() : cell);
            columns[c].missing.push_back(miss ? 1 : 0);
        }
    }
    for (Column& c : columns) c.numeric.assign(c.text.size(), 0.0);
    return Frame(std::move(columns));
}

Frame load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

std::string to_csv(const Frame& frame, const CsvOptions& options) {
    std::string out;
    if (options.header) {
        for (std::size_t c = 0; c < frame.n_cols(); ++c) {
            if (c) out.push_back(options.delimiter);
            out += quote_cell(frame.column(c).name, options.delimiter);
        }
        out.push_back('\n');
    }
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        for (std::size_t c = 0; c < frame.n_cols(); ++c) {
            if (c) out.push_back(options.delimiter);
            if (frame.is_missing(c, r)) continue;  // empty cell = missing marker
            out += quote_cell(frame.text_at(c, r), options.delimiter);
        }
        out.push_back('\n');
    }
    return out;
}

void write_csv(const Frame& frame, const std::string& path, const CsvOptions& options) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << to_csv(frame, options);
    if (!out) throw IoError("write failure on '" + path + "'");
}

Frame infer_types(const Frame& frame) {
    std::vector<Column> columns = frame.columns();
    for (Column& c : columns) {
        bool any_present = false;
        bool all_numeric = true;
        std::vector<double> numeric(c.size(), 0.0);
        for (std::size_t r = 0; r < c.size(); ++r) {
            if (c.missing[r]) continue;
            any_present = true;
            auto v = (c.kind == ColumnKind::Numeric && !c.numeric.empty())
                         ? std::optional<double>(c.numeric[r])
                         : parse_number(c.text[r]);
            if (!v) {
                all_numeric = false;
                break;
            }
            numeric[r] = *v;
        }
        if (any_present && all_numeric) {
            c.kind = ColumnKind::Numeric;
            c.numeric = std::move(numeric);
        } else {
            c.kind = ColumnKind::Categorical;
            c.numeric.assign(c.size(), 0.0);
        }
    }
    return Frame(std::move(columns), frame.target_name());
}

TaskInfo detect_task(const Frame& frame, const std::string& target, int multiclass_limit) {
    const Column& col = frame.column(target);
    std::set<std::string> distinct;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r]) distinct.insert(col.text[r]);
    if (distinct.size() < 2) throw DataError("degenerate target '" + target + "'");

    TaskInfo info;
    if (distinct.size() == 2) {
        info.type = TaskType::Binary;
    } else if (static_cast<int>(distinct.size()) > multiclass_limit) {
        if (col.kind != ColumnKind::Numeric)
            throw DataError("categorical target '" + target + "' has " +
                            std::to_string(distinct.size()) + " levels, above the limit of " +
                            std::to_string(multiclass_limit));
        info.type = TaskType::Regression;
        return info;
    } else {
        info.type = TaskType::Multiclass;
    }
    info.labels.assign(distinct.begin(), distinct.end());
    std::sort(info.labels.begin(), info.labels.end());
    if (info.type == TaskType::Binary) info.positive_label = info.labels.back();
    return info;
}

nlohmann::json SplitSet::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["ratios"] = ratios;
    j["train"] = train_idx;
    j["test"] = test_idx;
    j["valid"] = valid_idx;
    j["stratified"] = stratified;
    j["warnings"] = warnings;
    return j;
}

SplitSet SplitSet::from_json(const nlohmann::json& j) {
    SplitSet s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ratios = j.at("ratios").get<std::array<double, 3>>();
    s.train_idx = j.at("train").get<std::vector<std::size_t>>();
    s.test_idx = j.at("test").get<std::vector<std::size_t>>();
    s.valid_idx = j.at("valid").get<std::vector<std::size_t>>();
    s.stratified = j.value("stratified", false);
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
}

namespace {

// Split `count` into three parts proportional to ratios, exact total,
// remainders going to the largest fractional parts (ties to earlier splits).
std::array<std::size_t, 3> apportion(std::size_t count, const std::array<double, 3>& ratios) {
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = count * ratios[i];
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < count; ++k, ++assigned) sizes[order[k % 3]] += 1;
    return sizes;
}

void assign_rows(std::vector<std::size_t> rows, const std::array<double, 3>& ratios, Rng& rng,
                 SplitSet& out) {
    rng.shuffle(rows);
    const auto sizes = apportion(rows.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; ++i) out.train_idx.push_back(rows[pos++]);
    for (std::size_t i = 0; i < sizes[1]; ++i) out.test_idx.push_back(rows[pos++]);
    for (std::size_t i = 0; i < sizes[2]; ++i) out.valid_idx.push_back(rows[pos++]);
}

} // namespace

SplitSet split_frame(const Frame& frame, std::array<double, 3> ratios, std::uint64_t seed,
                     bool stratify) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("split ratios must sum to 1");
    for (double r : ratios)
        if (r <= 0) throw DataError("split ratios must be positive");
    if (frame.n_rows() < 10) throw DataError("need at least 10 rows to split");

    SplitSet out;
    out.seed = seed;
    out.ratios = ratios;
    Rng rng(seed);

    std::vector<std::vector<std::size_t>> strata;
    if (stratify) {
        if (!frame.target_name()) throw DataError("stratified split requires a target");
        const Column& target = frame.column(*frame.target_name());
        std::map<std::string, std::vector<std::size_t>> by_class;
        for (std::size_t r = 0; r < frame.n_rows(); ++r)
            by_class[target.missing[r] ? std::string("\x01missing") : target.text[r]].push_back(r);
        bool ok = true;
        for (const auto& [label, rows] : by_class)
            if (rows.size() < 3) ok = false;
        if (ok) {
            out.stratified = true;
            for (auto& [label, rows] : by_class) strata.push_back(std::move(rows));
        } else {
            out.warnings.push_back(
                "stratification disabled: a class has fewer than 3 rows");
        }
    }
    if (strata.empty()) {
        std::vector<std::size_t> all(frame.n_rows());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        strata.push_back(std::move(all));
    }
    for (auto& rows : strata) assign_rows(std::move(rows), ratios, rng, out);
    std::sort(out.train_idx.begin(), out.train_idx.end());
    std::sort(out.test_idx.begin(), out.test_idx.end());
    std::sort(out.valid_idx.begin(), out.valid_idx.end());
    return out;
}

} // namespace forester
