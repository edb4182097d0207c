#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace forester {

enum class ColumnKind { Numeric, Categorical };

enum class TaskType { Binary, Multiclass, Regression };

std::string to_string(ColumnKind kind);
std::string to_string(TaskType task);

// Test instrumentation: records which underlying row indices were touched
// through Frame accessors while attached.
struct AccessProbe {
    std::unordered_set<std::size_t> rows_read;
    void note(std::size_t row) { rows_read.insert(row); }
    bool saw_any_of(const std::vector<std::size_t>& rows) const {
        for (std::size_t r : rows)
            if (rows_read.count(r)) return true;
        return false;
    }
};

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;
    std::vector<std::string> text;  // cell text, empty string where missing
    std::vector<double> numeric;    // parallel values, meaningful when kind == Numeric
    std::vector<char> missing;

    std::size_t size() const { return text.size(); }
    std::size_t n_missing() const;
    std::size_t n_present() const { return size() - n_missing(); }
};

Column make_numeric_column(std::string name, std::vector<double> values,
                           std::vector<char> missing = {});
Column make_text_column(std::string name, std::vector<std::string> values,
                        std::vector<char> missing = {});

// Column-oriented immutable table. All mutation happens by constructing a
// new Frame. Cell accessors report reads to the attached probe, if any.
class Frame {
public:
    Frame() = default;
    Frame(std::vector<Column> columns, std::optional<std::string> target = std::nullopt);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }

    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t i) const { return columns_.at(i); }
    const Column& column(const std::string& name) const;
    std::optional<std::size_t> column_index(const std::string& name) const;
    bool has_column(const std::string& name) const { return column_index(name).has_value(); }
    std::vector<std::string> column_names() const;
    std::vector<std::string> feature_names() const;  // all columns except the target

    bool is_missing(std::size_t col, std::size_t row) const;
    double number_at(std::size_t col, std::size_t row) const;
    const std::string& text_at(std::size_t col, std::size_t row) const;

    const std::optional<std::string>& target_name() const { return target_name_; }
    void set_target(const std::string& name);

    Frame select_rows(const std::vector<std::size_t>& rows) const;
    Frame select_columns(const std::vector<std::string>& names) const;
    Frame drop_columns(const std::vector<std::string>& names) const;
    Frame with_column_replaced(const Column& column) const;

    void set_probe(std::shared_ptr<AccessProbe> probe) const { probe_ = std::move(probe); }

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
    std::optional<std::string> target_name_;
    mutable std::shared_ptr<AccessProbe> probe_;
};

// Read-only row subset of a Frame. Cell reads go through the underlying
// frame, so an attached probe sees the original row indices.
class FrameView {
public:
    FrameView(const Frame& frame, std::vector<std::size_t> rows)
        : frame_(&frame), rows_(std::move(rows)) {}
    explicit FrameView(const Frame& frame);  // all rows

    const Frame& frame() const { return *frame_; }
    std::size_t n_rows() const { return rows_.size(); }
    const std::vector<std::size_t>& row_indices() const { return rows_; }

    bool is_missing(std::size_t col, std::size_t row) const {
        return frame_->is_missing(col, rows_[row]);
    }
    double number_at(std::size_t col, std::size_t row) const {
        return frame_->number_at(col, rows_[row]);
    }
    const std::string& text_at(std::size_t col, std::size_t row) const {
        return frame_->text_at(col, rows_[row]);
    }

    Frame materialize() const { return frame_->select_rows(rows_); }

private:
    const Frame* frame_;
    std::vector<std::size_t> rows_;
};

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
    // Matched case-insensitively after trimming.
    std::vector<std::string> missing_markers = {"", "na", "nan", "null"};
};

Frame load_csv(const std::string& path, const CsvOptions& options = {});
Frame parse_csv(const std::string& content, const CsvOptions& options = {});
void write_csv(const Frame& frame, const std::string& path, const CsvOptions& options = {});
std::string to_csv(const Frame& frame, const CsvOptions& options = {});

// A column becomes Numeric iff every non-missing cell parses as a finite
// real number; fully-missing columns stay Categorical.
Frame infer_types(const Frame& frame);

struct TaskInfo {
    TaskType type = TaskType::Regression;
    // Canonical (lexicographically sorted) label set for classification.
    std::vector<std::string> labels;
    // Binary positive class: lexicographically greater label unless overridden.
    std::string positive_label;
};

TaskInfo detect_task(const Frame& frame, const std::string& target, int multiclass_limit = 20);

struct SplitSet {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> valid_idx;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios = {0.6, 0.2, 0.2};
    bool stratified = false;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static SplitSet from_json(const nlohmann::json& j);
};

SplitSet split_frame(const Frame& frame, std::array<double, 3> ratios, std::uint64_t seed,
                     bool stratify);

// Shared helpers.
std::string trim(const std::string& s);
std::string to_lower(const std::string& s);
std::optional<double> parse_number(const std::string& s);

} // namespace forester
