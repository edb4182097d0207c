#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/frame.hpp"

namespace forester {

enum class IssueKind {
    DuplicateColumns,
    IdLikeColumn,
    StaticColumn,
    SparseColumn,
    CorruptedRow,
    HighCorrelationPair,
    NumericOutliers,
    MissingValues,
    TargetImbalance,
};

enum class Severity { Info, Warning };

std::string to_string(IssueKind kind);
std::string to_string(Severity severity);

struct DataIssue {
    IssueKind kind;
    Severity severity = Severity::Warning;
    std::vector<std::string> subjects;  // column names, or row indices as text
    std::string detail;
    std::optional<double> statistic;
};

// Threshold parameters for the removal criteria: k = static share,
// l = minimum non-missing column share, m = minimum non-missing row share,
// n = correlation threshold.
struct CheckThresholds {
    double k = 0.99;
    double l = 0.5;
    double m = 0.5;
    double n = 0.7;

    void validate() const;
    nlohmann::json to_json() const;
    static CheckThresholds from_json(const nlohmann::json& j);
};

struct FrameSummary {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::size_t n_numeric = 0;
    std::size_t n_categorical = 0;
    std::size_t n_missing_cells = 0;
    std::string target_name;
    std::string target_summary;
};

struct DataCheckReport {
    std::vector<DataIssue> issues;
    FrameSummary frame_summary;

    std::string to_text() const;
    nlohmann::json to_json() const;
    static DataCheckReport from_json(const nlohmann::json& j);
};

extern const std::vector<std::string> kDefaultIdNameTokens;

std::vector<DataIssue> detect_duplicate_columns(const Frame& frame);
std::vector<DataIssue> detect_id_like(const Frame& frame,
                                      const std::vector<std::string>& name_list =
                                          kDefaultIdNameTokens);
std::vector<DataIssue> detect_static(const Frame& frame, double k = 0.99);
std::vector<DataIssue> detect_sparse(const Frame& frame, double l = 0.5);
std::vector<DataIssue> detect_corrupted_rows(const Frame& frame, const std::string& target,
                                             double m = 0.5);
std::vector<DataIssue> detect_high_correlation(const Frame& frame, double n = 0.7);
std::vector<DataIssue> detect_outliers(const Frame& frame);
std::vector<DataIssue> detect_missing(const Frame& frame);
std::vector<DataIssue> detect_imbalance(const Frame& frame, const std::string& target);

DataCheckReport check_data(const Frame& frame, const std::string& target,
                           const CheckThresholds& thresholds = {});

} // namespace forester
