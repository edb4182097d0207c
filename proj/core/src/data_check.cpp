#include "forester/data_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/stats.hpp"

namespace forester {

std::string to_string(IssueKind kind) {
    switch (kind) {
    case IssueKind::DuplicateColumns: return "duplicate_columns";
    case IssueKind::IdLikeColumn: return "id_like_column";
    case IssueKind::StaticColumn: return "static_column";
    case IssueKind::SparseColumn: return "sparse_column";
    case IssueKind::CorruptedRow: return "corrupted_row";
    case IssueKind::HighCorrelationPair: return "high_correlation_pair";
    case IssueKind::NumericOutliers: return "numeric_outliers";
    case IssueKind::MissingValues: return "missing_values";
    case IssueKind::TargetImbalance: return "target_imbalance";
    }
    return "unknown";
}

std::string to_string(Severity severity) {
    return severity == Severity::Info ? "info" : "warning";
}

void CheckThresholds::validate() const {
    for (double v : {k, l, m, n})
        if (v < 0.0 || v > 1.0) throw DataError("check thresholds must lie in [0,1]");
}

nlohmann::json CheckThresholds::to_json() const {
    return nlohmann::json{{"k", k}, {"l", l}, {"m", m}, {"n", n}};
}

CheckThresholds CheckThresholds::from_json(const nlohmann::json& j) {
    CheckThresholds t;
    t.k = j.value("k", t.k);
    t.l = j.value("l", t.l);
    t.m = j.value("m", t.m);
    t.n = j.value("n", t.n);
    t.validate();
    return t;
}

const std::vector<std::string> kDefaultIdNameTokens = {
    "id", "index", "key", "identifier", "uuid", "guid", "nr", "number"};

namespace {

bool columns_identical(const Column& a, const Column& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (a.missing[r] != b.missing[r]) return false;
        if (!a.missing[r] && a.text[r] != b.text[r]) return false;
    }
    return true;
}

std::vector<std::string> name_tokens(const std::string& name) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : to_lower(name)) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(ch);
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

} // namespace

std::vector<DataIssue> detect_duplicate_columns(const Frame& frame) {
    std::vector<DataIssue> issues;
    std::vector<bool> grouped(frame.n_cols(), false);
    for (std::size_t i = 0; i < frame.n_cols(); ++i) {
        if (grouped[i]) continue;
        std::vector<std::string> group = {frame.column(i).name};
        for (std::size_t j = i + 1; j < frame.n_cols(); ++j) {
            if (grouped[j]) continue;
            if (columns_identical(frame.column(i), frame.column(j))) {
                group.push_back(frame.column(j).name);
                grouped[j] = true;
            }
        }
        if (group.size() > 1) {
            DataIssue issue;
            issue.kind = IssueKind::DuplicateColumns;
            issue.subjects = group;
            issue.detail = "columns hold identical values";
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_id_like(const Frame& frame,
                                      const std::vector<std::string>& name_list) {
    std::set<std::string> wanted;
    for (const std::string& t : name_list) wanted.insert(to_lower(t));
    std::vector<DataIssue> issues;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        std::string why;
        for (const std::string& tok : name_tokens(col.name)) {
            if (wanted.count(tok)) {
                why = "name token '" + tok + "' matches the id-like list";
                break;
            }
        }
        if (why.empty() && col.kind == ColumnKind::Numeric && col.size() > 0) {
            bool all_distinct_ints = col.n_missing() == 0;
            std::set<double> seen;
            for (std::size_t r = 0; all_distinct_ints && r < col.size(); ++r) {
                const double v = col.numeric[r];
                if (v != std::floor(v) || !seen.insert(v).second) all_distinct_ints = false;
            }
            if (all_distinct_ints) why = "all-distinct integer values";
        }
        if (!why.empty()) {
            DataIssue issue;
            issue.kind = IssueKind::IdLikeColumn;
            issue.subjects = {col.name};
            issue.detail = why;
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_static(const Frame& frame, double k) {
    std::vector<DataIssue> issues;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        std::map<std::string, std::size_t> counts;
        std::size_t present = 0;
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col.missing[r]) continue;
            ++present;
            counts[col.text[r]] += 1;
        }
        if (present == 0) continue;
        std::size_t modal = 0;
        for (const auto& [value, count] : counts) modal = std::max(modal, count);
        const double share = static_cast<double>(modal) / static_cast<double>(present);
        if (share >= k) {
            DataIssue issue;
            issue.kind = IssueKind::StaticColumn;
            issue.subjects = {col.name};
            issue.statistic = share;
            issue.detail = "modal value share " + std::to_string(share);
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_sparse(const Frame& frame, double l) {
    std::vector<DataIssue> issues;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        if (col.size() == 0) continue;
        const double share =
            static_cast<double>(col.n_present()) / static_cast<double>(col.size());
        if (share < l) {
            DataIssue issue;
            issue.kind = IssueKind::SparseColumn;
            issue.subjects = {col.name};
            issue.statistic = share;
            issue.detail = "non-missing share " + std::to_string(share);
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_corrupted_rows(const Frame& frame, const std::string& target,
                                             double m) {
    const auto target_idx = frame.column_index(target);
    if (!target_idx) throw DataError("unknown target '" + target + "'");
    std::vector<DataIssue> issues;
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        std::size_t present = 0;
        for (std::size_t c = 0; c < frame.n_cols(); ++c)
            if (!frame.is_missing(c, r)) ++present;
        const double share = static_cast<double>(present) / static_cast<double>(frame.n_cols());
        const bool target_missing = frame.is_missing(*target_idx, r);
        if (share < m || target_missing) {
            DataIssue issue;
            issue.kind = IssueKind::CorruptedRow;
            issue.subjects = {std::to_string(r)};
            issue.statistic = share;
            issue.detail = target_missing ? "missing target value"
                                          : "row non-missing share " + std::to_string(share);
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_high_correlation(const Frame& frame, double n) {
    std::vector<DataIssue> issues;
    for (std::size_t a = 0; a < frame.n_cols(); ++a) {
        for (std::size_t b = a + 1; b < frame.n_cols(); ++b) {
            const auto r = column_association(frame, a, b);
            if (r && std::abs(*r) >= n) {
                DataIssue issue;
                issue.kind = IssueKind::HighCorrelationPair;
                issue.subjects = {frame.column(a).name, frame.column(b).name};
                issue.statistic = *r;
                issue.detail = "association " + std::to_string(*r);
                issues.push_back(std::move(issue));
            }
        }
    }
    return issues;
}

std::vector<DataIssue> detect_outliers(const Frame& frame) {
    std::vector<DataIssue> issues;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        if (col.kind != ColumnKind::Numeric) continue;
        std::vector<double> values;
        for (std::size_t r = 0; r < col.size(); ++r)
            if (!col.missing[r]) values.push_back(col.numeric[r]);
        if (values.size() < 4) continue;
        const double q1 = quantile(values, 0.25);
        const double q3 = quantile(values, 0.75);
        const double iqr = q3 - q1;
        const double lo = q1 - 3.0 * iqr;
        const double hi = q3 + 3.0 * iqr;
        std::size_t count = 0;
        for (double v : values)
            if (v < lo || v > hi) ++count;
        if (count > 0) {
            DataIssue issue;
            issue.kind = IssueKind::NumericOutliers;
            issue.severity = Severity::Info;
            issue.subjects = {col.name};
            issue.statistic = static_cast<double>(count);
            issue.detail = std::to_string(count) + " cells outside [Q1-3*IQR, Q3+3*IQR]";
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

std::vector<DataIssue> detect_missing(const Frame& frame) {
    std::vector<DataIssue> issues;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        const std::size_t miss = col.n_missing();
        if (miss == 0 || col.size() == 0) continue;
        DataIssue issue;
        issue.kind = IssueKind::MissingValues;
        issue.severity = Severity::Info;
        issue.subjects = {col.name};
        issue.statistic = static_cast<double>(miss) / static_cast<double>(col.size());
        issue.detail = std::to_string(miss) + " missing cells";
        issues.push_back(std::move(issue));
    }
    return issues;
}

std::vector<DataIssue> detect_imbalance(const Frame& frame, const std::string& target) {
    std::vector<DataIssue> issues;
    TaskInfo info;
    try {
        info = detect_task(frame, target);
    } catch (const DataError&) {
        return issues;
    }
    if (info.type == TaskType::Regression) return issues;
    const Column& col = frame.column(target);
    std::map<std::string, std::size_t> counts;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r]) counts[col.text[r]] += 1;
    std::size_t majority = 0, minority = col.size();
    for (const auto& [label, count] : counts) {
        majority = std::max(majority, count);
        minority = std::min(minority, count);
    }
    if (minority > 0) {
        const double ratio = static_cast<double>(majority) / static_cast<double>(minority);
        if (ratio > 3.0) {
            DataIssue issue;
            issue.kind = IssueKind::TargetImbalance;
            issue.subjects = {target};
            issue.statistic = ratio;
            issue.detail = "majority/minority class ratio " + std::to_string(ratio);
            issues.push_back(std::move(issue));
        }
    }
    return issues;
}

namespace {

// Kind order first, then first subject; row-index subjects compare numerically.
bool issue_less(const DataIssue& a, const DataIssue& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    const std::string& sa = a.subjects.front();
    const std::string& sb = b.subjects.front();
    const auto na = parse_number(sa);
    const auto nb = parse_number(sb);
    if (na && nb && *na != *nb) return *na < *nb;
    return sa < sb;
}

} // namespace

DataCheckReport check_data(const Frame& frame, const std::string& target,
                           const CheckThresholds& thresholds) {
    thresholds.validate();
    if (!frame.has_column(target)) throw DataError("unknown target '" + target + "'");

    DataCheckReport report;
    report.frame_summary.n_rows = frame.n_rows();
    report.frame_summary.n_cols = frame.n_cols();
    for (const Column& c : frame.columns()) {
        if (c.kind == ColumnKind::Numeric) ++report.frame_summary.n_numeric;
        else ++report.frame_summary.n_categorical;
        report.frame_summary.n_missing_cells += c.n_missing();
    }
    report.frame_summary.target_name = target;
    try {
        const TaskInfo info = detect_task(frame, target);
        report.frame_summary.target_summary = to_string(info.type);
        if (!info.labels.empty())
            report.frame_summary.target_summary +=
                " (" + std::to_string(info.labels.size()) + " classes)";
    } catch (const DataError& e) {
        report.frame_summary.target_summary = std::string("undetectable: ") + e.what();
    }
    if (frame.n_rows() == 0) return report;

    const Frame features = frame.drop_columns({target});
    auto add = [&](std::vector<DataIssue> issues) {
        for (DataIssue& i : issues) report.issues.push_back(std::move(i));
    };
    add(detect_duplicate_columns(features));
    add(detect_id_like(features));
    add(detect_static(features, thresholds.k));
    add(detect_sparse(features, thresholds.l));
    add(detect_corrupted_rows(frame, target, thresholds.m));
    add(detect_high_correlation(features, thresholds.n));
    add(detect_outliers(frame));
    add(detect_missing(frame));
    add(detect_imbalance(frame, target));
    std::stable_sort(report.issues.begin(), report.issues.end(), issue_less);
    return report;
}

std::string DataCheckReport::to_text() const {
    std::ostringstream out;
    out << "Data check: " << frame_summary.n_rows << " rows, " << frame_summary.n_cols
        << " columns (" << frame_summary.n_numeric << " numeric, "
        << frame_summary.n_categorical << " categorical), " << frame_summary.n_missing_cells
        << " missing cells\n";
    out << "Target: " << frame_summary.target_name << " [" << frame_summary.target_summary
        << "]\n";
    if (issues.empty()) {
        out << "No issues detected.\n";
        return out.str();
    }
    out << issues.size() << " issue(s):\n";
    for (const DataIssue& issue : issues) {
        out << "  [" << to_string(issue.severity) << "] " << to_string(issue.kind) << ": ";
        for (std::size_t i = 0; i < issue.subjects.size(); ++i) {
            if (i) out << ", ";
            out << issue.subjects[i];
        }
        out << " - " << issue.detail;
        if (issue.statistic) out << " (statistic " << *issue.statistic << ")";
        out << "\n";
    }
    return out.str();
}

nlohmann::json DataCheckReport::to_json() const {
    nlohmann::json j;
    j["summary"] = {
        {"n_rows", frame_summary.n_rows},
        {"n_cols", frame_summary.n_cols},
        {"n_numeric", frame_summary.n_numeric},
        {"n_categorical", frame_summary.n_categorical},
        {"n_missing_cells", frame_summary.n_missing_cells},
        {"target", frame_summary.target_name},
        {"target_summary", frame_summary.target_summary},
    };
    j["issues"] = nlohmann::json::array();
    for (const DataIssue& issue : issues) {
        nlohmann::json ji;
        ji["kind"] = to_string(issue.kind);
        ji["severity"] = to_string(issue.severity);
        ji["subjects"] = issue.subjects;
        ji["detail"] = issue.detail;
        if (issue.statistic) ji["statistic"] = *issue.statistic;
        else ji["statistic"] = nullptr;
        j["issues"].push_back(std::move(ji));
    }
    return j;
}

namespace {

IssueKind issue_kind_from_string(const std::string& s) {
    static const std::map<std::string, IssueKind> table = {
        {"duplicate_columns", IssueKind::DuplicateColumns},
        {"id_like_column", IssueKind::IdLikeColumn},
        {"static_column", IssueKind::StaticColumn},
        {"sparse_column", IssueKind::SparseColumn},
        {"corrupted_row", IssueKind::CorruptedRow},
        {"high_correlation_pair", IssueKind::HighCorrelationPair},
        {"numeric_outliers", IssueKind::NumericOutliers},
        {"missing_values", IssueKind::MissingValues},
        {"target_imbalance", IssueKind::TargetImbalance},
    };
    auto it = table.find(s);
    if (it == table.end()) throw ParseError("unknown issue kind '" + s + "'");
    return it->second;
}

} // namespace

DataCheckReport DataCheckReport::from_json(const nlohmann::json& j) {
    DataCheckReport report;
    const auto& s = j.at("summary");
    report.frame_summary.n_rows = s.at("n_rows").get<std::size_t>();
    report.frame_summary.n_cols = s.at("n_cols").get<std::size_t>();
    report.frame_summary.n_numeric = s.at("n_numeric").get<std::size_t>();
    report.frame_summary.n_categorical = s.at("n_categorical").get<std::size_t>();
    report.frame_summary.n_missing_cells = s.at("n_missing_cells").get<std::size_t>();
    report.frame_summary.target_name = s.at("target").get<std::string>();
    report.frame_summary.target_summary = s.at("target_summary").get<std::string>();
    for (const auto& ji : j.at("issues")) {
        DataIssue issue;
        issue.kind = issue_kind_from_string(ji.at("kind").get<std::string>());
        issue.severity =
            ji.at("severity").get<std::string>() == "info" ? Severity::Info : Severity::Warning;
        issue.subjects = ji.at("subjects").get<std::vector<std::string>>();
        issue.detail = ji.at("detail").get<std::string>();
        if (!ji.at("statistic").is_null()) issue.statistic = ji.at("statistic").get<double>();
        report.issues.push_back(std::move(issue));
    }
    return report;
}

} // namespace forester
