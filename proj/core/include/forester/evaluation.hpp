#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/engines.hpp"
#include "forester/frame.hpp"

namespace forester {

// Zero-denominator ratios are reported as 0 with the flag set, so ranked
// lists never contain non-finite values. A missing value (e.g. AUC on a
// single-class truth set) stays nullopt and renders blank.
struct MetricValue {
    std::optional<double> value;
    bool zero_substituted = false;
};

using MetricMap = std::map<std::string, MetricValue>;

struct GroundTruth {
    TaskType task = TaskType::Regression;
    std::vector<int> classes;          // indices into labels, classification
    std::vector<double> values;        // regression
    std::vector<std::string> labels;   // canonical order

    std::size_t size() const {
        return task == TaskType::Regression ? values.size() : classes.size();
    }
};

GroundTruth extract_truth(const FrameView& view, const std::string& target,
                          const std::vector<std::string>& labels, TaskType task);

MetricMap binary_metrics(const std::vector<int>& truths, const std::vector<double>& pos_probs,
                         double threshold = 0.5);
MetricMap multiclass_metrics(const std::vector<int>& truths,
                             const std::vector<std::vector<double>>& prob_rows);
MetricMap regression_metrics(const std::vector<double>& truths,
                             const std::vector<double>& preds);

struct Metric {
    std::string name;
    bool higher_better = true;
    std::set<TaskType> tasks;
    std::function<double(const GroundTruth&, const Predictions&)> compute;
};

class MetricRegistry {
public:
    static MetricRegistry built_ins();

    void register_custom_metric(Metric metric);
    bool has(const std::string& name) const;
    bool higher_better(const std::string& name) const;
    bool applicable(const std::string& name, TaskType task) const;
    std::vector<std::string> names_for(TaskType task) const;
    const std::vector<Metric>& custom_metrics() const { return custom_; }

    static std::string default_sort_metric(TaskType task);

    // Full metric suite for one prediction set: built-ins plus customs.
    MetricMap evaluate(const GroundTruth& truth, const Predictions& preds) const;

    nlohmann::json snapshot() const;  // names and directions only

private:
    struct Entry {
        bool higher_better;
        std::set<TaskType> tasks;
        bool built_in;
    };
    std::map<std::string, Entry> entries_;
    std::vector<Metric> custom_;
};

struct LeaderboardRow {
    std::string model_name;
    EngineKind engine = EngineKind::Tree;
    std::string origin;  // default | random_search | bayes_opt
    // metric name -> split name -> value
    std::map<std::string, std::map<std::string, MetricValue>> metrics;
};

struct Leaderboard {
    std::string sort_metric;
    std::string split = "test";
    bool higher_better = true;
    std::vector<LeaderboardRow> rows;

    std::string to_csv() const;
    nlohmann::json to_json() const;
    static Leaderboard from_json(const nlohmann::json& j);
};

Leaderboard rank_models(std::vector<LeaderboardRow> rows, const std::string& sort_metric,
                        const std::string& split, bool higher_better);

} // namespace forester
