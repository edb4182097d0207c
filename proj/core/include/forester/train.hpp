#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "forester/data_check.hpp"
#include "forester/engines.hpp"
#include "forester/evaluation.hpp"
#include "forester/frame.hpp"
#include "forester/preprocess.hpp"
#include "forester/tuning.hpp"

namespace forester {

struct TrainConfig {
    std::set<EngineKind> engines = {EngineKind::Tree, EngineKind::RandomForest,
                                    EngineKind::GbdtDepthwise, EngineKind::GbdtLeafwise};
    bool include_defaults = true;
    int random_n = 10;
    int bayes_budget = 20;  // 0 disables Bayesian tuning
    int bayes_init_points = 8;
    std::string metric;       // empty = task default (accuracy / rmse)
    std::string sort_split = "test";
    ParamSpace space = ParamSpace::built_in();
    std::array<double, 3> ratios = {0.6, 0.2, 0.2};
    bool assume_preprocessed = false;  // skip basic_preprocessing
    std::uint64_t seed = 0;
};

struct TrainOutput {
    int schema_version = 1;
    std::string target;
    TaskType task = TaskType::Regression;
    std::vector<std::string> class_labels;
    std::uint64_t seed = 0;

    Frame original;
    Frame preprocessed;
    SplitSet splits;
    DataCheckReport check_report;
    PreprocessLog preprocess_log;

    std::vector<TrainedModel> models;  // model.name is the unique key
    // model name -> split name (train|test|valid) -> predictions
    std::map<std::string, std::map<std::string, Predictions>> predictions;
    std::map<std::string, Leaderboard> leaderboards;  // per split
    std::string sort_metric;
    std::string registry_info;  // serialized metric-registry snapshot
    std::map<std::string, double> timing_seconds;  // per model fit
    std::vector<std::string> warnings;

    const TrainedModel& model(const std::string& name) const;
    const Leaderboard& leaderboard(const std::string& split) const;
};

// Tuning phase in isolation: produces the full candidate list (defaults,
// random search, Bayesian) using only the train and test views. Exposed
// separately so validation-isolation can be asserted at this boundary.
std::vector<Candidate> tune_candidates(const FrameView& train, const FrameView& test,
                                       const std::string& target, const TrainConfig& config,
                                       const MetricRegistry& registry,
                                       std::vector<std::string>* warnings = nullptr);

TrainOutput run_training(const Frame& frame, const std::string& target,
                         const TrainConfig& config,
                         const MetricRegistry& registry = MetricRegistry::built_ins());

} // namespace forester
