#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/frame.hpp"
#include "forester/rng.hpp"

namespace forester {

enum class EngineKind { Tree, RandomForest, GbdtDepthwise, GbdtLeafwise };
enum class GrowthPolicy { Depthwise, Leafwise };
enum class Criterion { Gini, Entropy, Variance };

std::string to_string(EngineKind kind);
std::optional<EngineKind> engine_from_string(const std::string& name);
std::vector<EngineKind> all_engines();

// One bag of knobs shared by all engines; each engine reads its subset.
struct Hyperparams {
    // single tree / forest trees
    int max_depth = 10;
    int min_samples_leaf = 5;
    Criterion criterion = Criterion::Gini;
    // random forest
    int n_trees = 100;
    int mtry = 0;  // 0 = engine default (sqrt(p) classification, p/3 regression)
    double sample_fraction = 0.632;
    bool replace = false;
    // gbdt
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_leaves = 31;
    double min_child_weight = 1.0;
    double lambda = 1.0;
    double subsample = 1.0;
    double colsample = 1.0;

    nlohmann::json to_json(EngineKind engine) const;
    static Hyperparams from_json(EngineKind engine, const nlohmann::json& j);
};

Hyperparams default_hyperparams(EngineKind engine);

// How a single input feature is presented to the trees.
struct FeatureRecipe {
    enum class Encoding { Numeric, Levels, TargetStat };
    std::string name;
    Encoding encoding = Encoding::Numeric;
    std::vector<std::string> levels;              // Levels: code == position
    std::map<std::string, double> level_stats;    // TargetStat
    double default_stat = 0.0;                    // TargetStat: unseen level
};

// Stored with every model so prediction can reproduce the training-time
// data format, including the class label order for classification.
struct Recipe {
    std::string target_name;
    TaskType task = TaskType::Regression;
    std::vector<std::string> class_labels;  // canonical sorted order
    std::vector<FeatureRecipe> features;
};

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;  // recipe feature index
    double threshold = 0.0;
    bool categorical = false;
    std::vector<char> left_levels;  // categorical: level code -> goes left
    int left = -1;
    int right = -1;
    bool default_left = true;  // unseen-level routing: majority child
    double gain = 0.0;
    std::vector<double> value;  // leaf: class distribution, or {mean}; gbdt: {leaf value}
    double n_samples = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct Predictions {
    TaskType task = TaskType::Regression;
    std::vector<std::string> class_labels;
    std::vector<std::vector<double>> probs;  // classification, rows on the simplex
    std::vector<double> values;              // regression

    std::size_t size() const {
        return task == TaskType::Regression ? values.size() : probs.size();
    }
};

struct TrainedModel {
    EngineKind engine = EngineKind::Tree;
    TaskType task = TaskType::Regression;
    Hyperparams params;
    Recipe recipe;
    std::vector<double> base_score;  // gbdt raw offsets; empty otherwise
    std::vector<Tree> trees;         // multiclass gbdt: round-major, one tree per class
    std::string name;
    std::vector<double> train_loss_curve;         // gbdt: per-round training loss
    std::vector<std::vector<double>> oob_probs;   // rf classification OOB votes (mean)
    std::vector<double> oob_values;               // rf regression OOB predictions
    std::vector<char> oob_seen;                   // rows with at least one OOB vote

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);
};

// Second-order boosting split gain for a candidate partition.
inline double gbdt_split_gain(double gl, double hl, double gr, double hr, double lambda) {
    const double g = gl + gr;
    const double h = hl + hr;
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

TrainedModel fit_tree(const FrameView& data, const std::string& target,
                      const Hyperparams& params, std::uint64_t seed);
TrainedModel fit_random_forest(const FrameView& data, const std::string& target,
                               const Hyperparams& params, std::uint64_t seed);
TrainedModel fit_gbdt(const FrameView& data, const std::string& target,
                      const Hyperparams& params, GrowthPolicy growth, std::uint64_t seed);

// Dispatch on engine kind.
TrainedModel fit_model(EngineKind engine, const FrameView& data, const std::string& target,
                       const Hyperparams& params, std::uint64_t seed);

Predictions predict(const TrainedModel& model, const FrameView& data);
Predictions predict(const TrainedModel& model, const Frame& data);

// Total split-gain attributed to each feature, by recipe feature name.
std::map<std::string, double> gain_importance(const TrainedModel& model);

// Process-wide worker cap for tree-parallel fitting (1 = sequential).
void set_max_threads(int n);
int max_threads();

} // namespace forester
