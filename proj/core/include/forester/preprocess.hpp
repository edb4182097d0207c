#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/data_check.hpp"
#include "forester/frame.hpp"

namespace forester {

struct MedianOther {};
struct MedianFrequency {};
struct Knn {
    int k_neighbors = 5;
};
struct Mice {
    int iterations = 5;
};
using ImputeMethod = std::variant<MedianOther, MedianFrequency, Knn, Mice>;

struct SelectNone {};
struct MutualInfo {
    int top_k = 10;
};
struct Boruta {
    int max_iter = 20;
    double alpha = 0.05;
};
struct Mcfs {
    int projections = 100;
    double fraction = 0.3;
    int top_k = 10;
};
struct PermutationVI {
    int n_repeats = 5;
};
using SelectMethod = std::variant<SelectNone, MutualInfo, Boruta, Mcfs, PermutationVI>;

struct PreprocessConfig {
    bool remove_duplicates = false;
    bool remove_id_like = false;
    bool remove_static = false;
    bool remove_sparse = false;
    bool remove_corrupted_rows = false;
    bool remove_correlated = false;
    CheckThresholds thresholds;
    std::optional<ImputeMethod> impute;
    SelectMethod select = SelectNone{};
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static PreprocessConfig from_json(const nlohmann::json& j);
};

struct PreprocessAction {
    std::string stage;    // removal | imputation | selection | labels
    std::string subject;  // column name or "row <i>"
    std::string reason;
    std::optional<double> statistic;
};

struct PreprocessLog {
    std::vector<PreprocessAction> actions;

    void add(std::string stage, std::string subject, std::string reason,
             std::optional<double> statistic = std::nullopt);
    nlohmann::json to_json() const;
    static PreprocessLog from_json(const nlohmann::json& j);
    std::string to_text() const;
};

struct PreprocessResult {
    Frame frame;
    PreprocessLog log;
};

// Pillar 2: removal -> imputation -> selection, in that fixed order. The
// target column is never removed or imputed; rows with a missing target
// are dropped, never filled.
PreprocessResult custom_preprocessing(const Frame& frame, const std::string& target,
                                      const PreprocessConfig& config);

// Greedy multicollinearity reduction: while pairs at or above the threshold
// remain, drop the column with the most violations (ties: larger mean
// absolute correlation, then later column order). The target never drops.
std::pair<Frame, std::vector<std::string>> remove_correlated(const Frame& frame, double n);

Frame impute(const Frame& frame, const ImputeMethod& method, std::uint64_t seed);

std::vector<std::string> select_mutual_info(const Frame& frame, const std::string& target,
                                            int top_k);
std::vector<std::string> select_boruta(const Frame& frame, const std::string& target,
                                       int max_iter, double alpha, std::uint64_t seed);
std::vector<std::string> select_mcfs(const Frame& frame, const std::string& target,
                                     int projections, double fraction, int top_k,
                                     std::uint64_t seed);
std::vector<std::string> select_permutation_vi(const Frame& frame, const std::string& target,
                                               int n_repeats, std::uint64_t seed);

// Pillar 3 fallback: static removal at k=0.99, KNN(5) imputation, canonical
// label normalization for classification targets.
PreprocessResult basic_preprocessing(const Frame& frame, const std::string& target);

} // namespace forester
