#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/engines.hpp"
#include "forester/evaluation.hpp"
#include "forester/frame.hpp"

namespace forester {

struct FeatureImportance {
    std::string feature;
    double mean_drop = 0.0;
    double stddev = 0.0;
};

struct ImportanceResult {
    std::string metric;
    double baseline = 0.0;
    int n_repeats = 1;
    std::vector<FeatureImportance> features;  // model feature order

    nlohmann::json to_json() const;
};

struct PdpProfile {
    std::string feature;
    bool categorical = false;
    std::vector<double> grid;                 // numeric grid (sorted)
    std::vector<std::string> levels;          // categorical grid
    std::vector<std::string> class_labels;    // classification only
    // profile[class][grid point]; regression uses a single pseudo-class
    std::vector<std::vector<double>> profile;

    nlohmann::json to_json() const;
};

// Mean drop of the metric when one feature is shuffled, averaged over
// n_repeats permutations. Lower-better metrics have the sign flipped so a
// positive value always means "the model relies on this feature".
ImportanceResult permutation_importance(const TrainedModel& model, const Frame& frame,
                                        const std::string& metric,
                                        const MetricRegistry& registry, int n_repeats,
                                        std::uint64_t seed);

PdpProfile partial_dependence(const TrainedModel& model, const Frame& frame,
                              const std::string& feature, int grid_size = 20);

} // namespace forester
