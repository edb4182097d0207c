#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "forester/engines.hpp"

namespace forester {

struct ParamDim {
    enum class Kind { Int, Real, Choice };

    std::string name;
    Kind kind = Kind::Real;
    double lo = 0.0;
    double hi = 1.0;
    bool log_scale = false;
    std::vector<std::string> options;  // Choice only

    void validate() const;
    nlohmann::json to_json() const;
    static ParamDim from_json(const nlohmann::json& j);
};

// Dimension names address Hyperparams fields ("max_depth", "learning_rate",
// "criterion", ...), so user-supplied spaces plug into the same machinery.
struct ParamSpace {
    std::map<EngineKind, std::vector<ParamDim>> dims;

    static ParamSpace built_in();
    const std::vector<ParamDim>& for_engine(EngineKind engine) const;

    nlohmann::json to_json() const;
    // Override format: {"tree": [dim...], "random_forest": [...], ...};
    // engines absent from the JSON keep the built-in table.
    static ParamSpace from_json(const nlohmann::json& j);
};

struct Candidate {
    EngineKind engine = EngineKind::Tree;
    Hyperparams params;
    std::string origin = "default";  // default | random_search | bayes_opt
    std::optional<double> objective_value;
};

struct BayesState {
    std::vector<std::vector<double>> points;  // unit-cube encodings
    std::vector<double> values;               // objective per point
    std::vector<double> length_scales;        // fitted kernel hyperparameters
    double amplitude = 1.0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

// Unit-cube encoding of a parameter point: int/real dims map to one
// coordinate (log-warped when requested), choices map to a one-hot block.
std::size_t encoded_width(const std::vector<ParamDim>& dims);
std::vector<double> encode_point(const std::vector<ParamDim>& dims, const Hyperparams& p);
Hyperparams decode_point(const std::vector<ParamDim>& dims, const std::vector<double>& x,
                         Hyperparams base);

std::vector<Candidate> default_candidates(const std::set<EngineKind>& engines);
std::vector<Candidate> random_search(const std::set<EngineKind>& engines,
                                     const ParamSpace& space, int n_per_engine,
                                     std::uint64_t seed);

using TuneObjective = std::function<double(const Candidate&)>;

// Maximizes the objective: LHS init (always containing the engine default
// point), then GP + expected-improvement iterations up to `budget` total
// evaluations. Non-finite objective values are recorded as the worst
// observed value, with a warning in the returned state.
std::pair<Candidate, BayesState> bayes_opt(EngineKind engine, const ParamSpace& space,
                                           const TuneObjective& objective, int budget,
                                           int init_points, std::uint64_t seed);

// GP posterior at query points, exposed for surrogate sanity checks.
struct GpPosterior {
    std::vector<double> mean;
    std::vector<double> stddev;
};
GpPosterior gp_posterior(const std::vector<std::vector<double>>& points,
                         const std::vector<double>& values,
                         const std::vector<double>& length_scales, double amplitude,
                         double noise, const std::vector<std::vector<double>>& queries);

} // namespace forester
