#include "forester/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/rng.hpp"
#include "forester/stats.hpp"

namespace forester {

nlohmann::json ImportanceResult::to_json() const {
    nlohmann::json j;
    j["metric"] = metric;
    j["baseline"] = baseline;
    j["n_repeats"] = n_repeats;
    j["features"] = nlohmann::json::array();
    for (const FeatureImportance& f : features)
        j["features"].push_back(
            {{"feature", f.feature}, {"mean_drop", f.mean_drop}, {"stddev", f.stddev}});
    return j;
}

nlohmann::json PdpProfile::to_json() const {
    nlohmann::json j;
    j["feature"] = feature;
    j["categorical"] = categorical;
    if (categorical) j["levels"] = levels;
    else j["grid"] = grid;
    if (!class_labels.empty()) j["class_labels"] = class_labels;
    j["profile"] = profile;
    return j;
}

namespace {

double metric_score(const TrainedModel& model, const Frame& frame,
                    const std::string& metric, const MetricRegistry& registry) {
    const Predictions preds = predict(model, frame);
    const GroundTruth truth = extract_truth(FrameView(frame), model.recipe.target_name,
                                            preds.class_labels, model.task);
    const MetricMap values = registry.evaluate(truth, preds);
    auto it = values.find(metric);
    if (it == values.end() || !it->second.value)
        throw DataError("metric '" + metric + "' undefined on this data");
    return *it->second.value;
}

Column shuffled_column(const Column& col, Rng& rng) {
    std::vector<std::size_t> perm(col.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Column out = col;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.text[i] = col.text[perm[i]];
        out.numeric[i] = col.numeric[perm[i]];
        out.missing[i] = col.missing[perm[i]];
    }
    return out;
}

} // namespace

ImportanceResult permutation_importance(const TrainedModel& model, const Frame& frame,
                                        const std::string& metric,
                                        const MetricRegistry& registry, int n_repeats,
                                        std::uint64_t seed) {
    if (n_repeats < 1) throw DataError("n_repeats must be at least 1");
    if (!registry.has(metric)) throw DataError("unknown metric '" + metric + "'");
    if (!registry.applicable(metric, model.task))
        throw DataError("metric '" + metric + "' is incompatible with task " +
                        to_string(model.task));
    const double sign = registry.higher_better(metric) ? 1.0 : -1.0;

    ImportanceResult result;
    result.metric = metric;
    result.n_repeats = n_repeats;
    result.baseline = metric_score(model, frame, metric, registry);

    for (std::size_t fi = 0; fi < model.recipe.features.size(); ++fi) {
        const std::string& name = model.recipe.features[fi].name;
        std::vector<double> drops;
        for (int rep = 0; rep < n_repeats; ++rep) {
            Rng rng = Rng(seed).spawn(fi * 1024 + static_cast<std::size_t>(rep));
            const Frame perturbed =
                frame.with_column_replaced(shuffled_column(frame.column(name), rng));
            const double score = metric_score(model, perturbed, metric, registry);
            drops.push_back(sign * (result.baseline - score));
        }
        FeatureImportance imp;
        imp.feature = name;
        imp.mean_drop = mean(drops);
        double ss = 0.0;
        for (double d : drops) ss += (d - imp.mean_drop) * (d - imp.mean_drop);
        imp.stddev = drops.size() > 1
                         ? std::sqrt(ss / static_cast<double>(drops.size() - 1))
                         : 0.0;
        result.features.push_back(std::move(imp));
    }
    return result;
}

PdpProfile partial_dependence(const TrainedModel& model, const Frame& frame,
                              const std::string& feature, int grid_size) {
    if (grid_size < 2) throw DataError("grid_size must be at least 2");
    bool known = false;
    for (const FeatureRecipe& f : model.recipe.features) known |= f.name == feature;
    if (!known)
        throw DataError("feature '" + feature + "' is not part of the model");
    if (!frame.has_column(feature)) throw DataError("unknown feature '" + feature + "'");
    const Column& col = frame.column(feature);

    PdpProfile prof;
    prof.feature = feature;
    prof.categorical = col.kind == ColumnKind::Categorical;
    if (model.task != TaskType::Regression) prof.class_labels = model.recipe.class_labels;

    if (prof.categorical) {
        std::set<std::string> seen;
        for (std::size_t r = 0; r < col.size(); ++r)
            if (!col.missing[r]) seen.insert(col.text[r]);
        prof.levels.assign(seen.begin(), seen.end());
        if (prof.levels.empty()) throw DataError("feature '" + feature + "' is fully missing");
    } else {
        std::vector<double> values;
        for (std::size_t r = 0; r < col.size(); ++r)
            if (!col.missing[r]) values.push_back(col.numeric[r]);
        if (values.empty()) throw DataError("feature '" + feature + "' is fully missing");
        std::set<double> grid;
        for (int i = 0; i < grid_size; ++i)
            grid.insert(quantile(values, static_cast<double>(i) /
                                             static_cast<double>(grid_size - 1)));
        prof.grid.assign(grid.begin(), grid.end());
    }

    const std::size_t n_points =
        prof.categorical ? prof.levels.size() : prof.grid.size();
    const std::size_t n_out =
        model.task == TaskType::Regression ? 1 : prof.class_labels.size();
    prof.profile.assign(n_out, std::vector<double>(n_points, 0.0));

    for (std::size_t g = 0; g < n_points; ++g) {
        Column replaced = col;
        for (std::size_t r = 0; r < replaced.size(); ++r) {
            replaced.missing[r] = 0;
            if (prof.categorical) {
                replaced.text[r] = prof.levels[g];
            } else {
                replaced.numeric[r] = prof.grid[g];
                replaced.text[r] = std::to_string(prof.grid[g]);
            }
        }
        const Predictions preds = predict(model, frame.with_column_replaced(replaced));
        const double n = static_cast<double>(frame.n_rows());
        if (model.task == TaskType::Regression) {
            prof.profile[0][g] = mean(preds.values);
        } else {
            for (const auto& row : preds.probs)
                for (std::size_t c = 0; c < n_out; ++c) prof.profile[c][g] += row[c] / n;
        }
    }
    return prof;
}

} // namespace forester
