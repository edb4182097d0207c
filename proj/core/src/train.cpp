#include "forester/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/rng.hpp"

namespace forester {

const TrainedModel& TrainOutput::model(const std::string& name) const {
    for (const TrainedModel& m : models)
        if (m.name == name) return m;
    throw DataError("unknown model '" + name + "'");
}

const Leaderboard& TrainOutput::leaderboard(const std::string& split) const {
    auto it = leaderboards.find(split);
    if (it == leaderboards.end()) throw DataError("unknown split '" + split + "'");
    return it->second;
}

namespace {

std::string resolve_metric(const TrainConfig& config, const MetricRegistry& registry,
                           TaskType task) {
    const std::string metric =
        config.metric.empty() ? MetricRegistry::default_sort_metric(task) : config.metric;
    if (!registry.has(metric)) throw DataError("unknown metric '" + metric + "'");
    if (!registry.applicable(metric, task))
        throw DataError("metric '" + metric + "' is incompatible with task " + to_string(task));
    return metric;
}

// Signed tuning score for one candidate: the chosen metric on the test
// view, negated for lower-better metrics so callers always maximize.
double tuning_score(const Candidate& cand, const FrameView& train, const FrameView& test,
                    const std::string& target, const std::string& metric,
                    const MetricRegistry& registry, std::uint64_t fit_seed) {
    const TrainedModel model =
        fit_model(cand.engine, train, target, cand.params, fit_seed);
    const Predictions preds = predict(model, test);
    const GroundTruth truth = extract_truth(test, target, preds.class_labels, model.task);
    const MetricMap values = registry.evaluate(truth, preds);
    auto it = values.find(metric);
    if (it == values.end() || !it->second.value)
        return std::numeric_limits<double>::quiet_NaN();
    return registry.higher_better(metric) ? *it->second.value : -*it->second.value;
}

} // namespace

std::vector<Candidate> tune_candidates(const FrameView& train, const FrameView& test,
                                       const std::string& target, const TrainConfig& config,
                                       const MetricRegistry& registry,
                                       std::vector<std::string>* warnings) {
    if (config.engines.empty()) throw DataError("empty engine set");
    const Frame train_frame = train.materialize();
    const TaskInfo info = detect_task(train_frame, target);
    const std::string metric = resolve_metric(config, registry, info.type);
    const std::uint64_t fit_seed = Rng(config.seed).spawn(42).seed();

    std::vector<Candidate> out;
    if (config.include_defaults) {
        for (Candidate& c : default_candidates(config.engines)) out.push_back(std::move(c));
    }
    if (config.random_n > 0) {
        for (Candidate& c : random_search(config.engines, config.space, config.random_n,
                                          Rng(config.seed).spawn(7).seed()))
            out.push_back(std::move(c));
    }
    if (config.bayes_budget > 0) {
        const int init = std::clamp(config.bayes_init_points, 2, config.bayes_budget);
        if (init < 2) throw DataError("bayes budget must allow at least 2 init points");
        const TuneObjective objective = [&](const Candidate& cand) {
            return tuning_score(cand, train, test, target, metric, registry, fit_seed);
        };
        for (EngineKind engine : config.engines) {
            auto [best, state] = bayes_opt(engine, config.space, objective,
                                           config.bayes_budget, init,
                                           Rng(config.seed).spawn(9).seed());
            if (warnings)
                for (const std::string& w : state.warnings)
                    warnings->push_back(to_string(engine) + ": " + w);
            out.push_back(std::move(best));
        }
    }
    if (out.empty()) throw DataError("no training candidates configured");
    return out;
}

TrainOutput run_training(const Frame& frame, const std::string& target,
                         const TrainConfig& config, const MetricRegistry& registry) {
    TrainOutput out;
    out.seed = config.seed;
    out.target = target;
    out.original = frame;
    out.original.set_target(target);
    out.check_report = check_data(out.original, target);

    if (config.assume_preprocessed) {
        out.preprocessed = out.original;
    } else {
        PreprocessResult pre = basic_preprocessing(out.original, target);
        out.preprocessed = std::move(pre.frame);
        out.preprocess_log = std::move(pre.log);
    }

    const TaskInfo info = detect_task(out.preprocessed, target);
    out.task = info.type;
    out.class_labels = info.labels;
    out.sort_metric = resolve_metric(config, registry, info.type);
    out.registry_info = registry.snapshot().dump();

    out.splits = split_frame(out.preprocessed, config.ratios, config.seed,
                             info.type != TaskType::Regression);
    for (const std::string& w : out.splits.warnings) out.warnings.push_back(w);

    const FrameView train_view(out.preprocessed, out.splits.train_idx);
    const FrameView test_view(out.preprocessed, out.splits.test_idx);
    const FrameView valid_view(out.preprocessed, out.splits.valid_idx);

    std::vector<Candidate> candidates =
        tune_candidates(train_view, test_view, target, config, registry, &out.warnings);

    // engine_origin_index names, counted within each (engine, origin) group
    std::map<std::pair<EngineKind, std::string>, int> counters;
    const std::uint64_t fit_seed = Rng(config.seed).spawn(42).seed();
    std::vector<LeaderboardRow> rows;
    const std::vector<std::pair<std::string, const FrameView*>> split_views = {
        {"train", &train_view}, {"test", &test_view}, {"valid", &valid_view}};

    for (const Candidate& cand : candidates) {
        const int index = ++counters[{cand.engine, cand.origin}];
        const std::string name =
            to_string(cand.engine) + "_" + cand.origin + "_" + std::to_string(index);

        const auto started = std::chrono::steady_clock::now();
        TrainedModel model = fit_model(cand.engine, train_view, target, cand.params, fit_seed);
        const auto elapsed = std::chrono::steady_clock::now() - started;
        model.name = name;
        out.timing_seconds[name] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();

        LeaderboardRow row;
        row.model_name = name;
        row.engine = cand.engine;
        row.origin = cand.origin;
        for (const auto& [split_name, view] : split_views) {
            const Predictions preds = predict(model, *view);
            const GroundTruth truth =
                extract_truth(*view, target, preds.class_labels, model.task);
            const MetricMap values = registry.evaluate(truth, preds);
            for (const auto& [metric_name, value] : values)
                row.metrics[metric_name][split_name] = value;
            out.predictions[name][split_name] = preds;
        }
        rows.push_back(std::move(row));
        out.models.push_back(std::move(model));
    }

    const bool higher = registry.higher_better(out.sort_metric);
    for (const std::string& split : {"train", "test", "valid"})
        out.leaderboards[split] = rank_models(rows, out.sort_metric, split, higher);
    return out;
}

} // namespace forester
