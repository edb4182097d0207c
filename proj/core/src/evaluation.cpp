#include "forester/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"

namespace forester {

GroundTruth extract_truth(const FrameView& view, const std::string& target,
                          const std::vector<std::string>& labels, TaskType task) {
    const auto tidx = view.frame().column_index(target);
    if (!tidx) throw DataError("unknown target '" + target + "'");
    GroundTruth truth;
    truth.task = task;
    truth.labels = labels;
    if (task == TaskType::Regression) {
        truth.values.reserve(view.n_rows());
        for (std::size_t r = 0; r < view.n_rows(); ++r) {
            if (view.is_missing(*tidx, r)) throw DataError("missing target value");
            truth.values.push_back(view.number_at(*tidx, r));
        }
        return truth;
    }
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);
    truth.classes.reserve(view.n_rows());
    for (std::size_t r = 0; r < view.n_rows(); ++r) {
        if (view.is_missing(*tidx, r)) throw DataError("missing target value");
        auto it = index.find(view.text_at(*tidx, r));
        if (it == index.end())
            throw DataError("target level '" + view.text_at(*tidx, r) +
                            "' not in the training label set");
        truth.classes.push_back(it->second);
    }
    return truth;
}

namespace {

MetricValue ratio(double numerator, double denominator) {
    if (denominator == 0.0) return {0.0, true};
    return {numerator / denominator, false};
}

// Mann-Whitney AUC with average ranks (half credit for score ties).
MetricValue auc_mann_whitney(const std::vector<int>& truths,
                             const std::vector<double>& scores) {
    std::size_t n_pos = 0;
    for (int t : truths) n_pos += (t == 1);
    const std::size_t n_neg = truths.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) return {std::nullopt, false};

    std::vector<std::size_t> order(truths.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (truths[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return {u / (static_cast<double>(n_pos) * static_cast<double>(n_neg)), false};
}

} // namespace

MetricMap binary_metrics(const std::vector<int>& truths, const std::vector<double>& pos_probs,
                         double threshold) {
    if (truths.size() != pos_probs.size())
        throw DataError("truth/prediction length mismatch");
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool pred_pos = pos_probs[i] >= threshold;
        if (truths[i] == 1) {
            pred_pos ? ++tp : ++fn;
        } else {
            pred_pos ? ++fp : ++tn;
        }
    }
    MetricMap m;
    m["accuracy"] = ratio(tp + tn, tp + tn + fp + fn);
    m["auc"] = auc_mann_whitney(truths, pos_probs);
    const MetricValue precision = ratio(tp, tp + fp);
    const MetricValue recall = ratio(tp, tp + fn);
    m["precision"] = precision;
    m["recall"] = recall;
    m["sensitivity"] = recall;
    const MetricValue specificity = ratio(tn, tn + fp);
    m["specificity"] = specificity;
    const double p = precision.value.value_or(0.0);
    const double r = recall.value.value_or(0.0);
    MetricValue f1 = ratio(2.0 * p * r, p + r);
    f1.zero_substituted = f1.zero_substituted || precision.zero_substituted ||
                          recall.zero_substituted;
    m["f1"] = f1;
    m["balanced_accuracy"] = {0.5 * (recall.value.value_or(0.0) +
                                     specificity.value.value_or(0.0)),
                              recall.zero_substituted || specificity.zero_substituted};
    return m;
}

MetricMap multiclass_metrics(const std::vector<int>& truths,
                             const std::vector<std::vector<double>>& prob_rows) {
    if (truths.size() != prob_rows.size())
        throw DataError("truth/prediction length mismatch");
    if (prob_rows.empty()) throw DataError("empty prediction set");
    const int k = static_cast<int>(prob_rows.front().size());

    std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0), support(k, 0.0);
    double correct = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        int pred = 0;
        for (int c = 1; c < k; ++c)
            if (prob_rows[i][c] > prob_rows[i][pred]) pred = c;
        support[truths[i]] += 1.0;
        if (pred == truths[i]) {
            tp[pred] += 1.0;
            correct += 1.0;
        } else {
            fp[pred] += 1.0;
            fn[truths[i]] += 1.0;
        }
    }

    std::vector<MetricValue> prec(k), rec(k), f1(k);
    for (int c = 0; c < k; ++c) {
        prec[c] = ratio(tp[c], tp[c] + fp[c]);
        rec[c] = ratio(tp[c], tp[c] + fn[c]);
        const double p = prec[c].value.value_or(0.0);
        const double r = rec[c].value.value_or(0.0);
        f1[c] = ratio(2.0 * p * r, p + r);
        f1[c].zero_substituted =
            f1[c].zero_substituted || prec[c].zero_substituted || rec[c].zero_substituted;
    }

    auto macro = [&](const std::vector<MetricValue>& per_class) {
        double sum = 0.0;
        bool flagged = false;
        for (const MetricValue& v : per_class) {
            sum += v.value.value_or(0.0);
            flagged = flagged || v.zero_substituted;
        }
        return MetricValue{sum / k, flagged};
    };
    auto weighted = [&](const std::vector<MetricValue>& per_class) {
        double sum = 0.0, total = 0.0;
        bool flagged = false;
        for (int c = 0; c < k; ++c) {
            sum += per_class[c].value.value_or(0.0) * support[c];
            total += support[c];
            flagged = flagged || per_class[c].zero_substituted;
        }
        return MetricValue{total > 0.0 ? sum / total : 0.0, flagged || total == 0.0};
    };

    double tp_all = 0.0, fp_all = 0.0, fn_all = 0.0;
    for (int c = 0; c < k; ++c) {
        tp_all += tp[c];
        fp_all += fp[c];
        fn_all += fn[c];
    }

    MetricMap m;
    m["accuracy"] = ratio(correct, static_cast<double>(truths.size()));
    m["precision_micro"] = ratio(tp_all, tp_all + fp_all);
    m["recall_micro"] = ratio(tp_all, tp_all + fn_all);
    {
        const double p = m["precision_micro"].value.value_or(0.0);
        const double r = m["recall_micro"].value.value_or(0.0);
        m["f1_micro"] = ratio(2.0 * p * r, p + r);
    }
    m["precision_macro"] = macro(prec);
    m["recall_macro"] = macro(rec);
    m["f1_macro"] = macro(f1);
    m["precision_weighted"] = weighted(prec);
    m["recall_weighted"] = weighted(rec);
    m["f1_weighted"] = weighted(f1);
    return m;
}

MetricMap regression_metrics(const std::vector<double>& truths,
                             const std::vector<double>& preds) {
    if (truths.size() != preds.size()) throw DataError("truth/prediction length mismatch");
    if (truths.empty()) throw DataError("empty prediction set");
    const double n = static_cast<double>(truths.size());

    double sse = 0.0, sae = 0.0, mean_y = 0.0, mean_res = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const double res = truths[i] - preds[i];
        sse += res * res;
        sae += std::abs(res);
        mean_y += truths[i];
        mean_res += res;
    }
    mean_y /= n;
    mean_res /= n;
    double sst = 0.0, mad = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        sst += (truths[i] - mean_y) * (truths[i] - mean_y);
        mad += std::abs((truths[i] - preds[i]) - mean_res);
    }

    MetricMap m;
    m["mse"] = {sse / n, false};
    m["rmse"] = {std::sqrt(sse / n), false};
    m["mae"] = {sae / n, false};
    m["mad"] = {mad / n, false};
    if (sst == 0.0) m["r2"] = {std::nullopt, false};
    else m["r2"] = {1.0 - sse / sst, false};
    return m;
}

// ---------------------------------------------------------------------------
// Registry

MetricRegistry MetricRegistry::built_ins() {
    MetricRegistry reg;
    auto add = [&](const std::string& name, bool higher, std::set<TaskType> tasks) {
        reg.entries_[name] = Entry{higher, std::move(tasks), true};
    };
    const std::set<TaskType> bin = {TaskType::Binary};
    const std::set<TaskType> multi = {TaskType::Multiclass};
    const std::set<TaskType> reg_t = {TaskType::Regression};
    add("accuracy", true, {TaskType::Binary, TaskType::Multiclass});
    add("auc", true, bin);
    add("f1", true, bin);
    add("recall", true, bin);
    add("precision", true, bin);
    add("sensitivity", true, bin);
    add("specificity", true, bin);
    add("balanced_accuracy", true, bin);
    for (const std::string& avg : {"micro", "macro", "weighted"}) {
        add("precision_" + avg, true, multi);
        add("recall_" + avg, true, multi);
        add("f1_" + avg, true, multi);
    }
    add("mse", false, reg_t);
    add("rmse", false, reg_t);
    add("mae", false, reg_t);
    add("r2", true, reg_t);
    add("mad", false, reg_t);
    return reg;
}

void MetricRegistry::register_custom_metric(Metric metric) {
    if (entries_.count(metric.name))
        throw DataError("metric name '" + metric.name + "' already registered");
    if (metric.tasks.empty()) throw DataError("custom metric must declare applicable tasks");
    if (!metric.compute) throw DataError("custom metric must provide a compute function");
    entries_[metric.name] = Entry{metric.higher_better, metric.tasks, false};
    custom_.push_back(std::move(metric));
}

bool MetricRegistry::has(const std::string& name) const { return entries_.count(name) > 0; }

bool MetricRegistry::higher_better(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw DataError("unknown metric '" + name + "'");
    return it->second.higher_better;
}

bool MetricRegistry::applicable(const std::string& name, TaskType task) const {
    auto it = entries_.find(name);
    return it != entries_.end() && it->second.tasks.count(task) > 0;
}

std::vector<std::string> MetricRegistry::names_for(TaskType task) const {
    std::vector<std::string> names;
    for (const auto& [name, entry] : entries_)
        if (entry.tasks.count(task)) names.push_back(name);
    return names;
}

std::string MetricRegistry::default_sort_metric(TaskType task) {
    return task == TaskType::Regression ? "rmse" : "accuracy";
}

MetricMap MetricRegistry::evaluate(const GroundTruth& truth, const Predictions& preds) const {
    if (truth.task != preds.task) throw DataError("metric/task mismatch");
    MetricMap m;
    switch (truth.task) {
    case TaskType::Binary: {
        std::vector<double> pos(preds.probs.size());
        for (std::size_t i = 0; i < preds.probs.size(); ++i) pos[i] = preds.probs[i].back();
        m = binary_metrics(truth.classes, pos);
        break;
    }
    case TaskType::Multiclass:
        m = multiclass_metrics(truth.classes, preds.probs);
        break;
    case TaskType::Regression:
        m = regression_metrics(truth.values, preds.values);
        break;
    }
    for (const Metric& metric : custom_) {
        if (!metric.tasks.count(truth.task)) continue;
        const double v = metric.compute(truth, preds);
        if (!std::isfinite(v))
            throw DataError("custom metric '" + metric.name + "' returned a non-finite value");
        m[metric.name] = {v, false};
    }
    return m;
}

nlohmann::json MetricRegistry::snapshot() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [name, entry] : entries_) {
        nlohmann::json tasks = nlohmann::json::array();
        for (TaskType t : entry.tasks) tasks.push_back(to_string(t));
        j.push_back({{"name", name},
                     {"higher_better", entry.higher_better},
                     {"tasks", tasks},
                     {"built_in", entry.built_in}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Leaderboard

Leaderboard rank_models(std::vector<LeaderboardRow> rows, const std::string& sort_metric,
                        const std::string& split, bool higher_better) {
    Leaderboard board;
    board.sort_metric = sort_metric;
    board.split = split;
    board.higher_better = higher_better;
    auto key = [&](const LeaderboardRow& row) -> std::optional<double> {
        auto mit = row.metrics.find(sort_metric);
        if (mit == row.metrics.end()) return std::nullopt;
        auto sit = mit->second.find(split);
        if (sit == mit->second.end()) return std::nullopt;
        return sit->second.value;
    };
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const LeaderboardRow& a, const LeaderboardRow& b) {
                         const auto ka = key(a), kb = key(b);
                         if (ka.has_value() != kb.has_value()) return ka.has_value();
                         if (ka && kb && *ka != *kb)
                             return higher_better ? *ka > *kb : *ka < *kb;
                         return a.model_name < b.model_name;
                     });
    board.rows = std::move(rows);
    return board;
}

namespace {

std::string format_value(const MetricValue& v) {
    if (!v.value) return "";
    std::ostringstream out;
    out.precision(17);
    out << *v.value;
    return out.str();
}

} // namespace

std::string Leaderboard::to_csv() const {
    // stable column order: union of metric names x splits, sorted
    std::set<std::string> metric_names;
    std::set<std::string> splits;
    for (const LeaderboardRow& row : rows) {
        for (const auto& [name, by_split] : row.metrics) {
            metric_names.insert(name);
            for (const auto& [s, v] : by_split) splits.insert(s);
        }
    }
    std::ostringstream out;
    out << "model,engine,origin";
    for (const std::string& name : metric_names)
        for (const std::string& s : splits) out << "," << name << "_" << s;
    out << "\n";
    for (const LeaderboardRow& row : rows) {
        out << row.model_name << "," << to_string(row.engine) << "," << row.origin;
        for (const std::string& name : metric_names) {
            for (const std::string& s : splits) {
                out << ",";
                auto mit = row.metrics.find(name);
                if (mit == row.metrics.end()) continue;
                auto sit = mit->second.find(s);
                if (sit == mit->second.end()) continue;
                out << format_value(sit->second);
            }
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json Leaderboard::to_json() const {
    nlohmann::json j;
    j["sort_metric"] = sort_metric;
    j["split"] = split;
    j["higher_better"] = higher_better;
    j["rows"] = nlohmann::json::array();
    for (const LeaderboardRow& row : rows) {
        nlohmann::json jr;
        jr["model"] = row.model_name;
        jr["engine"] = to_string(row.engine);
        jr["origin"] = row.origin;
        nlohmann::json jm;
        for (const auto& [name, by_split] : row.metrics) {
            nlohmann::json js;
            for (const auto& [s, v] : by_split) {
                nlohmann::json jv;
                if (v.value) jv["value"] = *v.value;
                else jv["value"] = nullptr;
                jv["flagged"] = v.zero_substituted;
                js[s] = std::move(jv);
            }
            jm[name] = std::move(js);
        }
        jr["metrics"] = std::move(jm);
        j["rows"].push_back(std::move(jr));
    }
    return j;
}

Leaderboard Leaderboard::from_json(const nlohmann::json& j) {
    Leaderboard board;
    board.sort_metric = j.at("sort_metric").get<std::string>();
    board.split = j.at("split").get<std::string>();
    board.higher_better = j.at("higher_better").get<bool>();
    for (const auto& jr : j.at("rows")) {
        LeaderboardRow row;
        row.model_name = jr.at("model").get<std::string>();
        const auto engine = engine_from_string(jr.at("engine").get<std::string>());
        if (!engine) throw ParseError("unknown engine in leaderboard");
        row.engine = *engine;
        row.origin = jr.at("origin").get<std::string>();
        for (const auto& [name, js] : jr.at("metrics").items()) {
            for (const auto& [s, jv] : js.items()) {
                MetricValue v;
                if (!jv.at("value").is_null()) v.value = jv.at("value").get<double>();
                v.zero_substituted = jv.at("flagged").get<bool>();
                row.metrics[name][s] = v;
            }
        }
        board.rows.push_back(std::move(row));
    }
    return board;
}

} // namespace forester
