#include "forester/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "forester/engines.hpp"
#include "forester/errors.hpp"
#include "forester/rng.hpp"
#include "forester/stats.hpp"

namespace forester {

// ---------------------------------------------------------------------------
// Config serialization

nlohmann::json PreprocessConfig::to_json() const {
    nlohmann::json j;
    j["removal"] = {
        {"duplicates", remove_duplicates}, {"id_like", remove_id_like},
        {"static", remove_static},         {"sparse", remove_sparse},
        {"corrupted_rows", remove_corrupted_rows}, {"correlated", remove_correlated},
    };
    j["thresholds"] = thresholds.to_json();
    if (impute) {
        nlohmann::json ji;
        if (std::holds_alternative<MedianOther>(*impute)) {
            ji["method"] = "median_other";
        } else if (std::holds_alternative<MedianFrequency>(*impute)) {
            ji["method"] = "median_frequency";
        } else if (auto* knn = std::get_if<Knn>(&*impute)) {
            ji["method"] = "knn";
            ji["k_neighbors"] = knn->k_neighbors;
        } else if (auto* mice = std::get_if<Mice>(&*impute)) {
            ji["method"] = "mice";
            ji["iterations"] = mice->iterations;
        }
        j["impute"] = std::move(ji);
    } else {
        j["impute"] = nullptr;
    }
    nlohmann::json js;
    if (std::holds_alternative<SelectNone>(select)) {
        js["method"] = "none";
    } else if (auto* mi = std::get_if<MutualInfo>(&select)) {
        js["method"] = "mutual_info";
        js["top_k"] = mi->top_k;
    } else if (auto* bo = std::get_if<Boruta>(&select)) {
        js["method"] = "boruta";
        js["max_iter"] = bo->max_iter;
        js["alpha"] = bo->alpha;
    } else if (auto* mc = std::get_if<Mcfs>(&select)) {
        js["method"] = "mcfs";
        js["projections"] = mc->projections;
        js["fraction"] = mc->fraction;
        js["top_k"] = mc->top_k;
    } else if (auto* vi = std::get_if<PermutationVI>(&select)) {
        js["method"] = "permutation_vi";
        js["n_repeats"] = vi->n_repeats;
    }
    j["select"] = std::move(js);
    j["seed"] = seed;
    return j;
}

PreprocessConfig PreprocessConfig::from_json(const nlohmann::json& j) {
    PreprocessConfig cfg;
    if (j.contains("removal")) {
        const auto& r = j["removal"];
        cfg.remove_duplicates = r.value("duplicates", false);
        cfg.remove_id_like = r.value("id_like", false);
        cfg.remove_static = r.value("static", false);
        cfg.remove_sparse = r.value("sparse", false);
        cfg.remove_corrupted_rows = r.value("corrupted_rows", false);
        cfg.remove_correlated = r.value("correlated", false);
    }
    if (j.contains("thresholds")) cfg.thresholds = CheckThresholds::from_json(j["thresholds"]);
    if (j.contains("impute") && !j["impute"].is_null()) {
        const auto& ji = j["impute"];
        const std::string method = ji.at("method").get<std::string>();
        if (method == "median_other") cfg.impute = MedianOther{};
        else if (method == "median_frequency") cfg.impute = MedianFrequency{};
        else if (method == "knn") cfg.impute = Knn{ji.value("k_neighbors", 5)};
        else if (method == "mice") cfg.impute = Mice{ji.value("iterations", 5)};
        else throw ParseError("unknown imputation method '" + method + "'");
    }
    if (j.contains("select")) {
        const auto& js = j["select"];
        const std::string method = js.value("method", "none");
        if (method == "none") cfg.select = SelectNone{};
        else if (method == "mutual_info") cfg.select = MutualInfo{js.value("top_k", 10)};
        else if (method == "boruta")
            cfg.select = Boruta{js.value("max_iter", 20), js.value("alpha", 0.05)};
        else if (method == "mcfs")
            cfg.select = Mcfs{js.value("projections", 100), js.value("fraction", 0.3),
                              js.value("top_k", 10)};
        else if (method == "permutation_vi")
            cfg.select = PermutationVI{js.value("n_repeats", 5)};
        else throw ParseError("unknown selection method '" + method + "'");
    }
    cfg.seed = j.value("seed", 0);
    return cfg;
}

void PreprocessLog::add(std::string stage, std::string subject, std::string reason,
                        std::optional<double> statistic) {
    actions.push_back({std::move(stage), std::move(subject), std::move(reason), statistic});
}

nlohmann::json PreprocessLog::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const PreprocessAction& a : actions) {
        nlohmann::json ja;
        ja["stage"] = a.stage;
        ja["subject"] = a.subject;
        ja["reason"] = a.reason;
        if (a.statistic) ja["statistic"] = *a.statistic;
        else ja["statistic"] = nullptr;
        j.push_back(std::move(ja));
    }
    return j;
}

PreprocessLog PreprocessLog::from_json(const nlohmann::json& j) {
    PreprocessLog log;
    for (const auto& ja : j) {
        PreprocessAction a;
        a.stage = ja.at("stage").get<std::string>();
        a.subject = ja.at("subject").get<std::string>();
        a.reason = ja.at("reason").get<std::string>();
        if (!ja.at("statistic").is_null()) a.statistic = ja.at("statistic").get<double>();
        log.actions.push_back(std::move(a));
    }
    return log;
}

std::string PreprocessLog::to_text() const {
    if (actions.empty()) return "No preprocessing actions taken.\n";
    std::string out;
    for (const PreprocessAction& a : actions) {
        out += "  [" + a.stage + "] " + a.subject + ": " + a.reason;
        if (a.statistic) out += " (statistic " + std::to_string(*a.statistic) + ")";
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correlated-feature removal

std::pair<Frame, std::vector<std::string>> remove_correlated(const Frame& frame, double n) {
    if (n <= 0.0 || n > 1.0) throw DataError("correlation threshold must lie in (0,1]");
    std::vector<std::size_t> active;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        if (frame.target_name() && frame.column(c).name == *frame.target_name()) continue;
        active.push_back(c);
    }
    // absolute association matrix over candidate columns
    std::map<std::pair<std::size_t, std::size_t>, double> assoc;
    for (std::size_t i = 0; i < active.size(); ++i) {
        for (std::size_t j = i + 1; j < active.size(); ++j) {
            const auto r = column_association(frame, active[i], active[j]);
            if (r) assoc[{active[i], active[j]}] = std::abs(*r);
        }
    }
    auto value = [&](std::size_t a, std::size_t b) -> double {
        auto it = assoc.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
        return it == assoc.end() ? 0.0 : it->second;
    };

    std::vector<std::string> removed;
    while (true) {
        // violation degree and mean violating correlation per active column
        std::map<std::size_t, std::pair<int, double>> degree;  // col -> (count, sum |r|)
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                if (value(active[i], active[j]) >= n) {
                    degree[active[i]].first += 1;
                    degree[active[i]].second += value(active[i], active[j]);
                    degree[active[j]].first += 1;
                    degree[active[j]].second += value(active[i], active[j]);
                }
            }
        }
        if (degree.empty()) break;
        // most violations; ties: larger mean |correlation|, then later column order
        std::size_t worst = 0;
        bool have = false;
        for (const auto& [col, cs] : degree) {
            if (!have) {
                worst = col;
                have = true;
                continue;
            }
            const auto& best = degree[worst];
            const double mean_cur = cs.second / cs.first;
            const double mean_best = best.second / best.first;
            if (cs.first > best.first ||
                (cs.first == best.first && mean_cur > mean_best) ||
                (cs.first == best.first && mean_cur == mean_best && col > worst)) {
                worst = col;
            }
        }
        removed.push_back(frame.column(worst).name);
        active.erase(std::remove(active.begin(), active.end(), worst), active.end());
    }
    return {frame.drop_columns(removed), removed};
}

// ---------------------------------------------------------------------------
// Imputation

namespace {

double column_median(const Column& col) {
    std::vector<double> values;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r]) values.push_back(col.numeric[r]);
    return median(std::move(values));
}

std::string column_mode(const Column& col) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r]) counts[col.text[r]] += 1;
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {  // map order gives lexicographic tie-break
            best = value;
            best_count = count;
        }
    }
    return best;
}

void fill_numeric(Column& col, std::size_t row, double value) {
    col.numeric[row] = value;
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    col.text[row].assign(buf, p);
    col.missing[row] = 0;
}

void fill_categorical(Column& col, std::size_t row, const std::string& value) {
    col.text[row] = value;
    col.missing[row] = 0;
}

void check_imputable(const Frame& frame) {
    for (const Column& col : frame.columns())
        if (col.n_missing() > 0 && col.n_present() == 0)
            throw DataError("unimputable column '" + col.name + "'");
}

Frame impute_median(const Frame& frame, bool other_literal) {
    check_imputable(frame);
    std::vector<Column> columns = frame.columns();
    for (Column& col : columns) {
        if (col.n_missing() == 0) continue;
        if (col.kind == ColumnKind::Numeric) {
            const double med = column_median(col);
            for (std::size_t r = 0; r < col.size(); ++r)
                if (col.missing[r]) fill_numeric(col, r, med);
        } else {
            const std::string fill = other_literal ? std::string("other") : column_mode(col);
            for (std::size_t r = 0; r < col.size(); ++r)
                if (col.missing[r]) fill_categorical(col, r, fill);
        }
    }
    return Frame(std::move(columns), frame.target_name());
}

struct GowerContext {
    std::vector<double> range;  // per column, numeric only
};

GowerContext gower_context(const Frame& frame) {
    GowerContext ctx;
    ctx.range.assign(frame.n_cols(), 0.0);
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        const Column& col = frame.column(c);
        if (col.kind != ColumnKind::Numeric) continue;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col.missing[r]) continue;
            lo = std::min(lo, col.numeric[r]);
            hi = std::max(hi, col.numeric[r]);
        }
        ctx.range[c] = hi > lo ? hi - lo : 0.0;
    }
    return ctx;
}

// Mean mixed-type distance over features present in both rows, skipping
// the column being imputed.
double gower_distance(const Frame& frame, const GowerContext& ctx, std::size_t skip_col,
                      std::size_t a, std::size_t b) {
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        if (c == skip_col) continue;
        const Column& col = frame.column(c);
        if (col.missing[a] || col.missing[b]) continue;
        if (col.kind == ColumnKind::Numeric) {
            sum += ctx.range[c] > 0.0
                       ? std::abs(col.numeric[a] - col.numeric[b]) / ctx.range[c]
                       : 0.0;
        } else {
            sum += col.text[a] == col.text[b] ? 0.0 : 1.0;
        }
        ++used;
    }
    if (used == 0) return std::numeric_limits<double>::infinity();
    return sum / static_cast<double>(used);
}

Frame impute_knn(const Frame& frame, int k_neighbors) {
    if (k_neighbors < 1) throw DataError("k_neighbors must be at least 1");
    check_imputable(frame);
    const GowerContext ctx = gower_context(frame);
    std::vector<Column> columns = frame.columns();
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        Column& col = columns[c];
        if (col.n_missing() == 0) continue;
        std::vector<std::size_t> donors;
        for (std::size_t r = 0; r < frame.n_rows(); ++r)
            if (!frame.column(c).missing[r]) donors.push_back(r);
        for (std::size_t r = 0; r < frame.n_rows(); ++r) {
            if (!col.missing[r]) continue;
            std::vector<std::pair<double, std::size_t>> ranked;
            ranked.reserve(donors.size());
            for (std::size_t d : donors)
                ranked.emplace_back(gower_distance(frame, ctx, c, r, d), d);
            std::sort(ranked.begin(), ranked.end());
            const std::size_t take =
                std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), ranked.size());
            if (take == 0 || !std::isfinite(ranked[0].first)) {
                // no comparable neighbor: fall back to the column summary
                if (col.kind == ColumnKind::Numeric)
                    fill_numeric(col, r, column_median(frame.column(c)));
                else fill_categorical(col, r, column_mode(frame.column(c)));
                continue;
            }
            if (col.kind == ColumnKind::Numeric) {
                double sum = 0.0;
                for (std::size_t i = 0; i < take; ++i)
                    sum += frame.column(c).numeric[ranked[i].second];
                fill_numeric(col, r, sum / static_cast<double>(take));
            } else {
                std::map<std::string, std::size_t> counts;
                for (std::size_t i = 0; i < take; ++i)
                    counts[frame.column(c).text[ranked[i].second]] += 1;
                std::string best;
                std::size_t best_count = 0;
                for (const auto& [value, count] : counts) {
                    if (count > best_count) {
                        best = value;
                        best_count = count;
                    }
                }
                fill_categorical(col, r, best);
            }
        }
    }
    return Frame(std::move(columns), frame.target_name());
}

Frame impute_mice(const Frame& frame, int iterations, std::uint64_t seed) {
    if (iterations < 1) throw DataError("iterations must be at least 1");
    check_imputable(frame);

    // originally missing cells per column
    std::vector<std::vector<std::size_t>> missing_rows(frame.n_cols());
    std::vector<std::vector<std::size_t>> observed_rows(frame.n_cols());
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        for (std::size_t r = 0; r < frame.n_rows(); ++r) {
            if (frame.column(c).missing[r]) missing_rows[c].push_back(r);
            else observed_rows[c].push_back(r);
        }
    }

    Frame work = impute_median(frame, /*other_literal=*/false);
    if (frame.n_cols() < 2) return work;  // chained equations need predictors

    Hyperparams tree_params = default_hyperparams(EngineKind::Tree);
    for (int iter = 0; iter < iterations; ++iter) {
        for (std::size_t c = 0; c < frame.n_cols(); ++c) {
            if (missing_rows[c].empty()) continue;
            // distinct observed values; a constant column cannot be modeled
            std::set<std::string> distinct;
            for (std::size_t r : observed_rows[c]) distinct.insert(work.column(c).text[r]);
            if (distinct.size() < 2) continue;

            Frame model_frame = work;
            model_frame.set_target(work.column(c).name);
            TrainedModel model;
            try {
                model = fit_tree(FrameView(model_frame, observed_rows[c]),
                                 work.column(c).name, tree_params,
                                 Rng(seed).spawn(iter * 1000 + c).seed());
            } catch (const DataError&) {
                continue;  // e.g. too few rows; keep the current fill
            }
            const Predictions preds =
                predict(model, FrameView(model_frame, missing_rows[c]));

            Column col = work.column(c);
            for (std::size_t i = 0; i < missing_rows[c].size(); ++i) {
                const std::size_t r = missing_rows[c][i];
                if (model.task == TaskType::Regression) {
                    fill_numeric(col, r, preds.values[i]);
                } else {
                    int best = 0;
                    for (std::size_t cls = 1; cls < preds.probs[i].size(); ++cls)
                        if (preds.probs[i][cls] > preds.probs[i][best])
                            best = static_cast<int>(cls);
                    const std::string& label = preds.class_labels[best];
                    if (col.kind == ColumnKind::Numeric) {
                        const auto v = parse_number(label);
                        fill_numeric(col, r, v ? *v : column_median(frame.column(c)));
                    } else {
                        fill_categorical(col, r, label);
                    }
                }
            }
            work = work.with_column_replaced(col);
        }
    }
    return work;
}

} // namespace

Frame impute(const Frame& frame, const ImputeMethod& method, std::uint64_t seed) {
    if (std::holds_alternative<MedianOther>(method)) return impute_median(frame, true);
    if (std::holds_alternative<MedianFrequency>(method)) return impute_median(frame, false);
    if (auto* knn = std::get_if<Knn>(&method)) return impute_knn(frame, knn->k_neighbors);
    const Mice& mice = std::get<Mice>(method);
    return impute_mice(frame, mice.iterations, seed);
}

// ---------------------------------------------------------------------------
// Feature selection

namespace {

// Equal-frequency discretization into at most `bins` codes.
std::vector<int> discretize(const Column& col, int bins) {
    std::vector<int> codes(col.size(), -1);
    if (col.kind == ColumnKind::Categorical) {
        std::map<std::string, int> index;
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col.missing[r]) continue;
            codes[r] = index.emplace(col.text[r], static_cast<int>(index.size())).first->second;
        }
        return codes;
    }
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t r = 0; r < col.size(); ++r)
        if (!col.missing[r]) order.emplace_back(col.numeric[r], r);
    std::sort(order.begin(), order.end());
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i) {
        int bin = static_cast<int>(i * static_cast<std::size_t>(bins) / n);
        codes[order[i].second] = bin;
    }
    // identical values must share a bin: propagate the first bin over ties
    for (std::size_t i = 1; i < n; ++i)
        if (order[i].first == order[i - 1].first)
            codes[order[i].second] = codes[order[i - 1].second];
    return codes;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pa, pb;
    double n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || b[i] < 0) continue;
        joint[{a[i], b[i]}] += 1.0;
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        n += 1.0;
    }
    if (n == 0.0) return 0.0;
    double mi = 0.0;
    for (const auto& [ab, c] : joint) {
        const double pxy = c / n;
        const double px = pa[ab.first] / n;
        const double py = pb[ab.second] / n;
        mi += pxy * std::log(pxy / (px * py));
    }
    return std::max(0.0, mi);
}

std::vector<std::string> feature_names_of(const Frame& frame, const std::string& target) {
    std::vector<std::string> names;
    for (const Column& c : frame.columns())
        if (c.name != target) names.push_back(c.name);
    if (names.empty()) throw DataError("no features");
    return names;
}

double simple_accuracy(const std::vector<int>& truths,
                       const std::vector<std::vector<double>>& probs) {
    if (truths.empty()) return 0.0;
    double correct = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        int best = 0;
        for (std::size_t c = 1; c < probs[i].size(); ++c)
            if (probs[i][c] > probs[i][best]) best = static_cast<int>(c);
        if (best == truths[i]) correct += 1.0;
    }
    return correct / static_cast<double>(truths.size());
}

double simple_rmse(const std::vector<double>& truths, const std::vector<double>& preds) {
    double sse = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        sse += (truths[i] - preds[i]) * (truths[i] - preds[i]);
    return std::sqrt(sse / static_cast<double>(truths.size()));
}

// Target values aligned to a model's label order (classification) or raw
// numeric values (regression), for a subset of rows.
struct SimpleTruth {
    std::vector<int> classes;
    std::vector<double> values;
};

SimpleTruth truth_for(const Frame& frame, const std::string& target,
                      const std::vector<std::size_t>& rows,
                      const std::vector<std::string>& labels, bool regression) {
    SimpleTruth t;
    const Column& col = frame.column(target);
    if (regression) {
        for (std::size_t r : rows) t.values.push_back(col.numeric[r]);
        return t;
    }
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<int>(i);
    for (std::size_t r : rows) {
        auto it = index.find(col.text[r]);
        t.classes.push_back(it == index.end() ? -1 : it->second);
    }
    return t;
}

} // namespace

std::vector<std::string> select_mutual_info(const Frame& frame, const std::string& target,
                                            int top_k) {
    if (top_k < 1) throw DataError("top_k must be at least 1");
    const std::vector<std::string> features = feature_names_of(frame, target);
    constexpr int kBins = 10;

    const std::vector<int> y = discretize(frame.column(target), kBins);
    std::map<std::string, std::vector<int>> codes;
    for (const std::string& f : features) codes[f] = discretize(frame.column(f), kBins);

    std::map<std::string, double> relevance;
    for (const std::string& f : features) relevance[f] = mutual_information(codes[f], y);

    std::vector<std::string> selected;
    std::set<std::string> remaining(features.begin(), features.end());
    const int want = std::min<int>(top_k, static_cast<int>(features.size()));
    while (static_cast<int>(selected.size()) < want) {
        std::string best;
        double best_score = -std::numeric_limits<double>::infinity();
        for (const std::string& f : features) {  // column order for determinism
            if (!remaining.count(f)) continue;
            double redundancy = 0.0;
            for (const std::string& s : selected)
                redundancy += mutual_information(codes[f], codes[s]);
            if (!selected.empty()) redundancy /= static_cast<double>(selected.size());
            const double score = relevance[f] - redundancy;
            if (score > best_score) {
                best_score = score;
                best = f;
            }
        }
        selected.push_back(best);
        remaining.erase(best);
    }
    return selected;
}

std::vector<std::string> select_boruta(const Frame& frame, const std::string& target,
                                       int max_iter, double alpha, std::uint64_t seed) {
    if (max_iter < 1) throw DataError("boruta requires at least one iteration");
    if (alpha <= 0.0 || alpha >= 1.0) throw DataError("alpha must lie in (0,1)");
    const std::vector<std::string> features = feature_names_of(frame, target);

    enum class Status { Tentative, Confirmed, Rejected };
    std::map<std::string, Status> status;
    std::map<std::string, int> hits;
    std::map<std::string, std::vector<double>> history;
    std::vector<double> shadow_max_history;
    for (const std::string& f : features) {
        status[f] = Status::Tentative;
        hits[f] = 0;
    }

    // two-sided exact binomial test against p = 1/2
    auto binom_p_two_sided = [](int successes, int trials) {
        auto tail = [&](int from) {
            double p = 0.0;
            for (int s = from; s <= trials; ++s) {
                double logc = std::lgamma(trials + 1.0) - std::lgamma(s + 1.0) -
                              std::lgamma(trials - s + 1.0);
                p += std::exp(logc - trials * std::log(2.0));
            }
            return p;
        };
        const double upper = tail(successes);
        const double lower = 1.0 - tail(successes + 1);
        return std::min(1.0, 2.0 * std::min(upper, lower));
    };

    Hyperparams rf_params = default_hyperparams(EngineKind::RandomForest);
    rf_params.n_trees = 50;

    int done_iters = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool any_tentative = false;
        for (const std::string& f : features)
            if (status[f] == Status::Tentative) any_tentative = true;
        if (!any_tentative) break;

        Rng rng = Rng(seed).spawn(iter);
        std::vector<Column> extended = frame.columns();
        for (const std::string& f : features) {
            Column shadow = frame.column(f);
            shadow.name = "__shadow_" + f;
            std::vector<std::size_t> perm(shadow.size());
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            Column shuffled = shadow;
            for (std::size_t i = 0; i < perm.size(); ++i) {
                shuffled.text[i] = shadow.text[perm[i]];
                shuffled.numeric[i] = shadow.numeric[perm[i]];
                shuffled.missing[i] = shadow.missing[perm[i]];
            }
            extended.push_back(std::move(shuffled));
        }
        // Shuffle the feature/shadow column order each iteration: split ties
        // favor earlier columns, so a fixed order would bias real features
        // over their shadows.
        std::vector<Column> reordered;
        std::vector<std::size_t> col_order;
        for (std::size_t c = 0; c < extended.size(); ++c) {
            if (extended[c].name == target) reordered.push_back(std::move(extended[c]));
            else col_order.push_back(c);
        }
        rng.shuffle(col_order);
        for (std::size_t c : col_order) reordered.push_back(std::move(extended[c]));
        Frame ext(std::move(reordered), target);
        TrainedModel forest = fit_random_forest(FrameView(ext), target, rf_params,
                                                Rng(seed).spawn(500 + iter).seed());
        const auto importance = gain_importance(forest);
        double shadow_max = 0.0;
        for (const auto& [name, imp] : importance) {
            if (!std::isfinite(imp)) throw DataError("non-finite feature importance");
            if (name.rfind("__shadow_", 0) == 0) shadow_max = std::max(shadow_max, imp);
        }
        shadow_max_history.push_back(shadow_max);
        ++done_iters;
        for (const std::string& f : features) {
            const double imp = importance.at(f);
            history[f].push_back(imp);
            if (status[f] != Status::Tentative) continue;
            if (imp > shadow_max) hits[f] += 1;
            const double p = binom_p_two_sided(hits[f], done_iters);
            if (p < alpha) {
                status[f] = hits[f] * 2 > done_iters ? Status::Confirmed : Status::Rejected;
            }
        }
    }

    // resolve leftovers by median importance against the median shadow max
    const double shadow_median =
        shadow_max_history.empty() ? 0.0 : median(shadow_max_history);
    std::vector<std::string> confirmed;
    for (const std::string& f : features) {
        if (status[f] == Status::Confirmed) confirmed.push_back(f);
        else if (status[f] == Status::Tentative && !history[f].empty() &&
                 median(history[f]) > shadow_median)
            confirmed.push_back(f);
    }
    return confirmed;
}

std::vector<std::string> select_mcfs(const Frame& frame, const std::string& target,
                                     int projections, double fraction, int top_k,
                                     std::uint64_t seed) {
    if (projections < 1) throw DataError("projections must be at least 1");
    if (fraction <= 0.0 || fraction > 1.0) throw DataError("fraction must lie in (0,1]");
    if (top_k < 1) throw DataError("top_k must be at least 1");
    const std::vector<std::string> features = feature_names_of(frame, target);
    const std::size_t p = features.size();
    const std::size_t subset_size =
        std::min<std::size_t>(p, static_cast<std::size_t>(std::ceil(fraction * p)));

    const Column& tcol = frame.column(target);
    const bool regression = [&] {
        if (tcol.kind != ColumnKind::Numeric) return false;
        std::set<std::string> distinct;
        for (std::size_t r = 0; r < tcol.size(); ++r)
            if (!tcol.missing[r]) distinct.insert(tcol.text[r]);
        return distinct.size() > 20;
    }();

    Hyperparams tree_params = default_hyperparams(EngineKind::Tree);
    std::map<std::string, double> score;
    for (const std::string& f : features) score[f] = 0.0;
    const std::size_t n = frame.n_rows();

    for (int proj = 0; proj < projections; ++proj) {
        Rng rng = Rng(seed).spawn(proj);
        // feature subset without replacement
        std::vector<std::string> pool = features;
        rng.shuffle(pool);
        std::vector<std::string> subset(pool.begin(), pool.begin() + subset_size);
        std::sort(subset.begin(), subset.end());
        subset.push_back(target);

        // bootstrap rows, track out-of-bag
        std::vector<std::size_t> bag;
        std::vector<char> in_bag(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = rng.index(n);
            bag.push_back(r);
            in_bag[r] = 1;
        }
        std::vector<std::size_t> oob;
        for (std::size_t r = 0; r < n; ++r)
            if (!in_bag[r]) oob.push_back(r);
        if (oob.empty()) continue;

        Frame sub = frame.select_columns(subset);
        sub.set_target(target);
        TrainedModel tree;
        try {
            tree = fit_tree(FrameView(sub, bag), target, tree_params,
                            Rng(seed).spawn(7000 + proj).seed());
        } catch (const DataError&) {
            continue;  // e.g. bootstrap drew a constant target
        }
        const Predictions preds = predict(tree, FrameView(sub, oob));

        double weight = 0.0;
        if (regression) {
            const SimpleTruth truth = truth_for(frame, target, oob, {}, true);
            const double mean_y = mean(truth.values);
            double sse_mean = 0.0;
            for (double y : truth.values) sse_mean += (y - mean_y) * (y - mean_y);
            double sse_tree = 0.0;
            for (std::size_t i = 0; i < truth.values.size(); ++i)
                sse_tree += (truth.values[i] - preds.values[i]) *
                            (truth.values[i] - preds.values[i]);
            weight = sse_mean > 0.0 ? std::max(0.0, 1.0 - sse_tree / sse_mean) : 0.0;
        } else {
            const SimpleTruth truth =
                truth_for(frame, target, oob, preds.class_labels, false);
            // majority-class baseline over the OOB sample
            std::map<int, double> counts;
            for (int c : truth.classes) counts[c] += 1.0;
            double majority = 0.0;
            for (const auto& [c, cnt] : counts) majority = std::max(majority, cnt);
            const double baseline = majority / static_cast<double>(truth.classes.size());
            weight = std::max(0.0, simple_accuracy(truth.classes, preds.probs) - baseline);
        }
        if (weight <= 0.0) continue;

        auto importance = gain_importance(tree);
        double total = 0.0;
        for (const auto& [name, imp] : importance) total += imp;
        if (total <= 0.0) continue;
        for (const auto& [name, imp] : importance) score[name] += weight * imp / total;
    }

    std::vector<std::string> ranked = features;
    std::stable_sort(ranked.begin(), ranked.end(), [&](const std::string& a,
                                                       const std::string& b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(top_k)));
    return ranked;
}

std::vector<std::string> select_permutation_vi(const Frame& frame, const std::string& target,
                                               int n_repeats, std::uint64_t seed) {
    if (n_repeats < 1) throw DataError("n_repeats must be at least 1");
    const std::vector<std::string> features = feature_names_of(frame, target);
    if (features.size() == 1) return features;

    Rng rng(seed);
    std::vector<std::size_t> rows(frame.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    rng.shuffle(rows);
    const std::size_t holdout_size = std::max<std::size_t>(1, frame.n_rows() / 4);
    std::vector<std::size_t> holdout(rows.begin(), rows.begin() + holdout_size);
    std::vector<std::size_t> train(rows.begin() + holdout_size, rows.end());

    Frame work = frame;
    work.set_target(target);
    TrainedModel forest =
        fit_random_forest(FrameView(work, train), target,
                          default_hyperparams(EngineKind::RandomForest), rng.spawn(1).seed());
    const bool regression = forest.task == TaskType::Regression;

    Frame hold = work.select_rows(holdout);
    auto score_of = [&](const Frame& f) {
        std::vector<std::size_t> all(f.n_rows());
        std::iota(all.begin(), all.end(), 0);
        const Predictions preds = predict(forest, f);
        if (regression) {
            const SimpleTruth truth = truth_for(f, target, all, {}, true);
            return simple_rmse(truth.values, preds.values);
        }
        const SimpleTruth truth = truth_for(f, target, all, preds.class_labels, false);
        return simple_accuracy(truth.classes, preds.probs);
    };
    const double baseline = score_of(hold);

    std::map<std::string, double> importance;
    for (std::size_t fi = 0; fi < features.size(); ++fi) {
        const std::string& f = features[fi];
        double total = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            Rng shuffle_rng = Rng(seed).spawn(100 + fi * 97 + rep);
            Column col = hold.column(f);
            std::vector<std::size_t> perm(col.size());
            std::iota(perm.begin(), perm.end(), 0);
            shuffle_rng.shuffle(perm);
            Column shuffled = col;
            for (std::size_t i = 0; i < perm.size(); ++i) {
                shuffled.text[i] = col.text[perm[i]];
                shuffled.numeric[i] = col.numeric[perm[i]];
                shuffled.missing[i] = col.missing[perm[i]];
            }
            const double shuffled_score = score_of(hold.with_column_replaced(shuffled));
            total += regression ? shuffled_score - baseline : baseline - shuffled_score;
        }
        importance[f] = total / static_cast<double>(n_repeats);
    }

    double mean_importance = 0.0;
    for (const auto& [f, imp] : importance) mean_importance += imp;
    mean_importance /= static_cast<double>(features.size());

    std::vector<std::string> kept;
    for (const std::string& f : features)
        if (importance[f] > mean_importance) kept.push_back(f);
    if (kept.empty()) {
        // all features equally (un)informative: keep the best one
        std::string best = features.front();
        for (const std::string& f : features)
            if (importance[f] > importance[best]) best = f;
        kept.push_back(best);
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

std::vector<std::size_t> rows_with_present_target(const Frame& frame,
                                                  const std::string& target) {
    const Column& col = frame.column(target);
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < frame.n_rows(); ++r)
        if (!col.missing[r]) keep.push_back(r);
    return keep;
}

} // namespace

PreprocessResult custom_preprocessing(const Frame& frame, const std::string& target,
                                      const PreprocessConfig& config) {
    config.thresholds.validate();
    if (!frame.has_column(target)) throw DataError("unknown target '" + target + "'");

    PreprocessLog log;
    Frame work = frame;
    work.set_target(target);

    auto drop_logged = [&](const std::vector<DataIssue>& issues, const std::string& stage) {
        std::vector<std::string> names;
        for (const DataIssue& issue : issues) {
            for (const std::string& name : issue.subjects) {
                if (name == target || work.column_index(name) == std::nullopt) continue;
                if (std::find(names.begin(), names.end(), name) != names.end()) continue;
                // duplicate groups keep their first member
                if (issue.kind == IssueKind::DuplicateColumns &&
                    name == issue.subjects.front())
                    continue;
                names.push_back(name);
                log.add(stage, name, issue.detail, issue.statistic);
            }
        }
        if (!names.empty()) work = work.drop_columns(names);
    };

    const Frame features_only = work.drop_columns({target});
    if (config.remove_duplicates)
        drop_logged(detect_duplicate_columns(features_only), "removal");
    if (config.remove_id_like) drop_logged(detect_id_like(features_only), "removal");
    if (config.remove_static)
        drop_logged(detect_static(features_only, config.thresholds.k), "removal");
    if (config.remove_sparse)
        drop_logged(detect_sparse(features_only, config.thresholds.l), "removal");

    // rows: corrupted-row criterion plus the unconditional missing-target drop
    {
        std::set<std::size_t> drop;
        if (config.remove_corrupted_rows) {
            for (const DataIssue& issue :
                 detect_corrupted_rows(work, target, config.thresholds.m)) {
                const std::size_t r =
                    static_cast<std::size_t>(*parse_number(issue.subjects.front()));
                drop.insert(r);
                log.add("removal", "row " + issue.subjects.front(), issue.detail,
                        issue.statistic);
            }
        }
        const Column& tcol = work.column(target);
        for (std::size_t r = 0; r < work.n_rows(); ++r) {
            if (tcol.missing[r] && !drop.count(r)) {
                drop.insert(r);
                log.add("removal", "row " + std::to_string(r), "missing target value",
                        std::nullopt);
            }
        }
        if (!drop.empty()) {
            std::vector<std::size_t> keep;
            for (std::size_t r = 0; r < work.n_rows(); ++r)
                if (!drop.count(r)) keep.push_back(r);
            work = work.select_rows(keep);
        }
    }

    if (config.remove_correlated) {
        auto [reduced, removed] = remove_correlated(work, config.thresholds.n);
        for (const std::string& name : removed)
            log.add("removal", name, "correlated above threshold", config.thresholds.n);
        work = reduced;
    }

    if (work.n_cols() < 2) throw DataError("no features remain after preprocessing");

    if (config.impute) {
        Frame features = work.drop_columns({target});
        bool any_missing = false;
        for (const Column& c : features.columns()) any_missing |= c.n_missing() > 0;
        if (any_missing) {
            Frame filled = impute(features, *config.impute, config.seed);
            std::vector<Column> columns;
            for (const Column& c : work.columns()) {
                if (c.name == target) columns.push_back(c);
                else columns.push_back(filled.column(c.name));
            }
            for (const Column& before : work.columns()) {
                if (before.name == target) continue;
                const std::size_t filled_cells = before.n_missing();
                if (filled_cells > 0)
                    log.add("imputation", before.name, "imputed missing cells",
                            static_cast<double>(filled_cells));
            }
            work = Frame(std::move(columns), target);
        }
    }

    if (!std::holds_alternative<SelectNone>(config.select)) {
        std::vector<std::string> selected;
        if (auto* mi = std::get_if<MutualInfo>(&config.select))
            selected = select_mutual_info(work, target, mi->top_k);
        else if (auto* bo = std::get_if<Boruta>(&config.select))
            selected = select_boruta(work, target, bo->max_iter, bo->alpha, config.seed);
        else if (auto* mc = std::get_if<Mcfs>(&config.select))
            selected = select_mcfs(work, target, mc->projections, mc->fraction, mc->top_k,
                                   config.seed);
        else if (auto* vi = std::get_if<PermutationVI>(&config.select))
            selected = select_permutation_vi(work, target, vi->n_repeats, config.seed);

        if (selected.empty()) throw DataError("no features remain after selection");
        std::set<std::string> keep(selected.begin(), selected.end());
        for (const Column& c : work.columns()) {
            if (c.name == target || keep.count(c.name)) continue;
            log.add("selection", c.name, "not selected", std::nullopt);
        }
        std::vector<std::string> ordered;
        for (const Column& c : work.columns())
            if (c.name == target || keep.count(c.name)) ordered.push_back(c.name);
        work = work.select_columns(ordered);
        work.set_target(target);
    }

    return {std::move(work), std::move(log)};
}

PreprocessResult basic_preprocessing(const Frame& frame, const std::string& target) {
    if (!frame.has_column(target)) throw DataError("unknown target '" + target + "'");
    PreprocessLog log;
    Frame work = frame;
    work.set_target(target);

    // static columns at k = 0.99
    {
        const Frame features_only = work.drop_columns({target});
        std::vector<std::string> names;
        for (const DataIssue& issue : detect_static(features_only, 0.99)) {
            names.push_back(issue.subjects.front());
            log.add("removal", issue.subjects.front(), issue.detail, issue.statistic);
        }
        if (!names.empty()) work = work.drop_columns(names);
    }
    if (work.n_cols() < 2) throw DataError("no features remain after preprocessing");

    // rows with a missing target cannot be trained on or filled
    {
        const auto keep = rows_with_present_target(work, target);
        if (keep.size() != work.n_rows()) {
            log.add("removal", "rows", "dropped rows with missing target",
                    static_cast<double>(work.n_rows() - keep.size()));
            work = work.select_rows(keep);
        }
    }

    // KNN(5) imputation of features
    {
        Frame features = work.drop_columns({target});
        bool any_missing = false;
        for (const Column& c : features.columns()) any_missing |= c.n_missing() > 0;
        if (any_missing) {
            Frame filled = impute(features, Knn{5}, 0);
            std::vector<Column> columns;
            for (const Column& c : work.columns()) {
                if (c.name == target) columns.push_back(c);
                else {
                    if (c.n_missing() > 0)
                        log.add("imputation", c.name, "knn imputation",
                                static_cast<double>(c.n_missing()));
                    columns.push_back(filled.column(c.name));
                }
            }
            work = Frame(std::move(columns), target);
        }
    }

    // canonical labels for classification targets: trim + case fold
    try {
        const TaskInfo info = detect_task(work, target);
        if (info.type != TaskType::Regression &&
            work.column(target).kind == ColumnKind::Categorical) {
            Column tcol = work.column(target);
            bool changed = false;
            for (std::size_t r = 0; r < tcol.size(); ++r) {
                if (tcol.missing[r]) continue;
                const std::string canon = to_lower(trim(tcol.text[r]));
                if (canon != tcol.text[r]) {
                    tcol.text[r] = canon;
                    changed = true;
                }
            }
            if (changed) {
                log.add("labels", target, "normalized labels (trim + case fold)",
                        std::nullopt);
                work = work.with_column_replaced(tcol);
                work.set_target(target);
            }
        }
    } catch (const DataError&) {
        // degenerate target: leave labels untouched; training will report it
    }

    return {std::move(work), std::move(log)};
}

} // namespace forester
