#include "forester/engines.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"

namespace forester {

namespace {

std::atomic<int> g_max_threads{4};

constexpr std::uint64_t kEncodeStream = 0xEC0DE;
constexpr double kMinGain = 1e-12;
constexpr int kTargetStatMinLevels = 17;  // cardinality > 16 switches to target stats
constexpr double kTargetStatPrior = 1.0;  // smoothing pseudo-count

} // namespace

void set_max_threads(int n) { g_max_threads.store(std::max(1, n)); }
int max_threads() { return g_max_threads.load(); }

std::string to_string(EngineKind kind) {
    switch (kind) {
    case EngineKind::Tree: return "tree";
    case EngineKind::RandomForest: return "random_forest";
    case EngineKind::GbdtDepthwise: return "gbdt_depthwise";
    case EngineKind::GbdtLeafwise: return "gbdt_leafwise";
    }
    return "unknown";
}

std::optional<EngineKind> engine_from_string(const std::string& name) {
    if (name == "tree") return EngineKind::Tree;
    if (name == "random_forest") return EngineKind::RandomForest;
    if (name == "gbdt_depthwise") return EngineKind::GbdtDepthwise;
    if (name == "gbdt_leafwise") return EngineKind::GbdtLeafwise;
    return std::nullopt;
}

std::vector<EngineKind> all_engines() {
    return {EngineKind::Tree, EngineKind::RandomForest, EngineKind::GbdtDepthwise,
            EngineKind::GbdtLeafwise};
}

Hyperparams default_hyperparams(EngineKind engine) {
    Hyperparams p;
    switch (engine) {
    case EngineKind::Tree:
    case EngineKind::RandomForest:
        break;  // struct defaults
    case EngineKind::GbdtDepthwise:
    case EngineKind::GbdtLeafwise:
        p.max_depth = 6;
        break;
    }
    return p;
}

namespace {

std::string criterion_name(Criterion c) {
    switch (c) {
    case Criterion::Gini: return "gini";
    case Criterion::Entropy: return "entropy";
    case Criterion::Variance: return "variance";
    }
    return "gini";
}

Criterion criterion_from_name(const std::string& s) {
    if (s == "entropy") return Criterion::Entropy;
    if (s == "variance") return Criterion::Variance;
    return Criterion::Gini;
}

} // namespace

nlohmann::json Hyperparams::to_json(EngineKind engine) const {
    nlohmann::json j;
    switch (engine) {
    case EngineKind::Tree:
        j["max_depth"] = max_depth;
        j["min_samples_leaf"] = min_samples_leaf;
        j["criterion"] = criterion_name(criterion);
        break;
    case EngineKind::RandomForest:
        j["max_depth"] = max_depth;
        j["min_samples_leaf"] = min_samples_leaf;
        j["criterion"] = criterion_name(criterion);
        j["n_trees"] = n_trees;
        j["mtry"] = mtry;
        j["sample_fraction"] = sample_fraction;
        j["replace"] = replace;
        break;
    case EngineKind::GbdtDepthwise:
    case EngineKind::GbdtLeafwise:
        j["n_rounds"] = n_rounds;
        j["learning_rate"] = learning_rate;
        if (engine == EngineKind::GbdtDepthwise) j["max_depth"] = max_depth;
        else j["max_leaves"] = max_leaves;
        j["min_child_weight"] = min_child_weight;
        j["lambda"] = lambda;
        j["subsample"] = subsample;
        j["colsample"] = colsample;
        break;
    }
    return j;
}

Hyperparams Hyperparams::from_json(EngineKind engine, const nlohmann::json& j) {
    Hyperparams p = default_hyperparams(engine);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
    if (j.contains("criterion")) p.criterion = criterion_from_name(j["criterion"]);
    p.n_trees = j.value("n_trees", p.n_trees);
    p.mtry = j.value("mtry", p.mtry);
    p.sample_fraction = j.value("sample_fraction", p.sample_fraction);
    p.replace = j.value("replace", p.replace);
    p.n_rounds = j.value("n_rounds", p.n_rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_leaves = j.value("max_leaves", p.max_leaves);
    p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
    p.lambda = j.value("lambda", p.lambda);
    p.subsample = j.value("subsample", p.subsample);
    p.colsample = j.value("colsample", p.colsample);
    return p;
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

struct EncodedColumn {
    bool categorical = false;
    int n_levels = 0;
    std::vector<double> values;  // level codes (or -1 for unseen) when categorical
};

struct EncodedData {
    std::vector<EncodedColumn> cols;
    std::vector<double> y;  // class index or regression value
    TaskType task = TaskType::Regression;
    int n_classes = 0;
};

TaskInfo detect_task_view(const FrameView& view, const std::string& target) {
    const auto tidx = view.frame().column_index(target);
    if (!tidx) throw DataError("unknown target '" + target + "'");
    const bool numeric = view.frame().column(*tidx).kind == ColumnKind::Numeric;
    std::set<std::string> distinct;
    for (std::size_t r = 0; r < view.n_rows(); ++r) {
        if (view.is_missing(*tidx, r))
            throw DataError("missing values in target '" + target + "'");
        distinct.insert(view.text_at(*tidx, r));
    }
    if (distinct.size() < 2) throw DataError("degenerate target '" + target + "'");
    TaskInfo info;
    if (distinct.size() == 2) info.type = TaskType::Binary;
    else if (numeric && distinct.size() > 20) info.type = TaskType::Regression;
    else info.type = TaskType::Multiclass;
    if (info.type != TaskType::Regression) {
        info.labels.assign(distinct.begin(), distinct.end());
        if (info.type == TaskType::Binary) info.positive_label = info.labels.back();
    }
    return info;
}

// Ordered target statistics: each fit row sees only rows before it in a
// random permutation, smoothed toward the global prior. The recipe keeps
// the full-data statistics for prediction.
void encode_target_stat(const FrameView& view, std::size_t col, const std::vector<double>& y,
                        Rng& rng, FeatureRecipe& recipe, EncodedColumn& out) {
    const std::size_t n = view.n_rows();
    const double prior = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    std::map<std::string, std::pair<double, double>> acc;  // level -> (sum, count)
    out.values.assign(n, prior);
    for (std::size_t r : perm) {
        const std::string& level = view.text_at(col, r);
        auto& [sum, count] = acc[level];
        out.values[r] = (kTargetStatPrior * prior + sum) / (kTargetStatPrior + count);
        sum += y[r];
        count += 1.0;
    }
    recipe.encoding = FeatureRecipe::Encoding::TargetStat;
    recipe.default_stat = prior;
    for (const auto& [level, sc] : acc)
        recipe.level_stats[level] =
            (kTargetStatPrior * prior + sc.first) / (kTargetStatPrior + sc.second);
}

std::pair<EncodedData, Recipe> encode_for_fit(const FrameView& view, const std::string& target,
                                              Rng encode_rng) {
    if (view.n_rows() < 2) throw DataError("need at least 2 rows to fit");
    const Frame& frame = view.frame();
    const auto tidx = frame.column_index(target);
    if (!tidx) throw DataError("unknown target '" + target + "'");

    const TaskInfo info = detect_task_view(view, target);
    Recipe recipe;
    recipe.target_name = target;
    recipe.task = info.type;
    recipe.class_labels = info.labels;

    EncodedData data;
    data.task = info.type;
    data.n_classes = static_cast<int>(info.labels.size());
    data.y.resize(view.n_rows());
    if (info.type == TaskType::Regression) {
        for (std::size_t r = 0; r < view.n_rows(); ++r) data.y[r] = view.number_at(*tidx, r);
    } else {
        std::map<std::string, double> index;
        for (std::size_t i = 0; i < info.labels.size(); ++i)
            index[info.labels[i]] = static_cast<double>(i);
        for (std::size_t r = 0; r < view.n_rows(); ++r)
            data.y[r] = index.at(view.text_at(*tidx, r));
    }

    std::size_t n_features = 0;
    for (std::size_t c = 0; c < frame.n_cols(); ++c) {
        if (c == *tidx) continue;
        const Column& col = frame.column(c);
        for (std::size_t r = 0; r < view.n_rows(); ++r)
            if (view.is_missing(c, r))
                throw DataError("missing values in feature '" + col.name +
                                "'; run preprocessing first");
        FeatureRecipe fr;
        fr.name = col.name;
        EncodedColumn ec;
        if (col.kind == ColumnKind::Numeric) {
            fr.encoding = FeatureRecipe::Encoding::Numeric;
            ec.values.resize(view.n_rows());
            for (std::size_t r = 0; r < view.n_rows(); ++r) ec.values[r] = view.number_at(c, r);
        } else {
            std::set<std::string> levels;
            for (std::size_t r = 0; r < view.n_rows(); ++r) levels.insert(view.text_at(c, r));
            const bool use_target_stat =
                static_cast<int>(levels.size()) >= kTargetStatMinLevels &&
                info.type != TaskType::Multiclass;
            if (use_target_stat) {
                // binary: stats over the 0/1 class index; regression: over y
                encode_target_stat(view, c, data.y, encode_rng, fr, ec);
            } else {
                fr.encoding = FeatureRecipe::Encoding::Levels;
                fr.levels.assign(levels.begin(), levels.end());
                std::map<std::string, double> code;
                for (std::size_t i = 0; i < fr.levels.size(); ++i)
                    code[fr.levels[i]] = static_cast<double>(i);
                ec.categorical = true;
                ec.n_levels = static_cast<int>(fr.levels.size());
                ec.values.resize(view.n_rows());
                for (std::size_t r = 0; r < view.n_rows(); ++r)
                    ec.values[r] = code.at(view.text_at(c, r));
            }
        }
        recipe.features.push_back(std::move(fr));
        data.cols.push_back(std::move(ec));
        ++n_features;
    }
    if (n_features == 0) throw DataError("no features");
    return {std::move(data), std::move(recipe)};
}

EncodedData encode_for_predict(const Recipe& recipe, const FrameView& view) {
    const Frame& frame = view.frame();
    EncodedData data;
    data.task = recipe.task;
    data.n_classes = static_cast<int>(recipe.class_labels.size());
    for (const FeatureRecipe& fr : recipe.features) {
        const auto cidx = frame.column_index(fr.name);
        if (!cidx) throw DataError("schema error: missing feature column '" + fr.name + "'");
        const Column& col = frame.column(*cidx);
        EncodedColumn ec;
        ec.values.resize(view.n_rows());
        if (fr.encoding == FeatureRecipe::Encoding::Numeric) {
            if (col.kind != ColumnKind::Numeric)
                throw DataError("schema error: column '" + fr.name + "' must be numeric");
            for (std::size_t r = 0; r < view.n_rows(); ++r)
                ec.values[r] = view.is_missing(*cidx, r) ? std::nan("")
                                                         : view.number_at(*cidx, r);
        } else if (fr.encoding == FeatureRecipe::Encoding::Levels) {
            if (col.kind != ColumnKind::Categorical)
                throw DataError("schema error: column '" + fr.name + "' must be categorical");
            std::map<std::string, double> code;
            for (std::size_t i = 0; i < fr.levels.size(); ++i)
                code[fr.levels[i]] = static_cast<double>(i);
            ec.categorical = true;
            ec.n_levels = static_cast<int>(fr.levels.size());
            for (std::size_t r = 0; r < view.n_rows(); ++r) {
                if (view.is_missing(*cidx, r)) {
                    ec.values[r] = -1.0;
                    continue;
                }
                auto it = code.find(view.text_at(*cidx, r));
                ec.values[r] = it == code.end() ? -1.0 : it->second;
            }
        } else {
            if (col.kind != ColumnKind::Categorical)
                throw DataError("schema error: column '" + fr.name + "' must be categorical");
            for (std::size_t r = 0; r < view.n_rows(); ++r) {
                if (view.is_missing(*cidx, r)) {
                    ec.values[r] = fr.default_stat;
                    continue;
                }
                auto it = fr.level_stats.find(view.text_at(*cidx, r));
                ec.values[r] = it == fr.level_stats.end() ? fr.default_stat : it->second;
            }
        }
        data.cols.push_back(std::move(ec));
    }
    return data;
}

// ---------------------------------------------------------------------------
// CART (classification and regression trees)

struct CartConfig {
    int max_depth = 10;
    int min_samples_leaf = 5;
    Criterion criterion = Criterion::Gini;
    int mtry = 0;  // 0 or >= p: all features
};

struct ClassCounts {
    std::vector<double> counts;
    double total = 0.0;

    explicit ClassCounts(int k) : counts(k, 0.0) {}
    void add(int cls, double w = 1.0) {
        counts[cls] += w;
        total += w;
    }
    void remove(int cls, double w = 1.0) {
        counts[cls] -= w;
        total -= w;
    }
};

// Weighted impurity (n * gini or n * entropy) so split gain is additive.
double weighted_impurity(const ClassCounts& cc, Criterion crit) {
    if (cc.total <= 0.0) return 0.0;
    if (crit == Criterion::Entropy) {
        double h = 0.0;
        for (double c : cc.counts) {
            if (c <= 0.0) continue;
            const double p = c / cc.total;
            h -= p * std::log2(p);
        }
        return cc.total * h;
    }
    double sq = 0.0;
    for (double c : cc.counts) sq += (c / cc.total) * (c / cc.total);
    return cc.total * (1.0 - sq);
}

struct RegStats {
    double sum = 0.0, sqsum = 0.0, n = 0.0;
    void add(double y) {
        sum += y;
        sqsum += y * y;
        n += 1.0;
    }
    void remove(double y) {
        sum -= y;
        sqsum -= y * y;
        n -= 1.0;
    }
    double sse() const { return n > 0.0 ? std::max(0.0, sqsum - sum * sum / n) : 0.0; }
};

struct CartSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    bool categorical = false;
    std::vector<char> left_levels;
    // Start below zero so a zero-gain split of an impure node is still taken
    // (the gain may only appear deeper, e.g. XOR-like interactions).
    double gain = -std::numeric_limits<double>::infinity();
};

class CartBuilder {
public:
    CartBuilder(const EncodedData& data, const CartConfig& cfg, Rng* mtry_rng)
        : data_(data), cfg_(cfg), rng_(mtry_rng) {}

    Tree build(const std::vector<std::size_t>& rows) {
        Tree tree;
        grow(tree, rows, 0);
        return tree;
    }

private:
    const EncodedData& data_;
    const CartConfig& cfg_;
    Rng* rng_;

    bool classification() const { return data_.task != TaskType::Regression; }

    std::vector<int> candidate_features() {
        const int p = static_cast<int>(data_.cols.size());
        std::vector<int> all(p);
        std::iota(all.begin(), all.end(), 0);
        if (cfg_.mtry <= 0 || cfg_.mtry >= p || rng_ == nullptr) return all;
        for (int i = 0; i < cfg_.mtry; ++i) {
            const std::size_t j = i + rng_->index(p - i);
            std::swap(all[i], all[j]);
        }
        all.resize(cfg_.mtry);
        std::sort(all.begin(), all.end());
        return all;
    }

    std::vector<double> leaf_value(const std::vector<std::size_t>& rows) const {
        if (classification()) {
            std::vector<double> dist(data_.n_classes, 0.0);
            for (std::size_t r : rows) dist[static_cast<int>(data_.y[r])] += 1.0;
            for (double& d : dist) d /= static_cast<double>(rows.size());
            return dist;
        }
        double sum = 0.0;
        for (std::size_t r : rows) sum += data_.y[r];
        return {sum / static_cast<double>(rows.size())};
    }

    double node_impurity(const std::vector<std::size_t>& rows) const {
        if (classification()) {
            ClassCounts cc(data_.n_classes);
            for (std::size_t r : rows) cc.add(static_cast<int>(data_.y[r]));
            return weighted_impurity(cc, cfg_.criterion);
        }
        RegStats rs;
        for (std::size_t r : rows) rs.add(data_.y[r]);
        return rs.sse();
    }

    void scan_numeric(int feature, const std::vector<std::size_t>& rows, double parent_impurity,
                      CartSplit& best) const {
        const auto& values = data_.cols[feature].values;
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(rows.size());
        for (std::size_t r : rows) order.emplace_back(values[r], r);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        const std::size_t n = order.size();
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        if (classification()) {
            ClassCounts left(data_.n_classes), right(data_.n_classes);
            for (const auto& [v, r] : order) right.add(static_cast<int>(data_.y[r]));
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const int cls = static_cast<int>(data_.y[order[i].second]);
                left.add(cls);
                right.remove(cls);
                if (order[i].first == order[i + 1].first) continue;
                if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
                const double gain = parent_impurity - weighted_impurity(left, cfg_.criterion) -
                                    weighted_impurity(right, cfg_.criterion);
                if (gain > best.gain + kMinGain) {
                    best.found = true;
                    best.feature = feature;
                    best.categorical = false;
                    best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                    best.gain = gain;
                    best.left_levels.clear();
                }
            }
        } else {
            RegStats left, right;
            for (const auto& [v, r] : order) right.add(data_.y[r]);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double y = data_.y[order[i].second];
                left.add(y);
                right.remove(y);
                if (order[i].first == order[i + 1].first) continue;
                if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
                const double gain = parent_impurity - left.sse() - right.sse();
                if (gain > best.gain + kMinGain) {
                    best.found = true;
                    best.feature = feature;
                    best.categorical = false;
                    best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                    best.gain = gain;
                    best.left_levels.clear();
                }
            }
        }
    }

    void scan_categorical(int feature, const std::vector<std::size_t>& rows,
                          double parent_impurity, CartSplit& best) const {
        const auto& col = data_.cols[feature];
        const int L = col.n_levels;
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        if (classification()) {
            // one level vs rest
            std::vector<ClassCounts> per_level(L, ClassCounts(data_.n_classes));
            ClassCounts total(data_.n_classes);
            for (std::size_t r : rows) {
                const int code = static_cast<int>(col.values[r]);
                per_level[code].add(static_cast<int>(data_.y[r]));
                total.add(static_cast<int>(data_.y[r]));
            }
            for (int l = 0; l < L; ++l) {
                const double nl = per_level[l].total;
                if (nl < static_cast<double>(min_leaf)) continue;
                if (total.total - nl < static_cast<double>(min_leaf)) continue;
                ClassCounts rest(data_.n_classes);
                for (int k = 0; k < data_.n_classes; ++k)
                    rest.counts[k] = total.counts[k] - per_level[l].counts[k];
                rest.total = total.total - nl;
                const double gain = parent_impurity -
                                    weighted_impurity(per_level[l], cfg_.criterion) -
                                    weighted_impurity(rest, cfg_.criterion);
                if (gain > best.gain + kMinGain) {
                    best.found = true;
                    best.feature = feature;
                    best.categorical = true;
                    best.gain = gain;
                    best.left_levels.assign(L, 0);
                    best.left_levels[l] = 1;
                }
            }
        } else {
            // order levels by mean target, then scan prefixes
            std::vector<RegStats> per_level(L);
            RegStats total;
            for (std::size_t r : rows) {
                per_level[static_cast<int>(col.values[r])].add(data_.y[r]);
                total.add(data_.y[r]);
            }
            std::vector<int> present;
            for (int l = 0; l < L; ++l)
                if (per_level[l].n > 0.0) present.push_back(l);
            std::sort(present.begin(), present.end(), [&](int a, int b) {
                const double ma = per_level[a].sum / per_level[a].n;
                const double mb = per_level[b].sum / per_level[b].n;
                if (ma != mb) return ma < mb;
                return a < b;
            });
            RegStats left;
            std::vector<char> in_left(L, 0);
            for (std::size_t j = 0; j + 1 < present.size(); ++j) {
                const int l = present[j];
                left.sum += per_level[l].sum;
                left.sqsum += per_level[l].sqsum;
                left.n += per_level[l].n;
                in_left[l] = 1;
                if (left.n < static_cast<double>(min_leaf)) continue;
                if (total.n - left.n < static_cast<double>(min_leaf)) continue;
                RegStats right;
                right.sum = total.sum - left.sum;
                right.sqsum = total.sqsum - left.sqsum;
                right.n = total.n - left.n;
                const double gain = parent_impurity - left.sse() - right.sse();
                if (gain > best.gain + kMinGain) {
                    best.found = true;
                    best.feature = feature;
                    best.categorical = true;
                    best.gain = gain;
                    best.left_levels = in_left;
                }
            }
        }
    }

    int grow(Tree& tree, const std::vector<std::size_t>& rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].n_samples = static_cast<double>(rows.size());
        tree.nodes[node_id].value = leaf_value(rows);

        const double parent_impurity = node_impurity(rows);
        if (depth >= cfg_.max_depth || parent_impurity <= kMinGain ||
            rows.size() < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) {
            return node_id;
        }

        CartSplit best;
        for (int f : candidate_features()) {
            if (data_.cols[f].categorical) scan_categorical(f, rows, parent_impurity, best);
            else scan_numeric(f, rows, parent_impurity, best);
        }
        if (!best.found) return node_id;

        std::vector<std::size_t> left_rows, right_rows;
        const auto& values = data_.cols[best.feature].values;
        for (std::size_t r : rows) {
            bool go_left;
            if (best.categorical) go_left = best.left_levels[static_cast<int>(values[r])] != 0;
            else go_left = values[r] <= best.threshold;
            (go_left ? left_rows : right_rows).push_back(r);
        }

        TreeNode& node = tree.nodes[node_id];
        node.is_leaf = false;
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.categorical = best.categorical;
        node.left_levels = best.left_levels;
        node.gain = best.gain;
        node.default_left = left_rows.size() >= right_rows.size();
        const int left_id = grow(tree, left_rows, depth + 1);
        const int right_id = grow(tree, right_rows, depth + 1);
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        return node_id;
    }
};

int route(const Tree& tree, const EncodedData& data, std::size_t row) {
    int node = 0;
    while (!tree.nodes[node].is_leaf) {
        const TreeNode& nd = tree.nodes[node];
        const double v = data.cols[nd.feature].values[row];
        bool go_left;
        if (nd.categorical) {
            const int code = static_cast<int>(v);
            if (code < 0 || code >= static_cast<int>(nd.left_levels.size()))
                go_left = nd.default_left;
            else
                go_left = nd.left_levels[code] != 0;
        } else {
            go_left = std::isnan(v) ? nd.default_left : v <= nd.threshold;
        }
        node = go_left ? nd.left : nd.right;
    }
    return node;
}

void run_parallel(std::size_t n_jobs, const std::function<void(std::size_t)>& job) {
    const int workers = std::min<int>(max_threads(), static_cast<int>(n_jobs));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n_jobs; i = next.fetch_add(1)) job(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

} // namespace

// ---------------------------------------------------------------------------
// Single tree and random forest

TrainedModel fit_tree(const FrameView& data, const std::string& target,
                      const Hyperparams& params, std::uint64_t seed) {
    Rng rng(seed);
    auto [encoded, recipe] = encode_for_fit(data, target, rng.spawn(kEncodeStream));

    CartConfig cfg;
    cfg.max_depth = params.max_depth;
    cfg.min_samples_leaf = params.min_samples_leaf;
    cfg.criterion = encoded.task == TaskType::Regression ? Criterion::Variance
                                                         : params.criterion;
    std::vector<std::size_t> rows(encoded.y.size());
    std::iota(rows.begin(), rows.end(), 0);

    TrainedModel model;
    model.engine = EngineKind::Tree;
    model.task = encoded.task;
    model.params = params;
    model.recipe = std::move(recipe);
    model.trees.push_back(CartBuilder(encoded, cfg, nullptr).build(rows));
    return model;
}

TrainedModel fit_random_forest(const FrameView& data, const std::string& target,
                               const Hyperparams& params, std::uint64_t seed) {
    if (params.n_trees < 1) throw DataError("n_trees must be at least 1");
    Rng rng(seed);
    auto [encoded, recipe] = encode_for_fit(data, target, rng.spawn(kEncodeStream));

    const std::size_t n = encoded.y.size();
    const int p = static_cast<int>(encoded.cols.size());
    int mtry = params.mtry;
    if (mtry <= 0) {
        mtry = encoded.task == TaskType::Regression
                   ? std::max(1, p / 3)
                   : std::max(1, static_cast<int>(std::floor(std::sqrt(p))));
    }
    mtry = std::min(mtry, p);

    CartConfig cfg;
    cfg.max_depth = params.max_depth;
    cfg.min_samples_leaf = params.min_samples_leaf;
    cfg.criterion = encoded.task == TaskType::Regression ? Criterion::Variance
                                                         : params.criterion;
    cfg.mtry = mtry;

    TrainedModel model;
    model.engine = EngineKind::RandomForest;
    model.task = encoded.task;
    model.params = params;
    model.recipe = std::move(recipe);
    model.trees.resize(params.n_trees);

    const EncodedData& enc = encoded;
    std::vector<std::vector<char>> in_bag(params.n_trees, std::vector<char>(n, 0));
    run_parallel(params.n_trees, [&](std::size_t t) {
        Rng tree_rng = Rng(seed).spawn(1000 + t);
        std::vector<std::size_t> rows;
        if (params.replace) {
            const std::size_t draws = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(params.sample_fraction * n)));
            rows.reserve(draws);
            for (std::size_t i = 0; i < draws; ++i) rows.push_back(tree_rng.index(n));
        } else {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            tree_rng.shuffle(all);
            const std::size_t take = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(params.sample_fraction * n)));
            rows.assign(all.begin(), all.begin() + std::min(take, n));
        }
        for (std::size_t r : rows) in_bag[t][r] = 1;
        CartConfig tree_cfg = cfg;
        const bool use_subset = cfg.mtry < p;
        model.trees[t] =
            CartBuilder(enc, tree_cfg, use_subset ? &tree_rng : nullptr).build(rows);
    });

    // out-of-bag aggregation (sequential, deterministic)
    const int k = std::max(1, enc.n_classes);
    std::vector<std::vector<double>> acc(n, std::vector<double>(k, 0.0));
    std::vector<double> votes(n, 0.0);
    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t r = 0; r < n; ++r) {
            if (in_bag[t][r]) continue;
            const TreeNode& leaf = model.trees[t].nodes[route(model.trees[t], enc, r)];
            for (int c = 0; c < k; ++c) acc[r][c] += leaf.value[c];
            votes[r] += 1.0;
        }
    }
    model.oob_seen.assign(n, 0);
    if (enc.task == TaskType::Regression) {
        model.oob_values.assign(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (votes[r] > 0.0) {
                model.oob_values[r] = acc[r][0] / votes[r];
                model.oob_seen[r] = 1;
            }
        }
    } else {
        model.oob_probs.assign(n, std::vector<double>(k, 0.0));
        for (std::size_t r = 0; r < n; ++r) {
            if (votes[r] > 0.0) {
                for (int c = 0; c < k; ++c) model.oob_probs[r][c] = acc[r][c] / votes[r];
                model.oob_seen[r] = 1;
            }
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Gradient boosting

namespace {

struct GradPair {
    double g = 0.0;
    double h = 0.0;
};

struct GbdtNodeWork {
    int node_id;
    std::vector<std::size_t> rows;
    int depth;
};

struct GbdtSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    bool categorical = false;
    std::vector<char> left_levels;
    double gain = 0.0;
};

class GbdtTreeBuilder {
public:
    GbdtTreeBuilder(const EncodedData& data, const std::vector<GradPair>& grad,
                    const Hyperparams& params, const std::vector<int>& features)
        : data_(data), grad_(grad), params_(params), features_(features) {}

    Tree build(const std::vector<std::size_t>& rows, GrowthPolicy growth, int max_depth,
               int max_leaves) {
        Tree tree;
        make_leaf(tree, rows);
        if (growth == GrowthPolicy::Depthwise) {
            std::vector<GbdtNodeWork> frontier;
            frontier.push_back({0, rows, 0});
            while (!frontier.empty()) {
                std::vector<GbdtNodeWork> next;
                for (GbdtNodeWork& w : frontier) {
                    if (w.depth >= max_depth) continue;
                    GbdtSplit best = find_split(w.rows);
                    if (!best.found) continue;
                    auto [lw, rw] = apply_split(tree, w, best);
                    next.push_back(std::move(lw));
                    next.push_back(std::move(rw));
                }
                frontier = std::move(next);
            }
        } else {
            // leafwise: always expand the leaf with the largest gain
            struct Candidate {
                GbdtNodeWork work;
                GbdtSplit split;
            };
            std::vector<Candidate> open;
            {
                GbdtNodeWork w{0, rows, 0};
                GbdtSplit s = find_split(w.rows);
                if (s.found) open.push_back({std::move(w), std::move(s)});
            }
            int n_leaves = 1;
            constexpr int kLeafwiseDepthCap = 64;
            while (n_leaves < max_leaves && !open.empty()) {
                std::size_t best_i = 0;
                for (std::size_t i = 1; i < open.size(); ++i)
                    if (open[i].split.gain > open[best_i].split.gain) best_i = i;
                Candidate cand = std::move(open[best_i]);
                open.erase(open.begin() + best_i);
                auto [lw, rw] = apply_split(tree, cand.work, cand.split);
                ++n_leaves;
                for (GbdtNodeWork* w : {&lw, &rw}) {
                    if (w->depth >= kLeafwiseDepthCap) continue;
                    GbdtSplit s = find_split(w->rows);
                    if (s.found) open.push_back({std::move(*w), std::move(s)});
                }
            }
        }
        return tree;
    }

private:
    const EncodedData& data_;
    const std::vector<GradPair>& grad_;
    const Hyperparams& params_;
    const std::vector<int>& features_;

    void make_leaf(Tree& tree, const std::vector<std::size_t>& rows) {
        TreeNode node;
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
            g += grad_[r].g;
            h += grad_[r].h;
        }
        node.n_samples = static_cast<double>(rows.size());
        node.value = {-params_.learning_rate * g / (h + params_.lambda)};
        tree.nodes.push_back(std::move(node));
    }

    std::pair<GbdtNodeWork, GbdtNodeWork> apply_split(Tree& tree, GbdtNodeWork& w,
                                                      const GbdtSplit& best) {
        std::vector<std::size_t> left_rows, right_rows;
        const auto& values = data_.cols[best.feature].values;
        for (std::size_t r : w.rows) {
            bool go_left;
            if (best.categorical) go_left = best.left_levels[static_cast<int>(values[r])] != 0;
            else go_left = values[r] <= best.threshold;
            (go_left ? left_rows : right_rows).push_back(r);
        }
        const int left_id = static_cast<int>(tree.nodes.size());
        make_leaf(tree, left_rows);
        const int right_id = static_cast<int>(tree.nodes.size());
        make_leaf(tree, right_rows);

        TreeNode& node = tree.nodes[w.node_id];
        node.is_leaf = false;
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.categorical = best.categorical;
        node.left_levels = best.left_levels;
        node.gain = best.gain;
        node.default_left = left_rows.size() >= right_rows.size();
        node.left = left_id;
        node.right = right_id;
        node.value.clear();

        GbdtNodeWork lw{left_id, std::move(left_rows), w.depth + 1};
        GbdtNodeWork rw{right_id, std::move(right_rows), w.depth + 1};
        return {std::move(lw), std::move(rw)};
    }

    GbdtSplit find_split(const std::vector<std::size_t>& rows) const {
        GbdtSplit best;
        if (rows.size() < 2) return best;
        for (int f : features_) {
            if (data_.cols[f].categorical) scan_categorical(f, rows, best);
            else scan_numeric(f, rows, best);
        }
        return best;
    }

    void scan_numeric(int feature, const std::vector<std::size_t>& rows, GbdtSplit& best) const {
        const auto& values = data_.cols[feature].values;
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(rows.size());
        for (std::size_t r : rows) order.emplace_back(values[r], r);
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double gtot = 0.0, htot = 0.0;
        for (std::size_t r : rows) {
            gtot += grad_[r].g;
            htot += grad_[r].h;
        }
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            gl += grad_[order[i].second].g;
            hl += grad_[order[i].second].h;
            if (order[i].first == order[i + 1].first) continue;
            const double hr = htot - hl;
            if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
            const double gain = gbdt_split_gain(gl, hl, gtot - gl, hr, params_.lambda);
            if (gain > best.gain + kMinGain) {
                best.found = true;
                best.feature = feature;
                best.categorical = false;
                best.threshold = 0.5 * (order[i].first + order[i + 1].first);
                best.gain = gain;
                best.left_levels.clear();
            }
        }
    }

    void scan_categorical(int feature, const std::vector<std::size_t>& rows,
                          GbdtSplit& best) const {
        const auto& col = data_.cols[feature];
        const int L = col.n_levels;
        std::vector<GradPair> per_level(L);
        std::vector<double> level_n(L, 0.0);
        double gtot = 0.0, htot = 0.0;
        for (std::size_t r : rows) {
            const int code = static_cast<int>(col.values[r]);
            per_level[code].g += grad_[r].g;
            per_level[code].h += grad_[r].h;
            level_n[code] += 1.0;
            gtot += grad_[r].g;
            htot += grad_[r].h;
        }
        std::vector<int> present;
        for (int l = 0; l < L; ++l)
            if (level_n[l] > 0.0) present.push_back(l);
        if (present.size() < 2) return;
        // order levels by their would-be leaf value, then scan prefixes
        std::sort(present.begin(), present.end(), [&](int a, int b) {
            const double va = per_level[a].g / (per_level[a].h + params_.lambda);
            const double vb = per_level[b].g / (per_level[b].h + params_.lambda);
            if (va != vb) return va < vb;
            return a < b;
        });
        double gl = 0.0, hl = 0.0;
        std::vector<char> in_left(L, 0);
        for (std::size_t j = 0; j + 1 < present.size(); ++j) {
            gl += per_level[present[j]].g;
            hl += per_level[present[j]].h;
            in_left[present[j]] = 1;
            const double hr = htot - hl;
            if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
            const double gain = gbdt_split_gain(gl, hl, gtot - gl, hr, params_.lambda);
            if (gain > best.gain + kMinGain) {
                best.found = true;
                best.feature = feature;
                best.categorical = true;
                best.gain = gain;
                best.left_levels = in_left;
            }
        }
    }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

TrainedModel fit_gbdt(const FrameView& data, const std::string& target,
                      const Hyperparams& params, GrowthPolicy growth, std::uint64_t seed) {
    if (params.learning_rate <= 0.0) throw DataError("learning_rate must be positive");
    if (params.n_rounds <= 0) throw DataError("n_rounds must be positive");

    Rng rng(seed);
    auto [encoded, recipe] = encode_for_fit(data, target, rng.spawn(kEncodeStream));
    const std::size_t n = encoded.y.size();
    const int k = encoded.task == TaskType::Multiclass ? encoded.n_classes : 1;
    const int p = static_cast<int>(encoded.cols.size());

    TrainedModel model;
    model.engine = growth == GrowthPolicy::Depthwise ? EngineKind::GbdtDepthwise
                                                     : EngineKind::GbdtLeafwise;
    model.task = encoded.task;
    model.params = params;
    model.recipe = std::move(recipe);

    // base scores: mean target / logit or log of class priors
    model.base_score.assign(k, 0.0);
    if (encoded.task == TaskType::Regression) {
        double s = std::accumulate(encoded.y.begin(), encoded.y.end(), 0.0);
        model.base_score[0] = s / static_cast<double>(n);
    } else if (encoded.task == TaskType::Binary) {
        double pos = 0.0;
        for (double y : encoded.y) pos += y;
        const double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        model.base_score[0] = std::log(prior / (1.0 - prior));
    } else {
        std::vector<double> prior(k, 0.0);
        for (double y : encoded.y) prior[static_cast<int>(y)] += 1.0;
        for (int c = 0; c < k; ++c)
            model.base_score[c] = std::log(std::max(prior[c] / static_cast<double>(n), 1e-6));
    }

    std::vector<std::vector<double>> scores(n, std::vector<double>(k));
    for (std::size_t r = 0; r < n; ++r)
        for (int c = 0; c < k; ++c) scores[r][c] = model.base_score[c];

    auto train_loss = [&]() {
        double loss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (encoded.task == TaskType::Regression) {
                const double d = scores[r][0] - encoded.y[r];
                loss += 0.5 * d * d;
            } else if (encoded.task == TaskType::Binary) {
                const double pr = std::clamp(sigmoid(scores[r][0]), 1e-12, 1.0 - 1e-12);
                loss -= encoded.y[r] > 0.5 ? std::log(pr) : std::log(1.0 - pr);
            } else {
                double mx = scores[r][0];
                for (int c = 1; c < k; ++c) mx = std::max(mx, scores[r][c]);
                double z = 0.0;
                for (int c = 0; c < k; ++c) z += std::exp(scores[r][c] - mx);
                const int truth = static_cast<int>(encoded.y[r]);
                loss -= scores[r][truth] - mx - std::log(z);
            }
        }
        return loss / static_cast<double>(n);
    };

    const int max_leaves = growth == GrowthPolicy::Leafwise ? std::max(2, params.max_leaves)
                                                            : std::numeric_limits<int>::max();
    for (int round = 0; round < params.n_rounds; ++round) {
        // row subsample (without replacement) and per-tree feature subsample
        std::vector<std::size_t> rows;
        if (params.subsample < 1.0) {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), 0);
            Rng round_rng = rng.spawn(2000 + round);
            round_rng.shuffle(all);
            const std::size_t take = std::max<std::size_t>(
                2, static_cast<std::size_t>(std::floor(params.subsample * n)));
            rows.assign(all.begin(), all.begin() + std::min(take, n));
            std::sort(rows.begin(), rows.end());
        } else {
            rows.resize(n);
            std::iota(rows.begin(), rows.end(), 0);
        }

        for (int cls = 0; cls < k; ++cls) {
            std::vector<GradPair> grad(n);
            for (std::size_t r = 0; r < n; ++r) {
                if (encoded.task == TaskType::Regression) {
                    grad[r].g = scores[r][0] - encoded.y[r];
                    grad[r].h = 1.0;
                } else if (encoded.task == TaskType::Binary) {
                    const double pr = sigmoid(scores[r][0]);
                    grad[r].g = pr - encoded.y[r];
                    grad[r].h = std::max(pr * (1.0 - pr), 1e-12);
                } else {
                    double mx = scores[r][0];
                    for (int c = 1; c < k; ++c) mx = std::max(mx, scores[r][c]);
                    double z = 0.0;
                    for (int c = 0; c < k; ++c) z += std::exp(scores[r][c] - mx);
                    const double pr = std::exp(scores[r][cls] - mx) / z;
                    grad[r].g = pr - (static_cast<int>(encoded.y[r]) == cls ? 1.0 : 0.0);
                    grad[r].h = std::max(pr * (1.0 - pr), 1e-12);
                }
            }

            std::vector<int> features(p);
            std::iota(features.begin(), features.end(), 0);
            if (params.colsample < 1.0) {
                Rng col_rng = rng.spawn(3000 + round * 64 + cls);
                col_rng.shuffle(features);
                const int take =
                    std::max(1, static_cast<int>(std::floor(params.colsample * p)));
                features.resize(take);
                std::sort(features.begin(), features.end());
            }

            GbdtTreeBuilder builder(encoded, grad, params, features);
            Tree tree = builder.build(rows, growth, params.max_depth, max_leaves);
            for (std::size_t r = 0; r < n; ++r)
                scores[r][cls] += tree.nodes[route(tree, encoded, r)].value[0];
            model.trees.push_back(std::move(tree));
        }
        model.train_loss_curve.push_back(train_loss());
    }
    return model;
}

TrainedModel fit_model(EngineKind engine, const FrameView& data, const std::string& target,
                       const Hyperparams& params, std::uint64_t seed) {
    switch (engine) {
    case EngineKind::Tree: return fit_tree(data, target, params, seed);
    case EngineKind::RandomForest: return fit_random_forest(data, target, params, seed);
    case EngineKind::GbdtDepthwise:
        return fit_gbdt(data, target, params, GrowthPolicy::Depthwise, seed);
    case EngineKind::GbdtLeafwise:
        return fit_gbdt(data, target, params, GrowthPolicy::Leafwise, seed);
    }
    throw DataError("unknown engine");
}

// ---------------------------------------------------------------------------
// Prediction

Predictions predict(const TrainedModel& model, const FrameView& data) {
    const EncodedData enc = encode_for_predict(model.recipe, data);
    const std::size_t n = data.n_rows();
    Predictions out;
    out.task = model.task;
    out.class_labels = model.recipe.class_labels;

    const bool gbdt =
        model.engine == EngineKind::GbdtDepthwise || model.engine == EngineKind::GbdtLeafwise;
    if (gbdt) {
        const int k = static_cast<int>(model.base_score.size());
        std::vector<std::vector<double>> scores(n, model.base_score.empty()
                                                       ? std::vector<double>{0.0}
                                                       : std::vector<double>(
                                                             model.base_score.begin(),
                                                             model.base_score.end()));
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            const int cls = static_cast<int>(t % k);
            for (std::size_t r = 0; r < n; ++r)
                scores[r][cls] +=
                    model.trees[t].nodes[route(model.trees[t], enc, r)].value[0];
        }
        if (model.task == TaskType::Regression) {
            out.values.resize(n);
            for (std::size_t r = 0; r < n; ++r) out.values[r] = scores[r][0];
        } else if (model.task == TaskType::Binary) {
            out.probs.resize(n);
            for (std::size_t r = 0; r < n; ++r) {
                const double pr = sigmoid(scores[r][0]);
                out.probs[r] = {1.0 - pr, pr};
            }
        } else {
            out.probs.resize(n);
            for (std::size_t r = 0; r < n; ++r) {
                double mx = scores[r][0];
                for (int c = 1; c < k; ++c) mx = std::max(mx, scores[r][c]);
                double z = 0.0;
                std::vector<double> pr(k);
                for (int c = 0; c < k; ++c) {
                    pr[c] = std::exp(scores[r][c] - mx);
                    z += pr[c];
                }
                for (int c = 0; c < k; ++c) pr[c] /= z;
                out.probs[r] = std::move(pr);
            }
        }
        return out;
    }

    // tree / random forest: average leaf payloads
    const int k = model.task == TaskType::Regression
                      ? 1
                      : static_cast<int>(model.recipe.class_labels.size());
    std::vector<std::vector<double>> acc(n, std::vector<double>(k, 0.0));
    for (const Tree& tree : model.trees) {
        for (std::size_t r = 0; r < n; ++r) {
            const TreeNode& leaf = tree.nodes[route(tree, enc, r)];
            for (int c = 0; c < k; ++c) acc[r][c] += leaf.value[c];
        }
    }
    const double denom = static_cast<double>(model.trees.size());
    if (model.task == TaskType::Regression) {
        out.values.resize(n);
        for (std::size_t r = 0; r < n; ++r) out.values[r] = acc[r][0] / denom;
    } else {
        out.probs.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (int c = 0; c < k; ++c) acc[r][c] /= denom;
            out.probs[r] = std::move(acc[r]);
        }
    }
    return out;
}

Predictions predict(const TrainedModel& model, const Frame& data) {
    return predict(model, FrameView(data));
}

std::map<std::string, double> gain_importance(const TrainedModel& model) {
    std::map<std::string, double> importance;
    for (const FeatureRecipe& fr : model.recipe.features) importance[fr.name] = 0.0;
    for (const Tree& tree : model.trees)
        for (const TreeNode& node : tree.nodes)
            if (!node.is_leaf) importance[model.recipe.features[node.feature].name] += node.gain;
    return importance;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json node_to_json(const TreeNode& node) {
    nlohmann::json j;
    j["leaf"] = node.is_leaf;
    if (node.is_leaf) {
        j["value"] = node.value;
    } else {
        j["feature"] = node.feature;
        j["categorical"] = node.categorical;
        if (node.categorical) {
            std::vector<int> mask(node.left_levels.begin(), node.left_levels.end());
            j["left_levels"] = mask;
        } else {
            j["threshold"] = node.threshold;
        }
        j["left"] = node.left;
        j["right"] = node.right;
        j["default_left"] = node.default_left;
        j["gain"] = node.gain;
    }
    j["n"] = node.n_samples;
    return j;
}

TreeNode node_from_json(const nlohmann::json& j) {
    TreeNode node;
    node.is_leaf = j.at("leaf").get<bool>();
    node.n_samples = j.value("n", 0.0);
    if (node.is_leaf) {
        node.value = j.at("value").get<std::vector<double>>();
    } else {
        node.feature = j.at("feature").get<int>();
        node.categorical = j.at("categorical").get<bool>();
        if (node.categorical) {
            for (int v : j.at("left_levels").get<std::vector<int>>())
                node.left_levels.push_back(static_cast<char>(v));
        } else {
            node.threshold = j.at("threshold").get<double>();
        }
        node.left = j.at("left").get<int>();
        node.right = j.at("right").get<int>();
        node.default_left = j.at("default_left").get<bool>();
        node.gain = j.at("gain").get<double>();
    }
    return node;
}

std::string encoding_name(FeatureRecipe::Encoding e) {
    switch (e) {
    case FeatureRecipe::Encoding::Numeric: return "numeric";
    case FeatureRecipe::Encoding::Levels: return "levels";
    case FeatureRecipe::Encoding::TargetStat: return "target_stat";
    }
    return "numeric";
}

FeatureRecipe::Encoding encoding_from_name(const std::string& s) {
    if (s == "levels") return FeatureRecipe::Encoding::Levels;
    if (s == "target_stat") return FeatureRecipe::Encoding::TargetStat;
    return FeatureRecipe::Encoding::Numeric;
}

} // namespace

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json j;
    j["engine"] = to_string(engine);
    j["task"] = to_string(task);
    j["name"] = name;
    j["params"] = params.to_json(engine);
    j["base_score"] = base_score;
    j["train_loss_curve"] = train_loss_curve;

    nlohmann::json jr;
    jr["target"] = recipe.target_name;
    jr["task"] = to_string(recipe.task);
    jr["class_labels"] = recipe.class_labels;
    jr["features"] = nlohmann::json::array();
    for (const FeatureRecipe& fr : recipe.features) {
        nlohmann::json jf;
        jf["name"] = fr.name;
        jf["encoding"] = encoding_name(fr.encoding);
        jf["levels"] = fr.levels;
        jf["level_stats"] = fr.level_stats;
        jf["default_stat"] = fr.default_stat;
        jr["features"].push_back(std::move(jf));
    }
    j["recipe"] = std::move(jr);

    j["trees"] = nlohmann::json::array();
    for (const Tree& tree : trees) {
        nlohmann::json jt = nlohmann::json::array();
        for (const TreeNode& node : tree.nodes) jt.push_back(node_to_json(node));
        j["trees"].push_back(std::move(jt));
    }
    j["oob"] = {{"seen", std::vector<int>(oob_seen.begin(), oob_seen.end())},
                {"probs", oob_probs},
                {"values", oob_values}};
    return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    TrainedModel model;
    const auto engine = engine_from_string(j.at("engine").get<std::string>());
    if (!engine) throw ParseError("unknown engine in model document");
    model.engine = *engine;
    const std::string task = j.at("task").get<std::string>();
    model.task = task == "binary"       ? TaskType::Binary
                 : task == "multiclass" ? TaskType::Multiclass
                                        : TaskType::Regression;
    model.name = j.value("name", "");
    model.params = Hyperparams::from_json(model.engine, j.at("params"));
    model.base_score = j.at("base_score").get<std::vector<double>>();
    model.train_loss_curve = j.value("train_loss_curve", std::vector<double>{});

    const auto& jr = j.at("recipe");
    model.recipe.target_name = jr.at("target").get<std::string>();
    const std::string rtask = jr.at("task").get<std::string>();
    model.recipe.task = rtask == "binary"       ? TaskType::Binary
                        : rtask == "multiclass" ? TaskType::Multiclass
                                                : TaskType::Regression;
    model.recipe.class_labels = jr.at("class_labels").get<std::vector<std::string>>();
    for (const auto& jf : jr.at("features")) {
        FeatureRecipe fr;
        fr.name = jf.at("name").get<std::string>();
        fr.encoding = encoding_from_name(jf.at("encoding").get<std::string>());
        fr.levels = jf.at("levels").get<std::vector<std::string>>();
        fr.level_stats = jf.at("level_stats").get<std::map<std::string, double>>();
        fr.default_stat = jf.at("default_stat").get<double>();
        model.recipe.features.push_back(std::move(fr));
    }
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt) tree.nodes.push_back(node_from_json(jn));
        model.trees.push_back(std::move(tree));
    }
    if (j.contains("oob")) {
        for (int v : j["oob"].at("seen").get<std::vector<int>>())
            model.oob_seen.push_back(static_cast<char>(v));
        model.oob_probs = j["oob"].at("probs").get<std::vector<std::vector<double>>>();
        model.oob_values = j["oob"].at("values").get<std::vector<double>>();
    }
    return model;
}

} // namespace forester
