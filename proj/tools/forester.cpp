// forester command-line interface: check, preprocess, train, report,
// explain, select. Exit codes: 0 success, 2 usage, 3 data error, 4 IO.

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "forester/data_check.hpp"
#include "forester/errors.hpp"
#include "forester/explain.hpp"
#include "forester/persist.hpp"
#include "forester/preprocess.hpp"
#include "forester/report.hpp"
#include "forester/train.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw forester::IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw forester::ParseError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw forester::IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw forester::IoError("write failure on '" + path + "'");
}

std::set<forester::EngineKind> parse_engines(const std::vector<std::string>& names) {
    std::set<forester::EngineKind> engines;
    for (const std::string& name : names) {
        const auto e = forester::engine_from_string(name);
        if (!e) {
            std::string valid;
            for (forester::EngineKind k : forester::all_engines()) {
                if (!valid.empty()) valid += ", ";
                valid += forester::to_string(k);
            }
            throw forester::DataError("unknown engine '" + name + "' (valid engines: " +
                                      valid + ")");
        }
        engines.insert(*e);
    }
    return engines;
}

forester::ImputeMethod parse_impute(const std::string& method, int knn_k, int mice_iters) {
    if (method == "median_other") return forester::MedianOther{};
    if (method == "median_frequency") return forester::MedianFrequency{};
    if (method == "knn") return forester::Knn{knn_k};
    if (method == "mice") return forester::Mice{mice_iters};
    throw forester::DataError("unknown imputation method '" + method + "'");
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    std::string data;
    std::string target;
    forester::CheckThresholds thresholds;
    bool as_json = false;
    std::string out;
};

int cmd_check(const CheckArgs& a) {
    const forester::Frame frame = forester::infer_types(forester::load_csv(a.data));
    const forester::DataCheckReport report =
        forester::check_data(frame, a.target, a.thresholds);
    if (!a.out.empty()) write_text_file(a.out, report.to_json().dump(2) + "\n");
    if (a.as_json) std::cout << report.to_json().dump(2) << "\n";
    else std::cout << report.to_text();
    return 0;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
    std::string data;
    std::string target;
    std::string out;
    std::string log_path;
    forester::PreprocessConfig config;
    std::string impute_method;
    int knn_k = 5;
    int mice_iters = 5;
    std::string select_method = "none";
    int top_k = 10;
    int boruta_iters = 20;
    double alpha = 0.05;
    int projections = 100;
    double fraction = 0.3;
    int n_repeats = 5;
    bool as_json = false;
};

int cmd_preprocess(PreprocessArgs a) {
    if (!a.impute_method.empty())
        a.config.impute = parse_impute(a.impute_method, a.knn_k, a.mice_iters);
    if (a.select_method == "none") a.config.select = forester::SelectNone{};
    else if (a.select_method == "mutual_info") a.config.select = forester::MutualInfo{a.top_k};
    else if (a.select_method == "boruta")
        a.config.select = forester::Boruta{a.boruta_iters, a.alpha};
    else if (a.select_method == "mcfs")
        a.config.select = forester::Mcfs{a.projections, a.fraction, a.top_k};
    else if (a.select_method == "permutation_vi")
        a.config.select = forester::PermutationVI{a.n_repeats};
    else throw forester::DataError("unknown selection method '" + a.select_method + "'");

    const forester::Frame frame = forester::infer_types(forester::load_csv(a.data));
    forester::PreprocessResult result =
        forester::custom_preprocessing(frame, a.target, a.config);
    forester::write_csv(result.frame, a.out);
    if (!a.log_path.empty())
        write_text_file(a.log_path, result.log.to_json().dump(2) + "\n");
    if (a.as_json) {
        json j;
        j["out"] = a.out;
        j["rows"] = result.frame.n_rows();
        j["columns"] = result.frame.column_names();
        j["log"] = result.log.to_json();
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "Wrote " << result.frame.n_rows() << " rows x "
                  << result.frame.n_cols() << " columns to " << a.out << "\n"
                  << result.log.to_text();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string target;
    std::string out = "forester.forester-bundle";
    std::vector<std::string> engines;
    bool no_defaults = false;
    forester::TrainConfig config;
    std::vector<double> ratios;
    std::string param_space_path;
    int threads = 0;
    int top = 10;
    bool as_json = false;
    std::string config_path;
};

void merge_train_config(TrainArgs& a, const CLI::App* cmd) {
    const json cfg = load_json_file(a.config_path);
    auto unset = [&](const std::string& flag) { return cmd->count(flag) == 0; };
    if (cfg.contains("data") && unset("--data")) a.data = cfg["data"].get<std::string>();
    if (cfg.contains("target") && unset("--target"))
        a.target = cfg["target"].get<std::string>();
    if (cfg.contains("out") && unset("--out")) a.out = cfg["out"].get<std::string>();
    if (cfg.contains("engines") && unset("--engines"))
        a.engines = cfg["engines"].get<std::vector<std::string>>();
    if (cfg.contains("defaults") && unset("--no-defaults"))
        a.no_defaults = !cfg["defaults"].get<bool>();
    if (cfg.contains("random_n") && unset("--random-n"))
        a.config.random_n = cfg["random_n"].get<int>();
    if (cfg.contains("bayes_budget") && unset("--bayes-budget"))
        a.config.bayes_budget = cfg["bayes_budget"].get<int>();
    if (cfg.contains("bayes_init") && unset("--bayes-init"))
        a.config.bayes_init_points = cfg["bayes_init"].get<int>();
    if (cfg.contains("metric") && unset("--metric"))
        a.config.metric = cfg["metric"].get<std::string>();
    if (cfg.contains("ratios") && unset("--ratios"))
        a.ratios = cfg["ratios"].get<std::vector<double>>();
    if (cfg.contains("assume_preprocessed") && unset("--assume-preprocessed"))
        a.config.assume_preprocessed = cfg["assume_preprocessed"].get<bool>();
    if (cfg.contains("seed") && unset("--seed"))
        a.config.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("threads") && unset("--threads"))
        a.threads = cfg["threads"].get<int>();
    if (cfg.contains("param_space") && unset("--param-space"))
        a.config.space = forester::ParamSpace::from_json(cfg["param_space"]);
}

int cmd_train(TrainArgs a, const CLI::App* cmd) {
    if (!a.config_path.empty()) merge_train_config(a, cmd);
    if (a.data.empty()) throw CLI::RequiredError("--data");
    if (a.target.empty()) throw CLI::RequiredError("--target");
    if (!a.engines.empty()) a.config.engines = parse_engines(a.engines);
    a.config.include_defaults = !a.no_defaults;
    if (!a.ratios.empty()) {
        if (a.ratios.size() != 3)
            throw forester::DataError("--ratios requires exactly three values");
        a.config.ratios = {a.ratios[0], a.ratios[1], a.ratios[2]};
    }
    if (!a.param_space_path.empty())
        a.config.space = forester::ParamSpace::from_json(load_json_file(a.param_space_path));
    if (a.threads > 0) forester::set_max_threads(a.threads);

    const forester::Frame frame = forester::infer_types(forester::load_csv(a.data));
    const forester::TrainOutput output = forester::run_training(frame, a.target, a.config);
    forester::save_output(output, a.out);

    const forester::Leaderboard& board = output.leaderboard("test");
    if (a.as_json) {
        json j;
        j["bundle"] = a.out;
        j["sort_metric"] = output.sort_metric;
        j["leaderboard"] = board.to_json();
        j["warnings"] = output.warnings;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "Saved bundle to " << a.out << "\n";
    std::cout << "Top models by " << output.sort_metric << " (test split):\n";
    const std::size_t top =
        std::min<std::size_t>(static_cast<std::size_t>(a.top), board.rows.size());
    for (std::size_t i = 0; i < top; ++i) {
        const forester::LeaderboardRow& row = board.rows[i];
        const forester::MetricValue& v = row.metrics.at(output.sort_metric).at("test");
        std::cout << "  " << (i + 1) << ". " << row.model_name << "  " << output.sort_metric
                  << "=";
        if (v.value) std::cout << *v.value;
        else std::cout << "-";
        std::cout << "\n";
    }
    for (const std::string& w : output.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report / explain / select

struct ReportArgs {
    std::string bundle;
    forester::ReportSpec spec;
    std::string format = "markdown";
};

int cmd_report(ReportArgs a) {
    if (a.format == "markdown" || a.format == "md")
        a.spec.format = forester::ReportSpec::Format::Markdown;
    else if (a.format == "html")
        a.spec.format = forester::ReportSpec::Format::Html;
    else throw forester::DataError("unknown report format '" + a.format + "'");
    const forester::TrainOutput output = forester::load_output(a.bundle);
    std::cout << "Wrote " << forester::generate_report(output, a.spec) << "\n";
    return 0;
}

struct ExplainArgs {
    std::string bundle;
    std::string model;
    std::string feature;
    std::string metric;
    std::string split = "test";
    int grid = 20;
    int repeats = 5;
    std::uint64_t seed = 0;
    std::string out;
    bool as_json = false;
};

int cmd_explain(const ExplainArgs& a) {
    const forester::TrainOutput output = forester::load_output(a.bundle);
    const std::string model_name =
        a.model.empty() ? output.leaderboard("test").rows.front().model_name : a.model;
    const forester::TrainedModel& model = output.model(model_name);
    const std::vector<std::size_t>& idx = a.split == "train" ? output.splits.train_idx
                                          : a.split == "valid"
                                              ? output.splits.valid_idx
                                              : output.splits.test_idx;
    const forester::Frame frame = output.preprocessed.select_rows(idx);

    json j;
    j["model"] = model_name;
    if (!a.feature.empty()) {
        j["partial_dependence"] =
            forester::partial_dependence(model, frame, a.feature, a.grid).to_json();
    } else {
        const std::string metric =
            a.metric.empty() ? output.sort_metric : a.metric;
        j["permutation_importance"] =
            forester::permutation_importance(model, frame, metric,
                                             forester::MetricRegistry::built_ins(),
                                             a.repeats, a.seed)
                .to_json();
    }
    if (!a.out.empty()) write_text_file(a.out, j.dump(2) + "\n");
    if (a.as_json || a.out.empty()) std::cout << j.dump(2) << "\n";
    else std::cout << "Wrote " << a.out << "\n";
    return 0;
}

struct SelectArgs {
    std::string bundle;
    std::vector<std::string> models;
    std::string out;
};

int cmd_select(const SelectArgs& a) {
    const forester::TrainOutput output = forester::load_output(a.bundle);
    forester::save_output(forester::select_models(output, a.models), a.out);
    std::cout << "Wrote " << a.out << " with " << a.models.size() << " model(s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"forester: tree-based AutoML for tabular data"};
    app.require_subcommand(1);

    CheckArgs check_args;
    CLI::App* check = app.add_subcommand("check", "Run the data quality check");
    check->add_option("--data", check_args.data, "CSV input path")->required();
    check->add_option("--target", check_args.target, "Target column name")->required();
    check->add_option("--static-share", check_args.thresholds.k,
                      "Static-column modal share threshold (k)");
    check->add_option("--min-present", check_args.thresholds.l,
                      "Minimum non-missing column share (l)");
    check->add_option("--min-row-present", check_args.thresholds.m,
                      "Minimum non-missing row share (m)");
    check->add_option("--correlation", check_args.thresholds.n,
                      "High-correlation threshold (n)");
    check->add_flag("--json", check_args.as_json, "Machine-readable output");
    check->add_option("--out", check_args.out, "Also write the JSON report to this path");

    PreprocessArgs pre_args;
    CLI::App* pre = app.add_subcommand("preprocess", "Run custom preprocessing");
    pre->add_option("--data", pre_args.data, "CSV input path")->required();
    pre->add_option("--target", pre_args.target, "Target column name")->required();
    pre->add_option("--out", pre_args.out, "Output CSV path")->required();
    pre->add_option("--log", pre_args.log_path, "Write the action log as JSON");
    pre->add_flag("--drop-duplicates", pre_args.config.remove_duplicates,
                  "Remove duplicate columns");
    pre->add_flag("--drop-id-like", pre_args.config.remove_id_like, "Remove id-like columns");
    pre->add_flag("--drop-static", pre_args.config.remove_static, "Remove static columns");
    pre->add_flag("--drop-sparse", pre_args.config.remove_sparse, "Remove sparse columns");
    pre->add_flag("--drop-corrupted-rows", pre_args.config.remove_corrupted_rows,
                  "Remove mostly-missing rows");
    pre->add_flag("--drop-correlated", pre_args.config.remove_correlated,
                  "Remove highly correlated columns");
    pre->add_option("--static-share", pre_args.config.thresholds.k, "Threshold k");
    pre->add_option("--min-present", pre_args.config.thresholds.l, "Threshold l");
    pre->add_option("--min-row-present", pre_args.config.thresholds.m, "Threshold m");
    pre->add_option("--correlation", pre_args.config.thresholds.n, "Threshold n");
    pre->add_option("--impute", pre_args.impute_method,
                    "Imputation: median_other, median_frequency, knn, mice");
    pre->add_option("--knn-k", pre_args.knn_k, "KNN imputation neighbor count");
    pre->add_option("--mice-iters", pre_args.mice_iters, "MICE iteration count");
    pre->add_option("--select", pre_args.select_method,
                    "Selection: none, mutual_info, boruta, mcfs, permutation_vi");
    pre->add_option("--top-k", pre_args.top_k, "Features kept by mutual_info / mcfs");
    pre->add_option("--boruta-iters", pre_args.boruta_iters, "Boruta iteration cap");
    pre->add_option("--alpha", pre_args.alpha, "Boruta significance level");
    pre->add_option("--projections", pre_args.projections, "MCFS projection count");
    pre->add_option("--fraction", pre_args.fraction, "MCFS feature fraction per projection");
    pre->add_option("--n-repeats", pre_args.n_repeats, "Permutation-VI repeat count");
    pre->add_option("--seed", pre_args.config.seed, "Random seed");
    pre->add_flag("--json", pre_args.as_json, "Machine-readable output");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train and tune models");
    train->add_option("--data", train_args.data, "CSV input path");
    train->add_option("--target", train_args.target, "Target column name");
    train->add_option("--out", train_args.out, "Output bundle path");
    train->add_option("--engines", train_args.engines,
                      "Engines: tree, random_forest, gbdt_depthwise, gbdt_leafwise")
        ->delimiter(',');
    train->add_flag("--no-defaults", train_args.no_defaults,
                    "Skip the default-parameter candidates");
    train->add_option("--random-n", train_args.config.random_n,
                      "Random-search candidates per engine");
    train->add_option("--bayes-budget", train_args.config.bayes_budget,
                      "Bayesian optimization evaluations per engine (0 disables)");
    train->add_option("--bayes-init", train_args.config.bayes_init_points,
                      "Bayesian init design size");
    train->add_option("--metric", train_args.config.metric,
                      "Tuning/sort metric (default: accuracy or rmse)");
    train->add_option("--ratios", train_args.ratios, "Train,test,valid split ratios")
        ->delimiter(',');
    train->add_flag("--assume-preprocessed", train_args.config.assume_preprocessed,
                    "Skip basic preprocessing");
    train->add_option("--param-space", train_args.param_space_path,
                      "JSON parameter-space override");
    train->add_option("--seed", train_args.config.seed, "Random seed");
    train->add_option("--threads", train_args.threads, "Worker thread cap");
    train->add_option("--top", train_args.top, "Console leaderboard rows");
    train->add_flag("--json", train_args.as_json, "Machine-readable output");
    train->add_option("--config", train_args.config_path,
                      "JSON config file (command-line flags win)");

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "Generate the training report");
    report->add_option("--bundle", report_args.bundle, "Bundle path")->required();
    report->add_option("--out", report_args.spec.path, "Report output path")->required();
    report->add_option("--format", report_args.format, "markdown or html");
    report->add_option("--top-n", report_args.spec.top_n, "Ranked-list length");
    report->add_option("--metric", report_args.spec.sort_metric, "Sort metric override");
    report->add_option("--split", report_args.spec.split, "Sort split (train/test/valid)");

    ExplainArgs explain_args;
    CLI::App* explain = app.add_subcommand("explain", "Explain a trained model");
    explain->add_option("--bundle", explain_args.bundle, "Bundle path")->required();
    explain->add_option("--model", explain_args.model,
                        "Model name (default: best on the test split)");
    explain->add_option("--feature", explain_args.feature,
                        "Compute partial dependence for this feature");
    explain->add_option("--metric", explain_args.metric, "Importance metric");
    explain->add_option("--split", explain_args.split, "Data split to explain on");
    explain->add_option("--grid", explain_args.grid, "Partial-dependence grid size");
    explain->add_option("--repeats", explain_args.repeats, "Permutation repeats");
    explain->add_option("--seed", explain_args.seed, "Random seed");
    explain->add_option("--out", explain_args.out, "Write JSON result to this path");
    explain->add_flag("--json", explain_args.as_json, "Machine-readable output");

    SelectArgs select_args;
    CLI::App* select = app.add_subcommand("select", "Keep a subset of models in a bundle");
    select->add_option("--bundle", select_args.bundle, "Bundle path")->required();
    select->add_option("--models", select_args.models, "Model names to keep")
        ->required()
        ->delimiter(',');
    select->add_option("--out", select_args.out, "Output bundle path")->required();

    try {
        app.parse(argc, argv);
        if (check->parsed()) return cmd_check(check_args);
        if (pre->parsed()) return cmd_preprocess(pre_args);
        if (train->parsed()) return cmd_train(train_args, train);
        if (report->parsed()) return cmd_report(report_args);
        if (explain->parsed()) return cmd_explain(explain_args);
        if (select->parsed()) return cmd_select(select_args);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const forester::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const forester::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const forester::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
