#include "forester/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/svg.hpp"

namespace forester {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fmt(const MetricValue& v) { return v.value ? fmt(*v.value) : std::string(); }

// ---------------------------------------------------------------------------
// Document model rendered to Markdown or HTML

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Block {
    enum class Kind { Paragraph, Table, Chart } kind = Kind::Paragraph;
    std::string text;       // paragraph
    Table table;            // table
    std::string chart_name; // chart
    std::string chart_svg;  // chart
};

struct Section {
    std::string title;
    std::vector<Block> blocks;
};

std::string html_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string render_markdown(const std::string& title, const std::vector<Section>& sections,
                            const std::string& assets_dir_name) {
    std::string out = "# " + title + "\n";
    for (std::size_t i = 0; i < sections.size(); ++i) {
        out += "\n## " + std::to_string(i + 1) + ". " + sections[i].title + "\n";
        for (const Block& b : sections[i].blocks) {
            if (b.kind == Block::Kind::Paragraph) {
                out += "\n" + b.text + "\n";
            } else if (b.kind == Block::Kind::Table) {
                out += "\n|";
                for (const std::string& h : b.table.header) out += " " + h + " |";
                out += "\n|";
                for (std::size_t c = 0; c < b.table.header.size(); ++c) out += " --- |";
                out += "\n";
                for (const auto& row : b.table.rows) {
                    out += "|";
                    for (const std::string& cell : row) out += " " + cell + " |";
                    out += "\n";
                }
            } else {
                out += "\n![" + b.chart_name + "](" + assets_dir_name + "/" + b.chart_name +
                       ".svg)\n";
            }
        }
    }
    return out;
}

std::string render_html(const std::string& title, const std::vector<Section>& sections) {
    std::string out = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
                      html_escape(title) + "</title>\n<style>\n"
                      "body{font-family:sans-serif;max-width:960px;margin:2em auto;}\n"
                      "table{border-collapse:collapse;}\n"
                      "td,th{border:1px solid #999;padding:4px 8px;font-size:14px;}\n"
                      "</style>\n</head>\n<body>\n";
    out += "<h1>" + html_escape(title) + "</h1>\n";
    for (std::size_t i = 0; i < sections.size(); ++i) {
        out += "<h2>" + std::to_string(i + 1) + ". " + html_escape(sections[i].title) +
               "</h2>\n";
        for (const Block& b : sections[i].blocks) {
            if (b.kind == Block::Kind::Paragraph) {
                out += "<p>" + html_escape(b.text) + "</p>\n";
            } else if (b.kind == Block::Kind::Table) {
                out += "<table>\n<tr>";
                for (const std::string& h : b.table.header)
                    out += "<th>" + html_escape(h) + "</th>";
                out += "</tr>\n";
                for (const auto& row : b.table.rows) {
                    out += "<tr>";
                    for (const std::string& cell : row)
                        out += "<td>" + html_escape(cell) + "</td>";
                    out += "</tr>\n";
                }
                out += "</table>\n";
            } else {
                out += b.chart_svg;
            }
        }
    }
    out += "</body>\n</html>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Content helpers

bool metric_higher_better(const TrainOutput& output, const std::string& metric) {
    const nlohmann::json snapshot = nlohmann::json::parse(output.registry_info);
    for (const auto& entry : snapshot)
        if (entry.at("name").get<std::string>() == metric)
            return entry.at("higher_better").get<bool>();
    throw DataError("unknown metric '" + metric + "'");
}

// ROC with the same tie convention as the AUC metric: equal scores move in
// one diagonal step, so the plotted area matches the reported number.
std::vector<std::pair<double, double>> roc_points(const std::vector<int>& truths,
                                                  const std::vector<double>& scores) {
    std::vector<std::pair<double, int>> ranked;
    for (std::size_t i = 0; i < truths.size(); ++i) ranked.emplace_back(scores[i], truths[i]);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double pos = 0.0, neg = 0.0;
    for (int t : truths) (t == 1 ? pos : neg) += 1.0;
    std::vector<std::pair<double, double>> points = {{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    std::size_t i = 0;
    while (i < ranked.size()) {
        std::size_t j = i;
        double dtp = 0.0, dfp = 0.0;
        while (j < ranked.size() && ranked[j].first == ranked[i].first) {
            (ranked[j].second == 1 ? dtp : dfp) += 1.0;
            ++j;
        }
        tp += dtp;
        fp += dfp;
        points.emplace_back(neg > 0.0 ? fp / neg : 0.0, pos > 0.0 ? tp / pos : 0.0);
        i = j;
    }
    return points;
}

Table confusion_table(const std::vector<int>& truths, const std::vector<int>& preds,
                      const std::vector<std::string>& labels) {
    const std::size_t k = labels.size();
    std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (truths[i] >= 0 && preds[i] >= 0)
            counts[static_cast<std::size_t>(truths[i])]
                  [static_cast<std::size_t>(preds[i])] += 1;
    Table t;
    t.header.push_back("true \\ predicted");
    for (const std::string& l : labels) t.header.push_back(l);
    for (std::size_t r = 0; r < k; ++r) {
        std::vector<std::string> row = {labels[r]};
        for (std::size_t c = 0; c < k; ++c) row.push_back(std::to_string(counts[r][c]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace

std::string generate_report(const TrainOutput& output, const ReportSpec& spec) {
    if (spec.top_n < 1) throw DataError("top_n must be at least 1");
    if (output.models.empty()) throw DataError("training output contains no models");
    const std::string metric =
        spec.sort_metric.empty() ? output.sort_metric : spec.sort_metric;
    const bool higher = metric_higher_better(output, metric);

    const Leaderboard& stored = output.leaderboard(spec.split);
    Leaderboard board = (metric == stored.sort_metric)
                            ? stored
                            : rank_models(stored.rows, metric, spec.split, higher);

    const std::size_t top =
        std::min<std::size_t>(static_cast<std::size_t>(spec.top_n), board.rows.size());
    const std::string& best_name = board.rows.front().model_name;
    const TrainedModel& best = output.model(best_name);

    std::vector<Section> sections;

    // 1. dataset summary
    {
        Section s{"Dataset summary", {}};
        const FrameSummary& fs = output.check_report.frame_summary;
        Table t;
        t.header = {"property", "value"};
        t.rows = {
            {"rows", std::to_string(fs.n_rows)},
            {"columns", std::to_string(fs.n_cols)},
            {"numeric columns", std::to_string(fs.n_numeric)},
            {"categorical columns", std::to_string(fs.n_categorical)},
            {"missing cells", std::to_string(fs.n_missing_cells)},
            {"target", fs.target_name},
            {"target summary", fs.target_summary},
            {"task", to_string(output.task)},
            {"train / test / valid rows",
             std::to_string(output.splits.train_idx.size()) + " / " +
                 std::to_string(output.splits.test_idx.size()) + " / " +
                 std::to_string(output.splits.valid_idx.size())},
            {"seed", std::to_string(output.seed)},
        };
        s.blocks.push_back({Block::Kind::Table, "", std::move(t), "", ""});
        sections.push_back(std::move(s));
    }

    // 2. data check
    {
        Section s{"Data check", {}};
        if (output.check_report.issues.empty()) {
            s.blocks.push_back({Block::Kind::Paragraph, "No issues found.", {}, "", ""});
        } else {
            Table t;
            t.header = {"kind", "severity", "subjects", "statistic", "detail"};
            for (const DataIssue& issue : output.check_report.issues) {
                std::string subjects;
                for (const std::string& sub : issue.subjects) {
                    if (!subjects.empty()) subjects += ", ";
                    subjects += sub;
                }
                t.rows.push_back({to_string(issue.kind), to_string(issue.severity), subjects,
                                  issue.statistic ? fmt(*issue.statistic) : std::string(),
                                  issue.detail});
            }
            s.blocks.push_back({Block::Kind::Table, "", std::move(t), "", ""});
        }
        sections.push_back(std::move(s));
    }

    // 3. preprocessing
    {
        Section s{"Preprocessing", {}};
        if (output.preprocess_log.actions.empty()) {
            s.blocks.push_back(
                {Block::Kind::Paragraph, "No preprocessing actions taken.", {}, "", ""});
        } else {
            Table t;
            t.header = {"stage", "subject", "reason", "statistic"};
            for (const PreprocessAction& a : output.preprocess_log.actions)
                t.rows.push_back({a.stage, a.subject, a.reason,
                                  a.statistic ? fmt(*a.statistic) : std::string()});
            s.blocks.push_back({Block::Kind::Table, "", std::move(t), "", ""});
        }
        sections.push_back(std::move(s));
    }

    // 4. ranked models
    {
        Section s{"Ranked models", {}};
        s.blocks.push_back({Block::Kind::Paragraph,
                            "Top " + std::to_string(top) + " of " +
                                std::to_string(board.rows.size()) + " models, sorted by " +
                                metric + " on the " + spec.split + " split.",
                            {}, "", ""});
        std::vector<std::string> metric_names;
        for (const auto& [name, splits] : board.rows.front().metrics)
            metric_names.push_back(name);
        Table t;
        t.header = {"rank", "model", "engine", "origin"};
        for (const std::string& m : metric_names) {
            t.header.push_back(m + " (test)");
            t.header.push_back(m + " (valid)");
        }
        for (std::size_t r = 0; r < top; ++r) {
            const LeaderboardRow& row = board.rows[r];
            std::vector<std::string> cells = {std::to_string(r + 1), row.model_name,
                                              to_string(row.engine), row.origin};
            for (const std::string& m : metric_names) {
                cells.push_back(fmt(row.metrics.at(m).at("test")));
                cells.push_back(fmt(row.metrics.at(m).at("valid")));
            }
            t.rows.push_back(std::move(cells));
        }
        s.blocks.push_back({Block::Kind::Table, "", std::move(t), "", ""});
        sections.push_back(std::move(s));
    }

    // 5. model comparison grouped by evaluation split
    {
        Section s{"Model comparison", {}};
        std::vector<std::string> groups;
        std::vector<std::vector<double>> values(3);
        const std::vector<std::string> splits = {"train", "test", "valid"};
        for (std::size_t r = 0; r < top; ++r) {
            groups.push_back(board.rows[r].model_name);
            for (std::size_t sp = 0; sp < splits.size(); ++sp) {
                const MetricValue& v = board.rows[r].metrics.at(metric).at(splits[sp]);
                values[sp].push_back(v.value ? *v.value : 0.0);
            }
        }
        s.blocks.push_back({Block::Kind::Chart, "", {}, "model_comparison",
                            svg_grouped_bar_chart(metric + " by evaluation split", groups,
                                                  splits, values)});
        sections.push_back(std::move(s));
    }

    // 6. task-specific diagnostics for the best model
    {
        Section s{"Diagnostics", {}};
        const Predictions& preds = output.predictions.at(best_name).at(spec.split);
        const std::vector<std::size_t>& idx =
            spec.split == "train" ? output.splits.train_idx
            : spec.split == "test" ? output.splits.test_idx
                                   : output.splits.valid_idx;
        const GroundTruth truth =
            extract_truth(FrameView(output.preprocessed, idx), output.target,
                          preds.class_labels, output.task);
        if (output.task == TaskType::Regression) {
            std::vector<std::pair<double, double>> points;
            for (std::size_t i = 0; i < truth.values.size(); ++i)
                points.emplace_back(truth.values[i], preds.values[i]);
            s.blocks.push_back({Block::Kind::Chart, "", {}, "predicted_vs_true",
                                svg_scatter("Predicted vs true (" + best_name + ", " +
                                                spec.split + ")",
                                            "true", "predicted", points, true)});
        } else {
            std::vector<int> pred_class;
            for (const auto& row : preds.probs) {
                int arg = 0;
                for (std::size_t c = 1; c < row.size(); ++c)
                    if (row[c] > row[arg]) arg = static_cast<int>(c);
                pred_class.push_back(arg);
            }
            if (output.task == TaskType::Binary) {
                // positive class = lexicographically greater = second label
                const std::size_t pos = preds.class_labels.size() - 1;
                std::vector<int> binary_truth;
                std::vector<double> scores;
                for (std::size_t i = 0; i < preds.probs.size(); ++i) {
                    binary_truth.push_back(truth.classes[i] == static_cast<int>(pos) ? 1 : 0);
                    scores.push_back(preds.probs[i][pos]);
                }
                s.blocks.push_back(
                    {Block::Kind::Chart, "", {}, "roc_curve",
                     svg_line_chart("ROC curve (" + best_name + ", " + spec.split + ")",
                                    "false positive rate", "true positive rate",
                                    {{best_name, roc_points(binary_truth, scores)}})});
            }
            s.blocks.push_back({Block::Kind::Paragraph,
                                "Confusion matrix of " + best_name + " on the " + spec.split +
                                    " split.",
                                {}, "", ""});
            s.blocks.push_back({Block::Kind::Table, "",
                                confusion_table(truth.classes, pred_class,
                                                preds.class_labels),
                                "", ""});
        }
        sections.push_back(std::move(s));
    }

    // 7. feature importance of the best model
    {
        Section s{"Feature importance", {}};
        const std::map<std::string, double> imp = gain_importance(best);
        std::vector<std::pair<std::string, double>> ranked(imp.begin(), imp.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (ranked.size() > 15) ranked.resize(15);
        std::vector<std::string> labels;
        std::vector<double> values;
        for (const auto& [name, v] : ranked) {
            labels.push_back(name);
            values.push_back(v);
        }
        s.blocks.push_back({Block::Kind::Chart, "", {}, "feature_importance",
                            svg_bar_chart("Split-gain importance (" + best_name + ")", labels,
                                          values)});
        sections.push_back(std::move(s));
    }

    // render and write
    const std::string title = "Training report";
    namespace fs = std::filesystem;
    const fs::path out_path(spec.path);
    std::string document;
    if (spec.format == ReportSpec::Format::Html) {
        document = render_html(title, sections);
    } else {
        const std::string assets_name = out_path.stem().string() + "_assets";
        const fs::path assets_dir = out_path.parent_path() / assets_name;
        std::error_code ec;
        fs::create_directories(assets_dir, ec);
        for (const Section& s : sections) {
            for (const Block& b : s.blocks) {
                if (b.kind != Block::Kind::Chart) continue;
                std::ofstream svg(assets_dir / (b.chart_name + ".svg"),
                                  std::ios::binary | std::ios::trunc);
                if (!svg) throw IoError("cannot write chart: " + (assets_dir / b.chart_name).string());
                svg << b.chart_svg;
            }
        }
        document = render_markdown(title, sections, assets_name);
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report: " + spec.path);
    out << document;
    if (!out) throw IoError("failed writing report: " + spec.path);
    return spec.path;
}

} // namespace forester
