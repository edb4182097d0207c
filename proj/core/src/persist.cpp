#include "forester/persist.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"

namespace forester {

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string write_bundle(const std::map<std::string, std::string>& entries) {
    std::string out = "FORESTERBUNDLE 1\n";
    out += std::to_string(entries.size()) + "\n";
    for (const auto& [name, data] : entries) {
        out += name + " " + std::to_string(data.size()) + "\n";
        out += data;
        out += "\n";
    }
    out += "CHECKSUM " + hex64(fnv1a(out)) + "\n";
    return out;
}

std::map<std::string, std::string> parse_bundle(const std::string& raw,
                                                const std::string& path) {
    const std::string header = "FORESTERBUNDLE 1\n";
    if (raw.rfind(header, 0) != 0)
        throw ParseError("not a forester bundle: " + path);

    // checksum line is the trailer; everything before it is covered
    const std::size_t trailer = raw.rfind("CHECKSUM ");
    if (trailer == std::string::npos || trailer + 26 != raw.size() ||
        raw.back() != '\n')
        throw ParseError("truncated bundle: " + path);
    const std::string stored = raw.substr(trailer + 9, 16);
    if (stored != hex64(fnv1a(raw.substr(0, trailer))))
        throw ParseError("checksum mismatch in bundle: " + path);

    std::map<std::string, std::string> entries;
    std::size_t at = header.size();
    auto read_line = [&]() {
        const std::size_t nl = raw.find('\n', at);
        if (nl == std::string::npos || nl >= trailer)
            throw ParseError("truncated bundle: " + path);
        std::string line = raw.substr(at, nl - at);
        at = nl + 1;
        return line;
    };
    const std::size_t count = std::stoull(read_line());
    for (std::size_t i = 0; i < count; ++i) {
        const std::string line = read_line();
        const std::size_t sp = line.rfind(' ');
        if (sp == std::string::npos) throw ParseError("malformed bundle entry: " + path);
        const std::string name = line.substr(0, sp);
        const std::size_t size = std::stoull(line.substr(sp + 1));
        if (at + size + 1 > trailer) throw ParseError("truncated bundle: " + path);
        entries[name] = raw.substr(at, size);
        at += size;
        if (raw[at] != '\n') throw ParseError("malformed bundle entry: " + path);
        at += 1;
    }
    if (at != trailer) throw ParseError("malformed bundle: " + path);
    return entries;
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

nlohmann::json frame_schema(const Frame& frame) {
    nlohmann::json kinds = nlohmann::json::array();
    for (const Column& c : frame.columns())
        kinds.push_back(c.kind == ColumnKind::Numeric ? "numeric" : "categorical");
    return kinds;
}

Frame frame_from_entry(const std::string& csv, const nlohmann::json& kinds,
                       const std::optional<std::string>& target) {
    Frame parsed = parse_csv(csv);
    std::vector<Column> columns = parsed.columns();
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (kinds.at(c).get<std::string>() != "numeric") continue;
        Column& col = columns[c];
        col.kind = ColumnKind::Numeric;
        col.numeric.assign(col.size(), 0.0);
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col.missing[r]) continue;
            const auto v = parse_number(col.text[r]);
            if (!v) throw DataError("non-numeric cell in numeric column '" + col.name + "'");
            col.numeric[r] = *v;
        }
    }
    return Frame(std::move(columns), target);
}

std::string predictions_to_csv(const Predictions& preds) {
    std::vector<Column> columns;
    if (preds.task == TaskType::Regression) {
        columns.push_back(make_numeric_column("value", preds.values));
    } else {
        for (std::size_t c = 0; c < preds.class_labels.size(); ++c) {
            std::vector<double> col(preds.probs.size());
            for (std::size_t r = 0; r < preds.probs.size(); ++r) col[r] = preds.probs[r][c];
            columns.push_back(make_numeric_column(preds.class_labels[c], std::move(col)));
        }
    }
    return to_csv(Frame(std::move(columns)));
}

Predictions predictions_from_csv(const std::string& csv, TaskType task) {
    const Frame parsed = parse_csv(csv);
    Predictions preds;
    preds.task = task;
    if (task == TaskType::Regression) {
        const Column& col = parsed.column("value");
        for (std::size_t r = 0; r < col.size(); ++r)
            preds.values.push_back(*parse_number(col.text[r]));
        return preds;
    }
    for (const Column& col : parsed.columns()) preds.class_labels.push_back(col.name);
    preds.probs.assign(parsed.n_rows(), std::vector<double>(parsed.n_cols(), 0.0));
    for (std::size_t c = 0; c < parsed.n_cols(); ++c)
        for (std::size_t r = 0; r < parsed.n_rows(); ++r)
            preds.probs[r][c] = *parse_number(parsed.column(c).text[r]);
    return preds;
}

TaskType task_from_string(const std::string& s) {
    if (s == "binary") return TaskType::Binary;
    if (s == "multiclass") return TaskType::Multiclass;
    if (s == "regression") return TaskType::Regression;
    throw DataError("unknown task '" + s + "'");
}

} // namespace

std::map<std::string, std::string> read_bundle_entries(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_bundle(buffer.str(), path);
}

void save_output(const TrainOutput& output, const std::string& path) {
    std::map<std::string, std::string> entries;

    nlohmann::json manifest;
    manifest["schema_version"] = output.schema_version;
    manifest["seed"] = output.seed;
    manifest["target"] = output.target;
    manifest["task"] = to_string(output.task);
    manifest["class_labels"] = output.class_labels;
    manifest["sort_metric"] = output.sort_metric;
    manifest["warnings"] = output.warnings;
    manifest["frames"] = {{"original", frame_schema(output.original)},
                          {"preprocessed", frame_schema(output.preprocessed)}};
    nlohmann::json model_names = nlohmann::json::array();
    for (const TrainedModel& m : output.models) model_names.push_back(m.name);
    manifest["models"] = std::move(model_names);

    entries["manifest.json"] = manifest.dump(2);
    entries["frames/original.csv"] = to_csv(output.original);
    entries["frames/preprocessed.csv"] = to_csv(output.preprocessed);
    entries["splits.json"] = output.splits.to_json().dump(2);
    entries["check_report.json"] = output.check_report.to_json().dump(2);
    entries["preprocess_log.json"] = output.preprocess_log.to_json().dump(2);
    entries["registry.json"] = output.registry_info;
    for (const TrainedModel& m : output.models)
        entries["models/" + m.name + ".json"] = m.to_json().dump();
    for (const auto& [model, splits] : output.predictions)
        for (const auto& [split, preds] : splits)
            entries["predictions/" + model + "/" + split + ".csv"] =
                predictions_to_csv(preds);
    for (const auto& [split, board] : output.leaderboards)
        entries["leaderboards/" + split + ".json"] = board.to_json().dump(2);
    {
        nlohmann::json timing = nlohmann::json::object();
        for (const auto& [name, seconds] : output.timing_seconds)
            timing[name] = format_double(seconds);  // text keeps bits exact
        entries["timing.json"] = timing.dump(2);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write bundle: " + path);
    const std::string data = write_bundle(entries);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("failed writing bundle: " + path);
}

TrainOutput load_output(const std::string& path) {
    const std::map<std::string, std::string> entries = read_bundle_entries(path);
    auto entry = [&](const std::string& name) -> const std::string& {
        auto it = entries.find(name);
        if (it == entries.end())
            throw DataError("bundle missing entry '" + name + "': " + path);
        return it->second;
    };

    const nlohmann::json manifest = nlohmann::json::parse(entry("manifest.json"));
    const int version = manifest.at("schema_version").get<int>();
    if (version != kBundleSchemaVersion)
        throw ParseError("unsupported bundle schema_version " + std::to_string(version) +
                        " (expected " + std::to_string(kBundleSchemaVersion) + ")");

    TrainOutput out;
    out.schema_version = version;
    out.seed = manifest.at("seed").get<std::uint64_t>();
    out.target = manifest.at("target").get<std::string>();
    out.task = task_from_string(manifest.at("task").get<std::string>());
    out.class_labels = manifest.at("class_labels").get<std::vector<std::string>>();
    out.sort_metric = manifest.at("sort_metric").get<std::string>();
    out.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    out.registry_info = entry("registry.json");

    out.original = frame_from_entry(entry("frames/original.csv"),
                                    manifest.at("frames").at("original"), out.target);
    out.preprocessed = frame_from_entry(entry("frames/preprocessed.csv"),
                                        manifest.at("frames").at("preprocessed"), out.target);
    out.splits = SplitSet::from_json(nlohmann::json::parse(entry("splits.json")));
    out.check_report =
        DataCheckReport::from_json(nlohmann::json::parse(entry("check_report.json")));
    out.preprocess_log =
        PreprocessLog::from_json(nlohmann::json::parse(entry("preprocess_log.json")));

    for (const auto& jn : manifest.at("models")) {
        const std::string name = jn.get<std::string>();
        TrainedModel model =
            TrainedModel::from_json(nlohmann::json::parse(entry("models/" + name + ".json")));
        model.name = name;
        for (const std::string split : {"train", "test", "valid"})
            out.predictions[name][split] = predictions_from_csv(
                entry("predictions/" + name + "/" + split + ".csv"), model.task);
        out.models.push_back(std::move(model));
    }
    for (const std::string split : {"train", "test", "valid"})
        out.leaderboards[split] =
            Leaderboard::from_json(nlohmann::json::parse(entry("leaderboards/" + split +
                                                               ".json")));
    {
        const nlohmann::json timing = nlohmann::json::parse(entry("timing.json"));
        for (auto it = timing.begin(); it != timing.end(); ++it)
            out.timing_seconds[it.key()] = *parse_number(it.value().get<std::string>());
    }
    return out;
}

TrainOutput select_models(const TrainOutput& output, const std::vector<std::string>& names) {
    if (names.empty()) throw DataError("no model names given");
    std::set<std::string> keep(names.begin(), names.end());
    for (const std::string& name : keep) {
        bool found = false;
        for (const TrainedModel& m : output.models) found |= m.name == name;
        if (!found) throw DataError("unknown model '" + name + "'");
    }

    TrainOutput out = output;
    out.models.clear();
    out.predictions.clear();
    out.timing_seconds.clear();
    for (const TrainedModel& m : output.models) {
        if (!keep.count(m.name)) continue;
        out.models.push_back(m);
        out.predictions[m.name] = output.predictions.at(m.name);
        auto it = output.timing_seconds.find(m.name);
        if (it != output.timing_seconds.end()) out.timing_seconds[m.name] = it->second;
    }

    out.leaderboards.clear();
    for (const auto& [split, board] : output.leaderboards) {
        std::vector<LeaderboardRow> rows;
        for (const LeaderboardRow& row : board.rows)
            if (keep.count(row.model_name)) rows.push_back(row);
        out.leaderboards[split] =
            rank_models(std::move(rows), board.sort_metric, split, board.higher_better);
    }
    return out;
}

} // namespace forester
