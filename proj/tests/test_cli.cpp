#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "forester/persist.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = FORESTER_CLI_PATH;
const fs::path kDataDir = FORESTER_DATA_DIR;

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "cli_capture.txt";
    const std::string cmd = kCli + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::ostringstream ss;
    ss << in.rdbuf();
#ifdef _WIN32
    const int code = status;
#else
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
    return {code, ss.str()};
}

std::string heart() { return (kDataDir / "heart.csv").string(); }

fs::path write_clean_csv() {
    const fs::path p = fs::temp_directory_path() / "cli_clean.csv";
    std::ofstream f(p);
    f << "a,b,y\n";
    for (int i = 0; i < 60; ++i)
        f << (i * 37 % 100) / 100.0 << "," << (i * 61 % 100) / 100.0 << ","
          << (i % 2 ? "p" : "n") << "\n";
    return p;
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("definitely-not-a-command").exit_code == 2);
    CHECK(run("check").exit_code == 2);                 // missing required options
    CHECK(run("train --data x.csv").exit_code == 2);    // missing --target
    const RunResult help = run("--help");
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("train") != std::string::npos);
}

TEST_CASE("missing input file exits with the io code 4") {
    CHECK(run("check --data /nonexistent/nope.csv --target y").exit_code == 4);
}

TEST_CASE("bad data exits with code 3") {
    // unknown target column is a data problem, not a usage problem
    const RunResult r = run("check --data " + heart() + " --target NotAColumn");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("NotAColumn") != std::string::npos);
}

TEST_CASE("invalid engine name lists the valid engines") {
    const RunResult r = run("train --data " + heart() +
                            " --target HeartDisease --engines warp_drive");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("tree") != std::string::npos);
    CHECK(r.output.find("random_forest") != std::string::npos);
    CHECK(r.output.find("gbdt_depthwise") != std::string::npos);
    CHECK(r.output.find("gbdt_leafwise") != std::string::npos);
}

TEST_CASE("check reports issues on the bundled dataset and clean data cleanly") {
    const RunResult r = run("check --data " + heart() + " --target HeartDisease");
    CHECK(r.exit_code == 0);

    const RunResult j =
        run("check --data " + heart() + " --target HeartDisease --json");
    CHECK(j.exit_code == 0);
    CHECK(j.output.find("\"issues\"") != std::string::npos);

    const RunResult clean =
        run("check --data " + write_clean_csv().string() + " --target y");
    CHECK(clean.exit_code == 0);
    CHECK(clean.output.find("No issues detected.") != std::string::npos);
}

TEST_CASE("preprocess writes a transformed csv") {
    const fs::path out = fs::temp_directory_path() / "cli_prep.csv";
    const RunResult r = run("preprocess --data " + heart() +
                            " --target HeartDisease --drop-static --impute knn --out " +
                            out.string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out));
}

TEST_CASE("same-seed training runs agree on everything except timing") {
    const fs::path b1 = fs::temp_directory_path() / "cli_run1.forester-bundle";
    const fs::path b2 = fs::temp_directory_path() / "cli_run2.forester-bundle";
    const std::string common = "train --data " + heart() +
                               " --target HeartDisease --engines tree --random-n 1 "
                               "--bayes-budget 0 --seed 7 --out ";
    CHECK(run(common + b1.string()).exit_code == 0);
    CHECK(run(common + b2.string()).exit_code == 0);

    const auto e1 = forester::read_bundle_entries(b1.string());
    const auto e2 = forester::read_bundle_entries(b2.string());
    REQUIRE(e1.size() == e2.size());
    for (const auto& [name, data] : e1) {
        REQUIRE(e2.count(name) == 1);
        if (name == "timing.json") continue;  // wall-clock timings differ by run
        CHECK_MESSAGE(e2.at(name) == data, "entry differs: ", name);
    }
}

TEST_CASE("report, explain, and select run end to end on a bundle") {
    const fs::path bundle = fs::temp_directory_path() / "cli_e2e.forester-bundle";
    CHECK(run("train --data " + heart() +
              " --target HeartDisease --engines tree,random_forest --random-n 0 "
              "--bayes-budget 0 --seed 3 --out " +
              bundle.string())
              .exit_code == 0);

    const fs::path report = fs::temp_directory_path() / "cli_e2e_report.md";
    CHECK(run("report --bundle " + bundle.string() + " --out " + report.string())
              .exit_code == 0);
    CHECK(fs::exists(report));

    const RunResult ex = run("explain --bundle " + bundle.string() + " --json");
    CHECK(ex.exit_code == 0);
    CHECK(ex.output.find("mean_drop") != std::string::npos);

    const auto before = forester::load_output(bundle.string());
    const std::string keep = before.leaderboard("test").rows[0].model_name;
    const fs::path pruned = fs::temp_directory_path() / "cli_e2e_pruned.forester-bundle";
    CHECK(run("select --bundle " + bundle.string() + " --models " + keep + " --out " +
              pruned.string())
              .exit_code == 0);
    CHECK(forester::load_output(pruned.string()).models.size() == 1);
}
