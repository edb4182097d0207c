#include <doctest.h>

#include <nlohmann/json.hpp>

#include "forester/data_check.hpp"
#include "forester/errors.hpp"
#include "forester/rng.hpp"

using namespace forester;

namespace {

Frame noise_frame(int n, int seed) {
    Rng rng(seed);
    std::vector<double> a(n), b(n), y(n);
    for (int i = 0; i < n; ++i) {
        a[i] = rng.uniform();
        b[i] = rng.uniform();
        y[i] = rng.uniform();
    }
    return Frame({make_numeric_column("a", a), make_numeric_column("b", b),
                  make_numeric_column("y", y)},
                 "y");
}

bool has_kind(const std::vector<DataIssue>& issues, IssueKind kind) {
    for (const DataIssue& i : issues)
        if (i.kind == kind) return true;
    return false;
}

} // namespace

TEST_CASE("duplicate columns are reported once per group") {
    const Frame f({make_numeric_column("a", {1, 2, 3}), make_numeric_column("b", {1, 2, 3}),
                   make_numeric_column("c", {1, 2, 3}), make_numeric_column("d", {9, 8, 7})});
    const auto issues = detect_duplicate_columns(f);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].subjects == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("a single differing missing cell breaks duplication") {
    const Frame f({make_numeric_column("a", {1, 2, 3}, {0, 0, 0}),
                   make_numeric_column("b", {1, 2, 3}, {0, 1, 0})});
    CHECK(detect_duplicate_columns(f).empty());
}

TEST_CASE("id-like detection by name token and by content") {
    const Frame by_name({make_numeric_column("user_id", {3, 3, 7})});
    CHECK(detect_id_like(by_name).size() == 1);

    const Frame by_content({make_numeric_column("ticket", {17, 3, 99, 42})});
    CHECK(detect_id_like(by_content).size() == 1);

    const Frame repeats({make_numeric_column("ticket", {17, 3, 17, 42})});
    CHECK(detect_id_like(repeats).empty());

    // distinct but non-integer values are not id-like
    const Frame reals({make_numeric_column("x", {1.5, 2.5, 3.5})});
    CHECK(detect_id_like(reals).empty());
}

TEST_CASE("static column threshold boundary at k=0.99") {
    std::vector<std::string> v99(100, "m"), v98(100, "m");
    v99[0] = "x";
    v98[0] = "x";
    v98[1] = "y";
    CHECK(detect_static(Frame({make_text_column("a", v99)}), 0.99).size() == 1);
    CHECK(detect_static(Frame({make_text_column("a", v98)}), 0.99).empty());
    CHECK(detect_static(Frame({make_text_column("a", std::vector<std::string>(5, "c"))}),
                        0.99)
              .size() == 1);
}

TEST_CASE("sparse column threshold at l=0.5") {
    auto col = [](int present, int missing) {
        std::vector<std::string> v(present + missing, "x");
        std::vector<char> m(present + missing, 0);
        for (int i = 0; i < missing; ++i) m[i] = 1;
        return make_text_column("s", v, m);
    };
    CHECK(detect_sparse(Frame({col(0, 10)}), 0.5).size() == 1);  // fully missing
    CHECK(detect_sparse(Frame({col(4, 6)}), 0.5).size() == 1);   // 40% present
    CHECK(detect_sparse(Frame({col(6, 4)}), 0.5).empty());       // 60% present
}

TEST_CASE("corrupted rows: missing target or mostly-missing row") {
    const Frame f({make_numeric_column("a", {1, 2, 3}, {0, 1, 0}),
                   make_numeric_column("b", {1, 2, 3}, {0, 1, 0}),
                   make_numeric_column("y", {1, 2, 3}, {0, 0, 1})},
                  "y");
    const auto issues = detect_corrupted_rows(f, "y", 0.5);
    REQUIRE(issues.size() == 2);
    CHECK(issues[0].subjects == std::vector<std::string>{"1"});
    CHECK(issues[1].subjects == std::vector<std::string>{"2"});
}

TEST_CASE("high correlation pairs flagged by |r|") {
    const Frame f({make_numeric_column("x", {1, 2, 3, 4, 5}),
                   make_numeric_column("double_x", {2, 4, 6, 8, 10}),
                   make_numeric_column("neg", {-1, -2, -3, -4, -5})});
    const auto issues = detect_high_correlation(f, 0.7);
    CHECK(issues.size() == 3);  // all three pairs perfectly correlated
    CHECK(std::abs(*issues[0].statistic) == doctest::Approx(1.0));
}

TEST_CASE("independent noise columns are not flagged at n=0.7") {
    CHECK(detect_high_correlation(noise_frame(1000, 3), 0.7).empty());
}

TEST_CASE("outlier detection with degenerate IQR") {
    std::vector<double> v(100, 0.0);
    v[99] = 1000.0;
    const auto issues = detect_outliers(Frame({make_numeric_column("x", v)}));
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].severity == Severity::Info);

    CHECK(detect_outliers(Frame({make_numeric_column("c", std::vector<double>(10, 5.0))}))
              .empty());
}

TEST_CASE("imbalance flagged above ratio 3") {
    auto labels = [](int pos, int neg) {
        std::vector<std::string> v;
        for (int i = 0; i < pos; ++i) v.push_back("p");
        for (int i = 0; i < neg; ++i) v.push_back("n");
        return Frame({make_text_column("y", v)}, "y");
    };
    CHECK(detect_imbalance(labels(50, 50), "y").empty());
    const auto issues = detect_imbalance(labels(80, 20), "y");
    REQUIRE(issues.size() == 1);
    CHECK(*issues[0].statistic == doctest::Approx(4.0));
}

TEST_CASE("regression targets yield no imbalance issue") {
    std::vector<double> y;
    for (int i = 0; i < 50; ++i) y.push_back(i * 1.37);
    const Frame f({make_numeric_column("y", y)}, "y");
    CHECK(detect_imbalance(f, "y").empty());
}

TEST_CASE("clean synthetic frame produces no removal-style issues") {
    const DataCheckReport report = check_data(noise_frame(500, 11), "y");
    for (const DataIssue& issue : report.issues) {
        CHECK(issue.kind != IssueKind::DuplicateColumns);
        CHECK(issue.kind != IssueKind::IdLikeColumn);
        CHECK(issue.kind != IssueKind::StaticColumn);
        CHECK(issue.kind != IssueKind::SparseColumn);
        CHECK(issue.kind != IssueKind::CorruptedRow);
        CHECK(issue.kind != IssueKind::HighCorrelationPair);
        CHECK(issue.kind != IssueKind::NumericOutliers);
    }
}

TEST_CASE("check_data excludes the target from column detectors") {
    // target is constant; must not appear as a static-column issue
    std::vector<std::string> y(20, "a");
    y[0] = "b";
    std::vector<double> x;
    for (int i = 0; i < 20; ++i) x.push_back(i);
    const Frame f({make_numeric_column("x", x), make_text_column("y", y)}, "y");
    for (const DataIssue& issue : check_data(f, "y").issues)
        if (issue.kind == IssueKind::StaticColumn)
            for (const std::string& s : issue.subjects) CHECK(s != "y");
}

TEST_CASE("threshold monotonicity for static detection") {
    std::vector<std::string> v(100, "m");
    v[0] = "x";
    v[1] = "y";  // modal share 0.98
    const Frame f({make_text_column("a", v)});
    CHECK(detect_static(f, 0.95).size() == 1);
    CHECK(detect_static(f, 0.99).empty());
}

TEST_CASE("report ordering is deterministic and json round trips") {
    const Frame f({make_numeric_column("id", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}),
                   make_numeric_column("a", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}),
                   make_numeric_column("b", {2, 4, 6, 8, 10, 12, 14, 16, 18, 20}),
                   make_text_column("y", {"p", "n", "p", "n", "p", "n", "p", "n", "p", "n"})},
                  "y");
    const DataCheckReport r1 = check_data(f, "y");
    const DataCheckReport r2 = check_data(f, "y");
    CHECK(r1.to_json() == r2.to_json());
    const DataCheckReport r3 = DataCheckReport::from_json(r1.to_json());
    CHECK(r3.to_json() == r1.to_json());
    CHECK_FALSE(r1.to_text().empty());
}

TEST_CASE("thresholds validate their range") {
    CheckThresholds t;
    t.k = 1.5;
    CHECK_THROWS_AS(t.validate(), DataError);
    CheckThresholds ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(CheckThresholds::from_json(ok.to_json()).k == doctest::Approx(ok.k));
}
