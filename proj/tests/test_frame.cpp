#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/frame.hpp"
#include "forester/rng.hpp"

using namespace forester;

TEST_CASE("parse_csv builds a frame from a simple header csv") {
    const Frame f = parse_csv("a,b\n1,x\n2,y\n3,z\n");
    CHECK(f.n_rows() == 3);
    CHECK(f.n_cols() == 2);
    CHECK(f.column(0).name == "a");
    CHECK(f.column(1).name == "b");
    CHECK(f.text_at(1, 2) == "z");
}

TEST_CASE("missing markers are recognized case-insensitively") {
    const Frame f = parse_csv("a\nNA\nnan\nNULL\n\n1\n");
    CHECK(f.column(0).n_missing() == 4);
    CHECK(f.is_missing(0, 0));
    CHECK_FALSE(f.is_missing(0, 4));
}

TEST_CASE("ragged rows raise a parse error naming the row") {
    // rows of lengths 3 and 2: the short one is row 2 of the file
    CHECK_THROWS_WITH_AS(parse_csv("a,b,c\n4,5\n"), doctest::Contains("row 2"), ParseError);
    CHECK_THROWS_WITH_AS(parse_csv("a,b,c\n1,2,3\n4,5\n"),
                         doctest::Contains("row 3"), ParseError);
}

TEST_CASE("duplicate header names are rejected") {
    CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), ParseError);
}

TEST_CASE("quoted cells keep delimiters and escaped quotes") {
    const Frame f = parse_csv("a,b\n\"x,y\",\"he said \"\"hi\"\"\"\n");
    CHECK(f.text_at(0, 0) == "x,y");
    CHECK(f.text_at(1, 0) == "he said \"hi\"");
}

TEST_CASE("csv round trip preserves values and missingness") {
    const std::string src = "a,b,c\n1,x,\n2,,z\n3,y,w\n";
    const Frame f = parse_csv(src);
    const Frame again = parse_csv(to_csv(f));
    REQUIRE(again.n_rows() == f.n_rows());
    for (std::size_t c = 0; c < f.n_cols(); ++c) {
        for (std::size_t r = 0; r < f.n_rows(); ++r) {
            CHECK(again.is_missing(c, r) == f.is_missing(c, r));
            if (!f.is_missing(c, r)) CHECK(again.text_at(c, r) == f.text_at(c, r));
        }
    }
}

TEST_CASE("infer_types: all-parse column becomes numeric") {
    const Frame f = infer_types(parse_csv("a\n1\n2.5\nNA\n"));
    CHECK(f.column(0).kind == ColumnKind::Numeric);
    CHECK(f.number_at(0, 1) == doctest::Approx(2.5));
}

TEST_CASE("infer_types: one non-numeric cell keeps the column categorical") {
    const Frame f = infer_types(parse_csv("a\n1\nx\n"));
    CHECK(f.column(0).kind == ColumnKind::Categorical);
}

TEST_CASE("infer_types: fully-missing column stays categorical") {
    const Frame f = infer_types(parse_csv("a,b\nNA,1\nNA,2\n"));
    CHECK(f.column(0).kind == ColumnKind::Categorical);
    CHECK(f.column(1).kind == ColumnKind::Numeric);
}

TEST_CASE("infer_types is idempotent") {
    const Frame f = infer_types(parse_csv("a,b\n1,x\n2,y\n"));
    const Frame g = infer_types(f);
    for (std::size_t c = 0; c < f.n_cols(); ++c)
        CHECK(f.column(c).kind == g.column(c).kind);
}

TEST_CASE("detect_task: two levels is binary with sorted labels") {
    const Frame f = infer_types(parse_csv("y\nyes\nno\nyes\n"));
    const TaskInfo info = detect_task(f, "y");
    CHECK(info.type == TaskType::Binary);
    CHECK(info.labels == std::vector<std::string>{"no", "yes"});
    CHECK(info.positive_label == "yes");
}

TEST_CASE("detect_task: three levels is multiclass") {
    const Frame f = infer_types(parse_csv("y\na\nb\nc\na\n"));
    CHECK(detect_task(f, "y").type == TaskType::Multiclass);
}

TEST_CASE("detect_task: many distinct numeric values is regression") {
    std::string csv = "y\n";
    for (int i = 0; i < 500; ++i) csv += std::to_string(i) + ".5\n";
    const Frame f = infer_types(parse_csv(csv));
    CHECK(detect_task(f, "y").type == TaskType::Regression);
}

TEST_CASE("detect_task: constant target errors") {
    const Frame f = infer_types(parse_csv("y\na\na\na\n"));
    CHECK_THROWS_WITH_AS(detect_task(f, "y"), doctest::Contains("degenerate"), DataError);
}

TEST_CASE("detect_task: categorical target above the level limit errors") {
    std::string csv = "y\n";
    for (int i = 0; i < 30; ++i) csv += "level" + std::to_string(i) + "\n";
    const Frame f = infer_types(parse_csv(csv));
    CHECK_THROWS_AS(detect_task(f, "y"), DataError);
}

TEST_CASE("detect_task is invariant under row permutation") {
    const Frame f = infer_types(parse_csv("y\na\nb\nc\nb\na\n"));
    std::vector<std::size_t> perm = {4, 2, 0, 1, 3};
    const Frame g = f.select_rows(perm);
    CHECK(detect_task(f, "y").labels == detect_task(g, "y").labels);
}

namespace {

Frame numbered_frame(std::size_t n) {
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = static_cast<double>(i);
        b[i] = static_cast<double>(i % 2);
    }
    return Frame({make_numeric_column("a", a), make_numeric_column("b", b)});
}

} // namespace

TEST_CASE("split_frame: exact sizes via largest remainder") {
    const SplitSet s = split_frame(numbered_frame(10), {0.6, 0.2, 0.2}, 1, false);
    CHECK(s.train_idx.size() == 6);
    CHECK(s.test_idx.size() == 2);
    CHECK(s.valid_idx.size() == 2);
}

TEST_CASE("split_frame partitions the index range") {
    const SplitSet s = split_frame(numbered_frame(37), {0.6, 0.2, 0.2}, 9, false);
    std::set<std::size_t> all;
    for (auto& v : {s.train_idx, s.test_idx, s.valid_idx})
        for (std::size_t i : v) CHECK(all.insert(i).second);
    CHECK(all.size() == 37);
    CHECK(*all.rbegin() == 36);
}

TEST_CASE("split_frame is deterministic per seed") {
    const SplitSet a = split_frame(numbered_frame(50), {0.6, 0.2, 0.2}, 7, false);
    const SplitSet b = split_frame(numbered_frame(50), {0.6, 0.2, 0.2}, 7, false);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.test_idx == b.test_idx);
    CHECK(a.valid_idx == b.valid_idx);
    const SplitSet c = split_frame(numbered_frame(50), {0.6, 0.2, 0.2}, 8, false);
    CHECK(a.train_idx != c.train_idx);
}

TEST_CASE("stratified split keeps class shares within 5 points") {
    std::vector<std::string> y;
    std::vector<double> x;
    for (int i = 0; i < 100; ++i) {
        y.push_back(i < 50 ? "pos" : "neg");
        x.push_back(static_cast<double>(i));
    }
    Frame f({make_numeric_column("x", x), make_text_column("y", y)}, "y");
    const SplitSet s = split_frame(f, {0.6, 0.2, 0.2}, 3, true);
    for (const auto& idx : {s.train_idx, s.test_idx, s.valid_idx}) {
        double pos = 0;
        for (std::size_t i : idx) pos += f.text_at(1, i) == "pos" ? 1.0 : 0.0;
        const double share = pos / static_cast<double>(idx.size());
        CHECK(share == doctest::Approx(0.5).epsilon(0.1));
        CHECK(std::abs(share - 0.5) <= 0.05 + 1e-12);
    }
}

TEST_CASE("tiny stratum falls back to unstratified with a warning") {
    std::vector<std::string> y;
    std::vector<double> x;
    for (int i = 0; i < 20; ++i) {
        y.push_back(i < 2 ? "rare" : "common");
        x.push_back(static_cast<double>(i));
    }
    Frame f({make_numeric_column("x", x), make_text_column("y", y)}, "y");
    const SplitSet s = split_frame(f, {0.6, 0.2, 0.2}, 3, true);
    CHECK_FALSE(s.stratified);
    CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("split_frame rejects bad ratios and tiny frames") {
    CHECK_THROWS_AS(split_frame(numbered_frame(20), {0.5, 0.2, 0.2}, 1, false), DataError);
    CHECK_THROWS_AS(split_frame(numbered_frame(5), {0.6, 0.2, 0.2}, 1, false), DataError);
}

TEST_CASE("SplitSet json round trip") {
    const SplitSet s = split_frame(numbered_frame(25), {0.6, 0.2, 0.2}, 11, false);
    const SplitSet t = SplitSet::from_json(s.to_json());
    CHECK(t.train_idx == s.train_idx);
    CHECK(t.test_idx == s.test_idx);
    CHECK(t.valid_idx == s.valid_idx);
    CHECK(t.seed == s.seed);
    CHECK(t.ratios == s.ratios);
}

TEST_CASE("frame accessors report reads to an attached probe") {
    const Frame f = numbered_frame(10);
    auto probe = std::make_shared<AccessProbe>();
    f.set_probe(probe);
    FrameView view(f, {3, 7});
    (void)view.number_at(0, 0);
    (void)view.number_at(0, 1);
    CHECK(probe->saw_any_of({3}));
    CHECK(probe->saw_any_of({7}));
    CHECK_FALSE(probe->saw_any_of({0, 1, 2, 4, 5, 6, 8, 9}));
}

TEST_CASE("frame column operations") {
    const Frame f = infer_types(parse_csv("a,b,c\n1,2,3\n4,5,6\n"));
    const Frame g = f.drop_columns({"b"});
    CHECK(g.column_names() == std::vector<std::string>{"a", "c"});
    const Frame h = f.select_columns({"c", "a"});
    CHECK(h.column_names() == std::vector<std::string>{"c", "a"});
    CHECK_THROWS_AS((void)f.column("nope"), DataError);
    CHECK_THROWS_AS(Frame({make_numeric_column("x", {1}), make_numeric_column("x", {2})}),
                    DataError);
}

TEST_CASE("rng streams are deterministic and spawn is independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng parent(42);
    Rng child1 = parent.spawn(1);
    Rng child2 = parent.spawn(2);
    CHECK(child1.next_u64() != child2.next_u64());
    // spawning does not advance the parent
    Rng parent2(42);
    (void)parent2.spawn(1);
    Rng parent3(42);
    CHECK(parent2.next_u64() == parent3.next_u64());
}

TEST_CASE("rng uniform_int covers the inclusive range") {
    Rng r(7);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::int64_t v = r.uniform_int(2, 5);
        CHECK(v >= 2);
        CHECK(v <= 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 4);
}
