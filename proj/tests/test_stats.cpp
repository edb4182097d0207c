#include <doctest.h>

#include <cmath>

#include "forester/frame.hpp"
#include "forester/rng.hpp"
#include "forester/stats.hpp"

using namespace forester;

TEST_CASE("quantile with linear interpolation") {
    std::vector<double> v = {1, 2, 3, 4};
    CHECK(quantile(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(v, 1.0) == doctest::Approx(4.0));
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("mean and median") {
    CHECK(mean({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(median({5, 1, 3}) == doctest::Approx(3.0));
    CHECK(median({4, 1, 3, 2}) == doctest::Approx(2.5));
}

TEST_CASE("pearson on exact linear relation") {
    const Frame f({make_numeric_column("x", {1, 2, 3, 4}),
                   make_numeric_column("y", {2, 4, 6, 8}),
                   make_numeric_column("z", {-1, -2, -3, -4})});
    CHECK(*pearson_complete(f, 0, 1) == doctest::Approx(1.0));
    CHECK(*pearson_complete(f, 0, 2) == doctest::Approx(-1.0));
}

TEST_CASE("pearson uses complete pairs only and rejects constants") {
    const Frame f({make_numeric_column("x", {1, 2, 3, 4}, {0, 1, 0, 0}),
                   make_numeric_column("y", {2, 9, 6, 8}, {0, 0, 0, 1}),
                   make_numeric_column("c", {5, 5, 5, 5})});
    // complete pairs are rows 0 and 2 only -> fewer than required
    CHECK(pearson_complete(f, 0, 1).has_value());
    CHECK_FALSE(pearson_complete(f, 0, 2).has_value());  // constant side
}

TEST_CASE("cramers v is 1 for identical categoricals and near 0 for independent") {
    std::vector<std::string> a, b, c;
    Rng rng(5);
    for (int i = 0; i < 400; ++i) {
        a.push_back(i % 2 ? "x" : "y");
        b.push_back(i % 2 ? "p" : "q");  // bijection of a
        c.push_back(rng.uniform() < 0.5 ? "u" : "v");
    }
    const Frame f({make_text_column("a", a), make_text_column("b", b),
                   make_text_column("c", c)});
    CHECK(*cramers_v(f, 0, 1) == doctest::Approx(1.0));
    CHECK(*cramers_v(f, 0, 2) < 0.2);
}

TEST_CASE("column_association skips mixed pairs") {
    const Frame f({make_numeric_column("x", {1, 2, 3}),
                   make_text_column("s", {"a", "b", "a"})});
    CHECK_FALSE(column_association(f, 0, 1).has_value());
}
