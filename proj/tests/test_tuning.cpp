#include <doctest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/tuning.hpp"

using namespace forester;

namespace {

double num_param(const Candidate& c, const std::string& name) {
    if (name == "max_depth") return c.params.max_depth;
    if (name == "min_samples_leaf") return c.params.min_samples_leaf;
    if (name == "n_trees") return c.params.n_trees;
    if (name == "sample_fraction") return c.params.sample_fraction;
    if (name == "n_rounds") return c.params.n_rounds;
    if (name == "learning_rate") return c.params.learning_rate;
    if (name == "lambda") return c.params.lambda;
    if (name == "min_child_weight") return c.params.min_child_weight;
    if (name == "subsample") return c.params.subsample;
    if (name == "colsample") return c.params.colsample;
    if (name == "max_leaves") return c.params.max_leaves;
    FAIL("unknown dim ", name);
    return 0;
}

} // namespace

TEST_CASE("random search draws stay inside the declared bounds") {
    const ParamSpace space = ParamSpace::built_in();
    const std::vector<EngineKind> engine_list = all_engines();
    const std::set<EngineKind> engines(engine_list.begin(), engine_list.end());
    const auto cands = random_search(engines, space, 250, 31);
    CHECK(cands.size() == 1000);
    for (const Candidate& c : cands) {
        CHECK(c.origin == "random_search");
        for (const ParamDim& d : space.for_engine(c.engine)) {
            if (d.kind == ParamDim::Kind::Choice) continue;
            const double v = num_param(c, d.name);
            CHECK(v >= d.lo - 1e-9);
            CHECK(v <= d.hi + 1e-9);
        }
    }
}

TEST_CASE("random search is seed-deterministic and empty for n=0") {
    const ParamSpace space = ParamSpace::built_in();
    const std::set<EngineKind> engines = {EngineKind::Tree, EngineKind::GbdtLeafwise};
    const auto a = random_search(engines, space, 5, 7);
    const auto b = random_search(engines, space, 5, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].engine == b[i].engine);
        CHECK(a[i].params.to_json(a[i].engine) == b[i].params.to_json(b[i].engine));
    }
    CHECK(random_search(engines, space, 0, 7).empty());
    const auto c = random_search(engines, space, 5, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].params.to_json(a[i].engine) != c[i].params.to_json(c[i].engine))
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("default candidates dedupe engines and reject an empty set") {
    const auto cands = default_candidates({EngineKind::Tree, EngineKind::Tree,
                                           EngineKind::RandomForest});
    CHECK(cands.size() == 2);
    for (const Candidate& c : cands) CHECK(c.origin == "default");
    CHECK_THROWS_AS(default_candidates({}), DataError);
}

TEST_CASE("encode/decode is a bijection on in-range points") {
    const ParamSpace space = ParamSpace::built_in();
    for (EngineKind e : all_engines()) {
        const auto& dims = space.for_engine(e);
        Hyperparams p = default_hyperparams(e);
        const auto x = encode_point(dims, p);
        CHECK(x.size() == encoded_width(dims));
        for (double v : x) {
            CHECK(v >= -1e-9);
            CHECK(v <= 1.0 + 1e-9);
        }
        const Hyperparams q = decode_point(dims, x, default_hyperparams(e));
        const auto x2 = encode_point(dims, q);
        REQUIRE(x2.size() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(x2[i] == doctest::Approx(x[i]).epsilon(1e-6));
    }
}

TEST_CASE("gp posterior interpolates observations at negligible noise") {
    const std::vector<std::vector<double>> pts = {{0.1}, {0.4}, {0.8}};
    const std::vector<double> vals = {1.0, -0.5, 2.0};
    const GpPosterior post = gp_posterior(pts, vals, {0.3}, 1.5, 1e-10, pts);
    REQUIRE(post.mean.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(post.mean[i] == doctest::Approx(vals[i]).epsilon(1e-6));
        CHECK(post.stddev[i] < 1e-3);
    }
    // far from data the posterior reverts toward the prior mean with wide bands
    const GpPosterior far = gp_posterior(pts, vals, {0.05}, 1.5, 1e-10, {{0.99}});
    CHECK(far.stddev[0] > 0.5);
}

TEST_CASE("bayes_opt with budget == init_points is pure initial design") {
    int calls = 0;
    const auto [best, state] = bayes_opt(
        EngineKind::Tree, ParamSpace::built_in(),
        [&](const Candidate& c) {
            ++calls;
            return -std::abs(c.params.max_depth - 7.0);
        },
        6, 6, 5);
    CHECK(calls == 6);
    CHECK(state.points.size() == 6);
    CHECK(best.origin == "bayes_opt");
    CHECK(best.objective_value.has_value());
}

TEST_CASE("bayes_opt returns the running maximum and improves over init") {
    auto objective = [](const Candidate& c) {
        // smooth single-peak function of two tree dims
        const double d = (c.params.max_depth - 11.0) / 28.0;
        const double l = (c.params.min_samples_leaf - 13.0) / 49.0;
        return -(d * d + l * l);
    };
    const auto [best, state] =
        bayes_opt(EngineKind::Tree, ParamSpace::built_in(), objective, 25, 8, 3);
    REQUIRE(state.values.size() == 25);
    double max_all = state.values[0];
    for (double v : state.values) max_all = std::max(max_all, v);
    CHECK(*best.objective_value == doctest::Approx(max_all));
    double max_init = state.values[0];
    for (std::size_t i = 0; i < 8; ++i) max_init = std::max(max_init, state.values[i]);
    CHECK(max_all >= max_init);
}

TEST_CASE("bayes_opt evaluates the engine default point first") {
    bool default_seen = false;
    const Hyperparams def = default_hyperparams(EngineKind::RandomForest);
    bayes_opt(
        EngineKind::RandomForest, ParamSpace::built_in(),
        [&](const Candidate& c) {
            if (c.params.n_trees == def.n_trees && c.params.max_depth == def.max_depth &&
                c.params.min_samples_leaf == def.min_samples_leaf)
                default_seen = true;
            return 0.0;
        },
        5, 5, 12);
    CHECK(default_seen);
}

TEST_CASE("non-finite objective values become the worst observed with a warning") {
    int calls = 0;
    const auto [best, state] = bayes_opt(
        EngineKind::Tree, ParamSpace::built_in(),
        [&](const Candidate&) {
            ++calls;
            return calls == 3 ? std::nan("") : static_cast<double>(calls);
        },
        10, 5, 9);
    REQUIRE(state.values.size() == 10);
    for (double v : state.values) CHECK(std::isfinite(v));
    CHECK_FALSE(state.warnings.empty());
    CHECK(*best.objective_value > 3.0);
}

TEST_CASE("bayes_opt is deterministic per seed") {
    auto objective = [](const Candidate& c) {
        return -std::abs(c.params.learning_rate - 0.07);
    };
    const auto a =
        bayes_opt(EngineKind::GbdtDepthwise, ParamSpace::built_in(), objective, 15, 6, 42);
    const auto b =
        bayes_opt(EngineKind::GbdtDepthwise, ParamSpace::built_in(), objective, 15, 6, 42);
    CHECK(a.second.points == b.second.points);
    CHECK(a.second.values == b.second.values);
    CHECK(a.first.params.to_json(EngineKind::GbdtDepthwise) ==
          b.first.params.to_json(EngineKind::GbdtDepthwise));
}

TEST_CASE("param space json round trip merges over built-ins") {
    const ParamSpace builtin = ParamSpace::built_in();
    const ParamSpace back = ParamSpace::from_json(builtin.to_json());
    CHECK(back.to_json() == builtin.to_json());

    nlohmann::json partial;
    partial["tree"] = nlohmann::json::array();
    ParamDim d;
    d.name = "max_depth";
    d.kind = ParamDim::Kind::Int;
    d.lo = 3;
    d.hi = 5;
    partial["tree"].push_back(d.to_json());
    const ParamSpace merged = ParamSpace::from_json(partial);
    CHECK(merged.for_engine(EngineKind::Tree).size() == 1);
    CHECK(merged.for_engine(EngineKind::RandomForest).size() ==
          builtin.for_engine(EngineKind::RandomForest).size());
}

TEST_CASE("param dim validation rejects inverted bounds") {
    ParamDim d;
    d.name = "max_depth";
    d.kind = ParamDim::Kind::Int;
    d.lo = 10;
    d.hi = 2;
    CHECK_THROWS_AS(d.validate(), DataError);
    ParamDim log_zero;
    log_zero.name = "lambda";
    log_zero.lo = 0.0;
    log_zero.hi = 1.0;
    log_zero.log_scale = true;
    CHECK_THROWS_AS(log_zero.validate(), DataError);
}
