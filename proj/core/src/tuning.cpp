#include "forester/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "forester/errors.hpp"
#include "forester/rng.hpp"

namespace forester {

namespace {

// ---------------------------------------------------------------------------
// Hyperparams field access by dimension name

double get_numeric_param(const Hyperparams& p, const std::string& name) {
    if (name == "max_depth") return p.max_depth;
    if (name == "min_samples_leaf") return p.min_samples_leaf;
    if (name == "n_trees") return p.n_trees;
    if (name == "mtry") return p.mtry;
    if (name == "sample_fraction") return p.sample_fraction;
    if (name == "n_rounds") return p.n_rounds;
    if (name == "learning_rate") return p.learning_rate;
    if (name == "max_leaves") return p.max_leaves;
    if (name == "min_child_weight") return p.min_child_weight;
    if (name == "lambda") return p.lambda;
    if (name == "subsample") return p.subsample;
    if (name == "colsample") return p.colsample;
    throw DataError("unknown numeric parameter '" + name + "'");
}

void set_numeric_param(Hyperparams& p, const std::string& name, double v) {
    if (name == "max_depth") p.max_depth = static_cast<int>(v);
    else if (name == "min_samples_leaf") p.min_samples_leaf = static_cast<int>(v);
    else if (name == "n_trees") p.n_trees = static_cast<int>(v);
    else if (name == "mtry") p.mtry = static_cast<int>(v);
    else if (name == "sample_fraction") p.sample_fraction = v;
    else if (name == "n_rounds") p.n_rounds = static_cast<int>(v);
    else if (name == "learning_rate") p.learning_rate = v;
    else if (name == "max_leaves") p.max_leaves = static_cast<int>(v);
    else if (name == "min_child_weight") p.min_child_weight = v;
    else if (name == "lambda") p.lambda = v;
    else if (name == "subsample") p.subsample = v;
    else if (name == "colsample") p.colsample = v;
    else throw DataError("unknown numeric parameter '" + name + "'");
}

std::string get_choice_param(const Hyperparams& p, const std::string& name) {
    if (name == "criterion") {
        switch (p.criterion) {
            case Criterion::Gini: return "gini";
            case Criterion::Entropy: return "entropy";
            case Criterion::Variance: return "variance";
        }
    }
    if (name == "replace") return p.replace ? "true" : "false";
    throw DataError("unknown choice parameter '" + name + "'");
}

void set_choice_param(Hyperparams& p, const std::string& name, const std::string& option) {
    if (name == "criterion") {
        if (option == "gini") p.criterion = Criterion::Gini;
        else if (option == "entropy") p.criterion = Criterion::Entropy;
        else if (option == "variance") p.criterion = Criterion::Variance;
        else throw DataError("unknown criterion '" + option + "'");
    } else if (name == "replace") {
        p.replace = option == "true";
    } else {
        throw DataError("unknown choice parameter '" + name + "'");
    }
}

double warp(double v, const ParamDim& d) {
    if (d.log_scale) return (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo));
    return (v - d.lo) / (d.hi - d.lo);
}

double unwarp(double x, const ParamDim& d) {
    x = std::clamp(x, 0.0, 1.0);
    double v = d.log_scale
                   ? std::exp(std::log(d.lo) + x * (std::log(d.hi) - std::log(d.lo)))
                   : d.lo + x * (d.hi - d.lo);
    if (d.kind == ParamDim::Kind::Int) v = std::round(v);
    return std::clamp(v, d.lo, d.hi);
}

} // namespace

// ---------------------------------------------------------------------------
// ParamDim / ParamSpace

void ParamDim::validate() const {
    if (kind == Kind::Choice) {
        if (options.empty()) throw DataError("choice dimension '" + name + "' has no options");
        return;
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw DataError("dimension '" + name + "' has non-finite bounds");
    if (!(lo < hi)) throw DataError("dimension '" + name + "' requires low < high");
    if (log_scale && lo <= 0.0)
        throw DataError("dimension '" + name + "' uses log scale with non-positive bounds");
}

nlohmann::json ParamDim::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    switch (kind) {
        case Kind::Int: j["kind"] = "int"; break;
        case Kind::Real: j["kind"] = "real"; break;
        case Kind::Choice: j["kind"] = "choice"; break;
    }
    if (kind == Kind::Choice) {
        j["options"] = options;
    } else {
        j["lo"] = lo;
        j["hi"] = hi;
        j["log"] = log_scale;
    }
    return j;
}

ParamDim ParamDim::from_json(const nlohmann::json& j) {
    ParamDim d;
    d.name = j.at("name").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "int") d.kind = Kind::Int;
    else if (kind == "real") d.kind = Kind::Real;
    else if (kind == "choice") d.kind = Kind::Choice;
    else throw ParseError("unknown dimension kind '" + kind + "'");
    if (d.kind == Kind::Choice) {
        d.options = j.at("options").get<std::vector<std::string>>();
    } else {
        d.lo = j.at("lo").get<double>();
        d.hi = j.at("hi").get<double>();
        d.log_scale = j.value("log", false);
    }
    d.validate();
    return d;
}

ParamSpace ParamSpace::built_in() {
    using K = ParamDim::Kind;
    ParamSpace s;
    s.dims[EngineKind::Tree] = {
        {"max_depth", K::Int, 2, 30, false, {}},
        {"min_samples_leaf", K::Int, 1, 50, false, {}},
        {"criterion", K::Choice, 0, 1, false, {"gini", "entropy"}},
    };
    s.dims[EngineKind::RandomForest] = {
        {"n_trees", K::Int, 20, 500, true, {}},
        {"max_depth", K::Int, 2, 30, false, {}},
        {"min_samples_leaf", K::Int, 1, 50, false, {}},
        {"sample_fraction", K::Real, 0.3, 1.0, false, {}},
    };
    const std::vector<ParamDim> gbdt_common = {
        {"n_rounds", K::Int, 20, 500, true, {}},
        {"learning_rate", K::Real, 0.01, 0.3, true, {}},
        {"lambda", K::Real, 0.1, 10.0, true, {}},
        {"min_child_weight", K::Real, 0.1, 10.0, true, {}},
        {"subsample", K::Real, 0.5, 1.0, false, {}},
        {"colsample", K::Real, 0.5, 1.0, false, {}},
    };
    s.dims[EngineKind::GbdtDepthwise] = gbdt_common;
    s.dims[EngineKind::GbdtDepthwise].insert(s.dims[EngineKind::GbdtDepthwise].begin(),
                                             {"max_depth", K::Int, 2, 10, false, {}});
    s.dims[EngineKind::GbdtLeafwise] = gbdt_common;
    s.dims[EngineKind::GbdtLeafwise].insert(s.dims[EngineKind::GbdtLeafwise].begin(),
                                            {"max_leaves", K::Int, 7, 127, true, {}});
    return s;
}

const std::vector<ParamDim>& ParamSpace::for_engine(EngineKind engine) const {
    auto it = dims.find(engine);
    if (it == dims.end()) throw DataError("no parameter space for engine " + to_string(engine));
    return it->second;
}

nlohmann::json ParamSpace::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [engine, list] : dims) {
        nlohmann::json arr = nlohmann::json::array();
        for (const ParamDim& d : list) arr.push_back(d.to_json());
        j[to_string(engine)] = std::move(arr);
    }
    return j;
}

ParamSpace ParamSpace::from_json(const nlohmann::json& j) {
    ParamSpace s = built_in();
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto engine = engine_from_string(it.key());
        if (!engine) throw ParseError("unknown engine '" + it.key() + "' in parameter space");
        std::vector<ParamDim> list;
        for (const auto& jd : it.value()) list.push_back(ParamDim::from_json(jd));
        s.dims[*engine] = std::move(list);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Encoding

std::size_t encoded_width(const std::vector<ParamDim>& dims) {
    std::size_t w = 0;
    for (const ParamDim& d : dims)
        w += d.kind == ParamDim::Kind::Choice ? d.options.size() : 1;
    return w;
}

std::vector<double> encode_point(const std::vector<ParamDim>& dims, const Hyperparams& p) {
    std::vector<double> x;
    x.reserve(encoded_width(dims));
    for (const ParamDim& d : dims) {
        if (d.kind == ParamDim::Kind::Choice) {
            const std::string current = get_choice_param(p, d.name);
            for (const std::string& option : d.options)
                x.push_back(option == current ? 1.0 : 0.0);
        } else {
            x.push_back(std::clamp(warp(get_numeric_param(p, d.name), d), 0.0, 1.0));
        }
    }
    return x;
}

Hyperparams decode_point(const std::vector<ParamDim>& dims, const std::vector<double>& x,
                         Hyperparams base) {
    std::size_t at = 0;
    for (const ParamDim& d : dims) {
        if (d.kind == ParamDim::Kind::Choice) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < d.options.size(); ++i)
                if (x[at + i] > x[at + best]) best = i;
            set_choice_param(base, d.name, d.options[best]);
            at += d.options.size();
        } else {
            set_numeric_param(base, d.name, unwarp(x[at], d));
            at += 1;
        }
    }
    return base;
}

// ---------------------------------------------------------------------------
// Default and random candidates

std::vector<Candidate> default_candidates(const std::set<EngineKind>& engines) {
    if (engines.empty()) throw DataError("empty engine set");
    std::vector<Candidate> out;
    for (EngineKind e : engines)
        out.push_back({e, default_hyperparams(e), "default", std::nullopt});
    return out;
}

std::vector<Candidate> random_search(const std::set<EngineKind>& engines,
                                     const ParamSpace& space, int n_per_engine,
                                     std::uint64_t seed) {
    if (engines.empty()) throw DataError("empty engine set");
    if (n_per_engine < 0) throw DataError("n_per_engine must be non-negative");
    std::vector<Candidate> out;
    for (EngineKind e : engines) {
        const std::vector<ParamDim>& dims = space.for_engine(e);
        for (const ParamDim& d : dims) d.validate();
        Rng rng = Rng(seed).spawn(static_cast<std::uint64_t>(e));
        for (int i = 0; i < n_per_engine; ++i) {
            Hyperparams p = default_hyperparams(e);
            for (const ParamDim& d : dims) {
                if (d.kind == ParamDim::Kind::Choice) {
                    set_choice_param(p, d.name, d.options[rng.index(d.options.size())]);
                } else {
                    set_numeric_param(p, d.name, unwarp(rng.uniform(), d));
                }
            }
            out.push_back({e, p, "random_search", std::nullopt});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian process surrogate

namespace {

constexpr double kNoise = 1e-6;

Eigen::MatrixXd kernel_matrix(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b,
                              const std::vector<double>& ls, double amplitude) {
    Eigen::MatrixXd k(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < ls.size(); ++d) {
                const double diff = (a[i][d] - b[j][d]) / ls[d];
                s += diff * diff;
            }
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                amplitude * std::exp(-0.5 * s);
        }
    }
    return k;
}

struct GpFit {
    std::vector<double> length_scales;
    double amplitude = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd alpha;
    bool ok = false;
};

double log_marginal_likelihood(const std::vector<std::vector<double>>& x,
                               const Eigen::VectorXd& y, const std::vector<double>& ls,
                               double amplitude, double noise) {
    const Eigen::Index n = y.size();
    Eigen::MatrixXd k = kernel_matrix(x, x, ls, amplitude);
    k.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
    return -0.5 * y.dot(alpha) - log_det - 0.5 * n * std::log(2.0 * M_PI);
}

// Multi-start gradient-free maximization of the log marginal likelihood:
// 32 random restarts, each refined by accept-if-better perturbations.
GpFit fit_gp(const std::vector<std::vector<double>>& x, const Eigen::VectorXd& y, Rng rng) {
    const std::size_t dim = x.front().size();
    double var = 1.0;
    if (y.size() > 1) {
        const double m = y.mean();
        var = (y.array() - m).square().sum() / static_cast<double>(y.size());
        if (var <= 0.0 || !std::isfinite(var)) var = 1.0;
    }
    std::vector<double> best_ls(dim, 0.5);
    double best_amp = var;
    double best_lml =
        log_marginal_likelihood(x, y, best_ls, best_amp, kNoise * std::max(1.0, var));

    for (int restart = 0; restart < 32; ++restart) {
        std::vector<double> ls(dim);
        for (double& l : ls) l = std::exp(rng.uniform(std::log(0.05), std::log(2.0)));
        double amp = var * std::exp(rng.uniform(std::log(0.25), std::log(4.0)));
        double lml = log_marginal_likelihood(x, y, ls, amp, kNoise * std::max(1.0, var));
        for (int step = 0; step < 16; ++step) {
            std::vector<double> ls2 = ls;
            for (double& l : ls2)
                l = std::clamp(l * std::exp(0.3 * rng.normal()), 0.01, 10.0);
            const double amp2 = std::clamp(amp * std::exp(0.3 * rng.normal()), 1e-6 * var,
                                           1e6 * var);
            const double lml2 =
                log_marginal_likelihood(x, y, ls2, amp2, kNoise * std::max(1.0, var));
            if (lml2 > lml) {
                ls = std::move(ls2);
                amp = amp2;
                lml = lml2;
            }
        }
        if (lml > best_lml) {
            best_ls = ls;
            best_amp = amp;
            best_lml = lml;
        }
    }

    GpFit fit;
    fit.length_scales = best_ls;
    fit.amplitude = best_amp;
    Eigen::MatrixXd k = kernel_matrix(x, x, best_ls, best_amp);
    double noise = kNoise * std::max(1.0, var);
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::MatrixXd kn = k;
        kn.diagonal().array() += noise;
        fit.llt.compute(kn);
        if (fit.llt.info() == Eigen::Success) {
            fit.alpha = fit.llt.solve(y);
            fit.ok = true;
            break;
        }
        noise *= 10.0;
    }
    return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

} // namespace

GpPosterior gp_posterior(const std::vector<std::vector<double>>& points,
                         const std::vector<double>& values,
                         const std::vector<double>& length_scales, double amplitude,
                         double noise, const std::vector<std::vector<double>>& queries) {
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    Eigen::MatrixXd k = kernel_matrix(points, points, length_scales, amplitude);
    k.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw DataError("gp covariance not positive definite");
    const Eigen::VectorXd alpha = llt.solve(y);

    GpPosterior post;
    const Eigen::MatrixXd ks = kernel_matrix(queries, points, length_scales, amplitude);
    const Eigen::VectorXd mu = ks * alpha;
    const Eigen::MatrixXd v = llt.matrixL().solve(ks.transpose());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        post.mean.push_back(mu(static_cast<Eigen::Index>(q)));
        const double var =
            amplitude - v.col(static_cast<Eigen::Index>(q)).squaredNorm();
        post.stddev.push_back(std::sqrt(std::max(0.0, var)));
    }
    return post;
}

// ---------------------------------------------------------------------------
// Bayesian optimization

std::pair<Candidate, BayesState> bayes_opt(EngineKind engine, const ParamSpace& space,
                                           const TuneObjective& objective, int budget,
                                           int init_points, std::uint64_t seed) {
    if (init_points < 2) throw DataError("init_points must be at least 2");
    if (budget < init_points) throw DataError("budget must be at least init_points");
    const std::vector<ParamDim>& dims = space.for_engine(engine);
    for (const ParamDim& d : dims) d.validate();
    const std::size_t width = encoded_width(dims);
    const Hyperparams base = default_hyperparams(engine);

    BayesState state;
    auto worst_observed = [&]() {
        double worst = 0.0;
        bool any = false;
        for (double v : state.values) {
            if (!any || v < worst) worst = v;
            any = true;
        }
        return any ? worst : 0.0;
    };
    auto evaluate_at = [&](const std::vector<double>& x) {
        const Hyperparams p = decode_point(dims, x, base);
        Candidate cand{engine, p, "bayes_opt", std::nullopt};
        double v = objective(cand);
        if (!std::isfinite(v)) {
            v = worst_observed();
            state.warnings.push_back("objective returned a non-finite value; recorded as " +
                                     std::to_string(v));
        }
        state.points.push_back(x);
        state.values.push_back(v);
    };

    // Latin hypercube init; slot 0 carries the engine default point so the
    // tuned result can never fall below the default on this objective.
    {
        Rng rng = Rng(seed).spawn(1);
        std::vector<std::vector<double>> design(init_points, std::vector<double>(width));
        for (std::size_t d = 0; d < width; ++d) {
            std::vector<std::size_t> strata(init_points);
            std::iota(strata.begin(), strata.end(), 0);
            rng.shuffle(strata);
            for (int i = 0; i < init_points; ++i)
                design[i][d] = (static_cast<double>(strata[i]) + rng.uniform()) /
                               static_cast<double>(init_points);
        }
        design[0] = encode_point(dims, base);
        for (const auto& x : design) evaluate_at(x);
    }

    for (int iter = init_points; iter < budget; ++iter) {
        state.iterations += 1;
        Rng rng = Rng(seed).spawn(100 + iter);
        const Eigen::VectorXd raw = Eigen::Map<const Eigen::VectorXd>(
            state.values.data(), static_cast<Eigen::Index>(state.values.size()));
        const double mean_y = raw.mean();
        const Eigen::VectorXd y = raw.array() - mean_y;

        const GpFit fit = fit_gp(state.points, y, rng.spawn(0));
        state.length_scales = fit.length_scales;
        state.amplitude = fit.amplitude;

        // incumbent
        std::size_t best_i = 0;
        for (std::size_t i = 1; i < state.values.size(); ++i)
            if (state.values[i] > state.values[best_i]) best_i = i;

        // acquisition candidates: 1024 uniform + incumbent neighborhood
        std::vector<std::vector<double>> queries;
        for (int i = 0; i < 1024; ++i) {
            std::vector<double> x(width);
            for (double& v : x) v = rng.uniform();
            queries.push_back(std::move(x));
        }
        for (int i = 0; i < 64; ++i) {
            std::vector<double> x = state.points[best_i];
            for (double& v : x) v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
            queries.push_back(std::move(x));
        }

        std::vector<double> next = queries.front();
        if (fit.ok) {
            const Eigen::MatrixXd ks =
                kernel_matrix(queries, state.points, fit.length_scales, fit.amplitude);
            const Eigen::VectorXd mu = ks * fit.alpha;
            const Eigen::MatrixXd v = fit.llt.matrixL().solve(ks.transpose());
            const double f_star = y.maxCoeff();
            double best_ei = -1.0;
            for (std::size_t q = 0; q < queries.size(); ++q) {
                const Eigen::Index qi = static_cast<Eigen::Index>(q);
                const double var = fit.amplitude - v.col(qi).squaredNorm();
                const double sd = std::sqrt(std::max(1e-18, var));
                const double z = (mu(qi) - f_star) / sd;
                const double ei = (mu(qi) - f_star) * normal_cdf(z) + sd * normal_pdf(z);
                if (ei > best_ei) {
                    best_ei = ei;
                    next = queries[q];
                }
            }
        }
        evaluate_at(next);
    }

    std::size_t best_i = 0;
    for (std::size_t i = 1; i < state.values.size(); ++i)
        if (state.values[i] > state.values[best_i]) best_i = i;
    Candidate best{engine, decode_point(dims, state.points[best_i], base), "bayes_opt",
                   state.values[best_i]};
    return {best, state};
}

} // namespace forester
