#include "forester/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "forester/errors.hpp"
#include "forester/frame.hpp"

namespace forester {

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw DataError("mean of empty sample");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::optional<double> pearson_complete(const Frame& frame, std::size_t col_a,
                                       std::size_t col_b) {
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        if (frame.is_missing(col_a, r) || frame.is_missing(col_b, r)) continue;
        xs.push_back(frame.number_at(col_a, r));
        ys.push_back(frame.number_at(col_b, r));
    }
    if (xs.size() < 2) return std::nullopt;
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::optional<double> cramers_v(const Frame& frame, std::size_t col_a, std::size_t col_b) {
    std::map<std::string, std::size_t> levels_a, levels_b;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        if (frame.is_missing(col_a, r) || frame.is_missing(col_b, r)) continue;
        const auto a = levels_a.emplace(frame.text_at(col_a, r), levels_a.size()).first->second;
        const auto b = levels_b.emplace(frame.text_at(col_b, r), levels_b.size()).first->second;
        pairs.emplace_back(a, b);
    }
    const std::size_t n = pairs.size();
    const std::size_t ra = levels_a.size(), cb = levels_b.size();
    if (n < 2 || ra < 2 || cb < 2) return std::nullopt;

    std::vector<double> table(ra * cb, 0.0), row_sum(ra, 0.0), col_sum(cb, 0.0);
    for (auto [a, b] : pairs) {
        table[a * cb + b] += 1.0;
        row_sum[a] += 1.0;
        col_sum[b] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t a = 0; a < ra; ++a) {
        for (std::size_t b = 0; b < cb; ++b) {
            const double expected = row_sum[a] * col_sum[b] / static_cast<double>(n);
            if (expected > 0.0) {
                const double d = table[a * cb + b] - expected;
                chi2 += d * d / expected;
            }
        }
    }
    const double denom = static_cast<double>(n) * static_cast<double>(std::min(ra, cb) - 1);
    return std::sqrt(chi2 / denom);
}

std::optional<double> column_association(const Frame& frame, std::size_t col_a,
                                         std::size_t col_b) {
    const ColumnKind ka = frame.column(col_a).kind;
    const ColumnKind kb = frame.column(col_b).kind;
    if (ka == ColumnKind::Numeric && kb == ColumnKind::Numeric)
        return pearson_complete(frame, col_a, col_b);
    if (ka == ColumnKind::Categorical && kb == ColumnKind::Categorical)
        return cramers_v(frame, col_a, col_b);
    return std::nullopt;
}

} // namespace forester
