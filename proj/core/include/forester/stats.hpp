#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace forester {

class Frame;

// Linear-interpolation quantile of a non-empty sample, q in [0,1].
double quantile(std::vector<double> values, double q);

double mean(const std::vector<double>& values);
double median(std::vector<double> values);

// Pearson correlation over rows where both columns are present.
// nullopt when fewer than 2 complete pairs or either side is constant.
std::optional<double> pearson_complete(const Frame& frame, std::size_t col_a, std::size_t col_b);

// Cramer's V association between two categorical columns (complete pairs).
std::optional<double> cramers_v(const Frame& frame, std::size_t col_a, std::size_t col_b);

// Correlation used uniformly by the data check and the correlated-feature
// removal: Pearson for numeric-numeric, Cramer's V for categorical pairs,
// nullopt for mixed pairs (skipped).
std::optional<double> column_association(const Frame& frame, std::size_t col_a,
                                         std::size_t col_b);

} // namespace forester
