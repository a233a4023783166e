#pragma once

#include <span>

namespace dream {

/// Pearson correlation coefficient. Throws std::invalid_argument for fewer
/// than two points, mismatched lengths or a constant series.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Two-sided p-value of r under the null of no correlation (Student t with
/// n - 2 degrees of freedom). Needs n >= 3.
double pearson_p_value(double r, std::size_t n);

/// Geometric mean of positive values.
double gmean(std::span<const double> values);

}  // namespace dream
