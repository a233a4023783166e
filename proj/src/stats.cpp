#include "dream/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>

namespace dream {

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("series lengths differ");
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("pearson needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) throw std::invalid_argument("p-value needs at least three points");
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double gmean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("gmean of nothing");
  double s = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw std::invalid_argument("gmean needs positive values");
    s += std::log(v);
  }
  return std::exp(s / static_cast<double>(values.size()));
}

}  // namespace dream
