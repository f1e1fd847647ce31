#include "fsgauge/stats.hpp"

#include <algorithm>
#include <cmath>

#include "fsgauge/errors.hpp"

namespace fsgauge {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw_invalid("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double stddev(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw_invalid("pearson inputs differ in length");
  if (x.size() < 2) throw_invalid("pearson needs at least 2 points");
  if (constant(x) || constant(y)) throw_numerical("pearson correlation undefined: zero variance input");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw_numerical("pearson correlation undefined: zero variance input");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace fsgauge
