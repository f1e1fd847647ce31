#pragma once

#include <vector>

namespace fsgauge {

/// Sample Pearson correlation. Throws NumericalError when either input has
/// zero variance and InvalidArgument for fewer than 2 points.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& x);

/// Population standard deviation (divides by n), as numpy's default.
double stddev(const std::vector<double>& x);

}  // namespace fsgauge
