#pragma once

#include <vector>

namespace ralab {

/// Nearest-rank percentile: sort ascending, take element ceil(p/100 * n)
/// (1-based, clamped to [1, n]). Throws EmptyList.
double percentile(std::vector<double> values, double p);

double mean(const std::vector<double>& values);

/// Population standard deviation (divide by n).
double population_std(const std::vector<double>& values);

}  // namespace ralab
