#include "ralab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "ralab/errors.hpp"

namespace ralab {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw EmptyList();
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw EmptyList();
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values) {
    const double mu = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace ralab
