#include "shortfall/normal.hpp"

#include <cmath>
#include <numbers>

namespace shortfall {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

}  // namespace shortfall
