#pragma once

namespace shortfall {

// Standard normal distribution function, via erfc so the lower tail keeps
// full relative precision.
double normal_cdf(double x);

double normal_pdf(double x);

}  // namespace shortfall
