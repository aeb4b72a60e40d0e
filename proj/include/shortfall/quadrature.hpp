#pragma once

#include <cstddef>
#include <functional>

#include "shortfall/scalar.hpp"

namespace shortfall {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    Vector<double> nodes;
    Vector<double> weights;
};

/// n-point rule: Golub-Welsch eigen-decomposition of the Jacobi matrix,
/// polished by Newton steps on P_n. Rules are cached per n.
const GaussLegendreRule& gauss_legendre(std::size_t n);

/// Integral of f over [a, b] with the given rule.
double integrate(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& rule);

}  // namespace shortfall
