#include "shortfall/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace shortfall {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double x) {
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                          static_cast<double>(k);
        p0 = p1;
        p1 = pk;
    }
    const double derivative = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    return {p1, derivative};
}

GaussLegendreRule build_rule(std::size_t n) {
    if (n == 0) throw DomainError("quadrature rule needs at least one node");
    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<Eigen::Index>(n));
    rule.weights.resize(static_cast<Eigen::Index>(n));
    if (n == 1) {
        rule.nodes(0) = 0.0;
        rule.weights(0) = 2.0;
        return rule;
    }
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index k = 1; k < size; ++k) {
        const double kk = static_cast<double>(k);
        const double beta = kk / std::sqrt(4.0 * kk * kk - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < size; ++i) {
        double x = solver.eigenvalues()(i);
        for (int step = 0; step < 3; ++step) {
            const auto [p, dp] = legendre(n, x);
            x -= p / dp;
        }
        const auto [p, dp] = legendre(n, x);
        (void)p;
        rule.nodes(i) = x;
        rule.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendreRule>(build_rule(n));
    return *slot;
}

double integrate(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& rule) {
    if (!(b > a)) return 0.0;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) sum += rule.weights(i) * f(mid + half * rule.nodes(i));
    return half * sum;
}

}  // namespace shortfall
