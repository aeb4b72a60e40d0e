#include "shortfall/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include "shortfall/normal.hpp"
#include "shortfall/quadrature.hpp"

namespace shortfall {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform on (0, 1) from 53 random bits.
double open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

constexpr double kTruncation = 10.0;

// Integral of `density` over the standardized log-price range of each
// interval, clipped to [z_min, z_max].
template <typename Density>
double integrate_set(const BsMarket& m, const PriceSet& set, double floor_price, double z_min, double z_max,
                     std::size_t nodes, Density density) {
    const GaussLegendreRule& rule = gauss_legendre(nodes);
    const double vol = m.sigma * std::sqrt(m.T);
    auto to_z = [&](double price) {
        if (price <= 0.0) return -std::numeric_limits<double>::infinity();
        if (std::isinf(price)) return std::numeric_limits<double>::infinity();
        return (std::log(price / m.s) + 0.5 * vol * vol) / vol;
    };
    double total = 0.0;
    for (const auto& interval : set) {
        const double lower = std::max(interval.lower, floor_price);
        if (!(interval.upper > lower)) continue;
        const double a = std::max(to_z(lower), z_min);
        const double b = std::min(to_z(interval.upper), z_max);
        if (b > a) total += integrate(density, a, b, rule);
    }
    return total;
}

}  // namespace

double path_normal(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    const double u1 = open_unit(splitmix64(key + 2 * index));
    const double u2 = open_unit(splitmix64(key + 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

McEstimate mc_success_probability(const BsMarket& m, const PriceSet& set, const McConfig& config) {
    m.validate();
    if (config.paths == 0) throw DomainError("Monte Carlo needs at least one path");
    if (config.batch == 0) throw DomainError("Monte Carlo batch size must be positive");

    const double drift = (m.mu - 0.5 * m.sigma * m.sigma) * m.T;
    const double vol = m.sigma * std::sqrt(m.T);
    const std::uint64_t batches = (config.paths + config.batch - 1) / config.batch;
    std::vector<std::uint64_t> hits(batches, 0);
    std::atomic<std::uint64_t> next{0};

    auto worker = [&] {
        for (std::uint64_t b = next++; b < batches; b = next++) {
            const std::uint64_t begin = b * config.batch;
            const std::uint64_t end = std::min(config.paths, begin + config.batch);
            std::uint64_t count = 0;
            for (std::uint64_t i = begin; i < end; ++i) {
                const double terminal = m.s * std::exp(drift + vol * path_normal(config.seed, i));
                if (contains(set, terminal)) ++count;
            }
            hits[b] = count;
        }
    };
    const unsigned threads = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(std::min<std::uint64_t>(batches, 64))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    McEstimate out;
    out.paths = config.paths;
    for (std::uint64_t h : hits) out.hits += h;
    const double n = static_cast<double>(config.paths);
    out.estimate = static_cast<double>(out.hits) / n;
    out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
    return out;
}

double quadrature_budget(const BsMarket& m, const PriceSet& set, double kbar, std::size_t nodes) {
    m.validate();
    const double vol = m.sigma * std::sqrt(m.T);
    // (S(z) - Kbar) phi(z) = s phi(z - vol) - Kbar phi(z) under Q.
    auto density = [&](double z) { return m.s * normal_pdf(z - vol) - kbar * normal_pdf(z); };
    return integrate_set(m, set, kbar, -kTruncation, kTruncation + vol, nodes, density);
}

double quadrature_probability(const BsMarket& m, const PriceSet& set, std::size_t nodes) {
    m.validate();
    // z = W*_T / sqrt(T) has mean mu sqrt(T) / sigma under P.
    const double mean = m.mu * std::sqrt(m.T) / m.sigma;
    auto density = [&](double z) { return normal_pdf(z - mean); };
    return integrate_set(m, set, 0.0, mean - kTruncation, mean + kTruncation, nodes, density);
}

}  // namespace shortfall
