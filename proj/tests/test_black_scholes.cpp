#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "shortfall/black_scholes.hpp"
#include "shortfall/verifier.hpp"

using namespace shortfall;

namespace {

const BsMarket kConcave{100.0, 0.02, 0.2, 1.0};
const BsMarket kConvex{100.0, 0.08, 0.2, 1.0};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// E^Q[1_set (S - Kbar)^+] with S lognormal under Q.
double oracle_budget(const BsMarket& m, const PriceSet& set, double kbar) {
    const double vol = m.sigma * std::sqrt(m.T);
    double total = 0.0;
    for (const auto& iv : set) {
        total += oracle::lognormal_expectation(
            m.s, -0.5 * vol * vol, vol, [&](double x) { return std::max(x - kbar, 0.0); }, std::max(iv.lower, kbar),
            iv.upper);
    }
    return total;
}

// P(S_T in set) with S lognormal under P.
double oracle_probability(const BsMarket& m, const PriceSet& set) {
    const double vol = m.sigma * std::sqrt(m.T);
    double total = 0.0;
    for (const auto& iv : set) {
        total += oracle::lognormal_expectation(
            m.s, (m.mu - 0.5 * m.sigma * m.sigma) * m.T, vol, [](double) { return 1.0; }, iv.lower, iv.upper);
    }
    return total;
}

}  // namespace

TEST_CASE("call and digital prices") {
    const double vol = 0.2;
    for (double k : {50.0, 90.0, 100.0, 120.0, 250.0}) {
        const double ref = oracle::lognormal_expectation(100.0, -0.5 * vol * vol, vol,
                                                         [&](double x) { return std::max(x - k, 0.0); }, k);
        CHECK(rel(price_call(kConcave, k), ref) < 1e-9);
        const double digital = oracle::lognormal_expectation(100.0, -0.5 * vol * vol, vol, [](double) { return 1.0; }, k);
        CHECK(price_digital(kConcave, k, 3.0) == doctest::Approx(3.0 * digital).epsilon(1e-10));
    }
    CHECK(price_call(kConcave, 0.0) == 100.0);
    CHECK(price_digital(kConcave, 0.0, 2.0) == 2.0);
    CHECK_THROWS_AS(price_call(kConcave, -1.0), DomainError);
    // Zero rate parity: C(K) - P(K) = s - K, with P(K) from the oracle.
    const double put = oracle::lognormal_expectation(100.0, -0.02, 0.2, [](double x) { return std::max(95.0 - x, 0.0); },
                                                     0.0, 95.0);
    CHECK(price_call(kConcave, 95.0) - put == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("classification") {
    CHECK(classify(kConcave) == BsCase::Concave);
    CHECK(classify(kConvex) == BsCase::Convex);
    CHECK(classify(BsMarket{100.0, 0.04, 0.2, 1.0}) == BsCase::Concave);
    CHECK_THROWS_AS(classify(BsMarket{100.0, 0.0, 0.2, 1.0}), CapabilityError);
    CHECK_THROWS_AS(classify(BsMarket{100.0, -0.1, 0.2, 1.0}), CapabilityError);
    CHECK_THROWS_AS(classify(BsMarket{0.0, 0.1, 0.2, 1.0}), DomainError);
    CHECK(classify(kConcave, 100.0, 0.0) == BsCase::Degenerate);
    CHECK(classify(kConcave, 100.0, 1e6) == BsCase::FullHedge);
}

TEST_CASE("concave example binds the budget and matches the oracles") {
    const auto loss = LossSpec<double>::quantile();
    const double x0 = 0.5 * price_call(kConcave, 100.0);
    const BsSolution sol = solve_black_scholes(kConcave, 100.0, loss, x0);
    REQUIRE(sol.regime == BsCase::Concave);
    REQUIRE(sol.c3.has_value());
    CHECK(*sol.c3 > 100.0);
    CHECK(rel(sol.budget_used, x0) < 1e-8);
    CHECK(rel(oracle_budget(kConcave, sol.success_set, 100.0), x0) < 1e-8);
    CHECK(rel(quadrature_budget(kConcave, sol.success_set, 100.0), x0) < 1e-6);
    CHECK(rel(oracle_probability(kConcave, sol.success_set), sol.success_probability) < 1e-8);
    CHECK(rel(price(kConcave, sol.decomposition), x0) < 1e-8);

    // Fixed seed; 4 standard errors keeps the false-alarm rate near 6e-5.
    const McEstimate mc = mc_success_probability(kConcave, sol.success_set, {200'000, 7});
    CHECK(std::abs(mc.estimate - sol.success_probability) < 4.0 * mc.std_error);
}

TEST_CASE("convex example: roots, budget, decomposition") {
    const auto loss = LossSpec<double>::quantile();
    const double x0 = 0.5 * price_call(kConvex, 100.0);
    const BsSolution sol = solve_black_scholes(kConvex, 100.0, loss, x0);
    REQUIRE(sol.regime == BsCase::Convex);
    REQUIRE(sol.c5.has_value());
    REQUIRE(sol.c6.has_value());
    REQUIRE(sol.c_bar.has_value());
    const double theta = kConvex.density_exponent();
    CHECK(*sol.c5 > 100.0);
    CHECK(*sol.c6 > *sol.c5);
    for (double root : {*sol.c5, *sol.c6}) {
        const double lhs = std::pow(root, theta);
        const double rhs = *sol.c_bar * (root - 100.0);
        CHECK(rel(lhs, rhs) <= 1e-9);
    }
    CHECK(sol.budget_monotone);
    CHECK(rel(sol.budget_used, x0) < 1e-8);
    CHECK(rel(oracle_budget(kConvex, sol.success_set, 100.0), x0) < 1e-8);
    CHECK(rel(quadrature_budget(kConvex, sol.success_set, 100.0), x0) < 1e-6);
    CHECK(rel(oracle_probability(kConvex, sol.success_set), sol.success_probability) < 1e-8);

    // Decomposition pays 1_set (S - Kbar)^+ pointwise.
    int mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const double x = 1e-3 + 400.0 * i / 9999.0;
        const double want = contains(sol.success_set, x) ? std::max(x - 100.0, 0.0) : 0.0;
        if (std::abs(payoff(sol.decomposition, x) - want) > 1e-9 * std::max(1.0, want)) ++mismatches;
    }
    CHECK(mismatches == 0);
    CHECK(rel(price(kConvex, sol.decomposition), x0) < 1e-8);

    const McEstimate mc = mc_success_probability(kConvex, sol.success_set, {200'000, 11});
    CHECK(std::abs(mc.estimate - sol.success_probability) < 4.0 * mc.std_error);
}

TEST_CASE("tangency is the minimum of x^theta / (x - Kbar)") {
    const double kbar = 104.0;
    const Tangency t = convex_tangency(kConvex, kbar);
    const double theta = kConvex.density_exponent();
    auto f = [&](double x) { return std::pow(x, theta) / (x - kbar); };
    CHECK(t.point == doctest::Approx(theta * kbar / (theta - 1.0)));
    CHECK(t.c_bar == doctest::Approx(f(t.point)).epsilon(1e-12));
    for (double step : {1e-3, 1e-2, 0.1, 0.5}) {
        CHECK(f(t.point * (1 + step)) >= t.c_bar);
        CHECK(f(kbar + (t.point - kbar) * (1 - step)) >= t.c_bar);
    }
    CHECK_THROWS_AS(convex_tangency(kConcave, kbar), PreconditionError);
    CHECK_THROWS_AS(convex_roots(kConvex, kbar, 0.5 * t.c_bar), NumericError);
}

TEST_CASE("zero modified strike in the convex case has only the upper root") {
    const RootPair roots = convex_roots(kConvex, 0.0, 250.0);
    CHECK(roots.c5 == 0.0);
    CHECK(rel(std::pow(roots.c6, 2.0), 250.0 * roots.c6) < 1e-12);
    const double x0 = 0.5 * kConvex.s;
    const BsSolution sol = solve_black_scholes(kConvex, 0.0, LossSpec<double>::quantile(), x0);
    REQUIRE(sol.regime == BsCase::Convex);
    CHECK(*sol.c5 == 0.0);
    CHECK(sol.success_set.size() == 1);
    CHECK(rel(oracle_budget(kConvex, sol.success_set, 0.0), x0) < 1e-8);
}

TEST_CASE("boundary regimes") {
    const auto loss = LossSpec<double>::power(0.5, 2.0);  // shifts the strike by 4
    const double full = price_call(kConcave, 104.0);
    const BsSolution hedge = solve_black_scholes(kConcave, 100.0, loss, full * 1.01);
    CHECK(hedge.regime == BsCase::FullHedge);
    CHECK(hedge.success_probability == 1.0);
    CHECK(hedge.budget_used == doctest::Approx(full));

    const BsSolution none = solve_black_scholes(kConvex, 100.0, loss, 0.0);
    CHECK(none.regime == BsCase::Degenerate);
    CHECK(none.budget_used == 0.0);
    CHECK(rel(none.success_probability, oracle_probability(kConvex, {PriceInterval{0.0, 104.0}})) < 1e-8);
    CHECK_THROWS_AS(solve_black_scholes(kConcave, 100.0, loss, -1.0), DomainError);
    CHECK_THROWS_AS(solve_black_scholes(BsMarket{100.0, -0.05, 0.2, 1.0}, 100.0, loss, 5.0), CapabilityError);
    CHECK_THROWS_AS(solve_concave(kConvex, 100.0, loss, 5.0), PreconditionError);
}

TEST_CASE("shortfall loss shifts the strike") {
    const auto loss = LossSpec<double>::power(0.5, 2.0);
    for (const BsMarket& m : {kConcave, kConvex}) {
        const double x0 = 4.0;
        const BsSolution shifted = solve_black_scholes(m, 100.0, loss, x0);
        const BsSolution direct = solve_black_scholes(m, 104.0, LossSpec<double>::quantile(), x0);
        CHECK(shifted.modified_strike == 104.0);
        CHECK(shifted.success_probability == direct.success_probability);
        CHECK(rel(oracle_budget(m, shifted.success_set, 104.0), x0) < 1e-8);
    }
}

TEST_CASE("alpha = 0 reproduces quantile hedging") {
    for (const BsMarket& m : {kConcave, kConvex}) {
        const double x0 = 3.0;
        const BsSolution a = solve_black_scholes(m, 100.0, LossSpec<double>::power(0.7, 0.0), x0);
        const BsSolution b = solve_black_scholes(m, 100.0, LossSpec<double>::quantile(), x0);
        CHECK(a.success_probability == doctest::Approx(b.success_probability).epsilon(1e-10));
        CHECK(a.modified_strike == 100.0);
    }
}

TEST_CASE("success probability is monotone in budget and alpha") {
    for (const BsMarket& m : {kConcave, kConvex, BsMarket{50.0, 0.3, 0.35, 2.0}}) {
        const double top = price_call(m, m.s);
        double last = -1.0;
        for (int i = 0; i <= 10; ++i) {
            const double p =
                solve_black_scholes(m, m.s, LossSpec<double>::quantile(), top * i / 10.0).success_probability;
            CHECK(p >= last - 1e-12);
            last = p;
        }
        last = -1.0;
        for (int i = 0; i <= 10; ++i) {
            const auto loss = LossSpec<double>::power(1.0, 2.0 * i);
            const double p = solve_black_scholes(m, m.s, loss, 0.3 * top).success_probability;
            CHECK(p >= last - 1e-12);
            last = p;
        }
    }
}

TEST_CASE("random markets bind the budget") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double sigma = 0.05 + 0.6 * u(rng);
        const BsMarket m{20.0 + 200.0 * u(rng), (0.01 + 3.0 * u(rng)) * sigma * sigma, sigma, 0.1 + 3.0 * u(rng)};
        const double strike = m.s * (0.5 + u(rng));
        const double x0 = price_call(m, strike) * (0.02 + 0.95 * u(rng));
        const BsSolution sol = solve_black_scholes(m, strike, LossSpec<double>::quantile(), x0);
        CHECK(rel(sol.budget_used, x0) < 1e-8);
        CHECK(rel(price(m, sol.decomposition), x0) < 1e-7);
        CHECK(sol.success_probability > 0.0);
        CHECK(sol.success_probability <= 1.0);  // far out-of-the-money calls round to 1
    }
}
