#pragma once

// Closed-form success sets for a European call in the Black-Scholes model
// with zero interest rate. The density dP/dQ is proportional to S_T^(mu/sigma^2),
// so the optimal set compares that power with a multiple of (S_T - Kbar)^+:
//
//   mu <= sigma^2 (concave power)  ->  {S_T <= c3}
//   mu >  sigma^2 (convex power)   ->  {S_T < c5} u {S_T > c6}
//
// where Kbar = K + u^{-1}(alpha) and the constants make the budget bind.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shortfall/loss.hpp"

namespace shortfall {

struct BsMarket {
    double s = 0.0;      // initial price
    double mu = 0.0;     // drift
    double sigma = 0.0;  // volatility
    double T = 0.0;      // horizon

    void validate() const;

    // Exponent mu / sigma^2 of the density in S_T.
    double density_exponent() const { return mu / (sigma * sigma); }

    bool operator==(const BsMarket&) const = default;
};

enum class BsCase { Concave, Convex, FullHedge, Degenerate };

std::string to_string(BsCase c);

/// A lower set (0, upper] when lower == 0, otherwise the open upper set
/// (lower, upper) with upper = +inf.
struct PriceInterval {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();

    bool contains(double price) const { return (lower <= 0.0 || price > lower) && price <= upper; }
    bool operator==(const PriceInterval&) const = default;
};

using PriceSet = std::vector<PriceInterval>;

bool contains(const PriceSet& set, double price);

enum class InstrumentKind { Call, Digital };

/// weight x instrument; a digital pays `cash` when S_T > strike.
struct DecompositionEntry {
    InstrumentKind kind = InstrumentKind::Call;
    double strike = 0.0;
    double cash = 0.0;
    double weight = 0.0;

    bool operator==(const DecompositionEntry&) const = default;
};

using Decomposition = std::vector<DecompositionEntry>;

struct BsSolution {
    BsCase regime = BsCase::Concave;
    double modified_strike = 0.0;
    double x0 = 0.0;
    std::optional<double> c3, c4, c5, c6, c7, c8, c_bar;
    double success_probability = 0.0;
    double budget_used = 0.0;
    PriceSet success_set;
    Decomposition decomposition;
    int iterations = 0;
    bool budget_monotone = true;  // convex case: budget decreased in cbar at every probe
};

/// s Phi(d+) - K Phi(d-); returns s for a zero strike.
double price_call(const BsMarket& market, double strike);

/// cash * Q(S_T > strike).
double price_digital(const BsMarket& market, double strike, double cash);

double price(const BsMarket& market, const Decomposition& decomposition);

/// Terminal payoff of the decomposition at price S_T.
double payoff(const Decomposition& decomposition, double terminal_price);

/// Concave or Convex from mu and sigma. Throws CapabilityError for mu <= 0.
BsCase classify(const BsMarket& market);

/// Includes the boundary regimes: FullHedge when x0 covers the shifted call,
/// Degenerate when x0 = 0.
BsCase classify(const BsMarket& market, double modified_strike, double x0);

/// W*_T level c with c_price = s exp(sigma c - sigma^2 T / 2), and back.
double wstar_level(const BsMarket& market, double price_level);
double price_level(const BsMarket& market, double wstar);

/// E^Q[1{S_T <= c3} (S_T - Kbar)^+] with c3 given through c4.
double concave_budget(const BsMarket& market, double modified_strike, double c4);

/// E^Q[1{S_T < c5 or S_T > c6} (S_T - Kbar)^+] with c5, c6 given through c7, c8.
double convex_budget(const BsMarket& market, double modified_strike, double c7, double c8);

/// Point x* = theta Kbar / (theta - 1) and value cbar* = x*^theta / (x* - Kbar)
/// where x^theta / (x - Kbar) is minimal on (Kbar, inf); theta = mu / sigma^2 > 1.
struct Tangency {
    double point = 0.0;
    double c_bar = 0.0;
};
Tangency convex_tangency(const BsMarket& market, double modified_strike);

/// The two solutions c5 < c6 of x^theta = cbar (x - Kbar) on (Kbar, inf) for
/// cbar above the tangency value. With Kbar = 0 only c6 exists and c5 = 0.
struct RootPair {
    double c5 = 0.0;
    double c6 = 0.0;
};
RootPair convex_roots(const BsMarket& market, double modified_strike, double c_bar);

BsSolution solve_concave(const BsMarket& market, double strike, const LossSpec<double>& loss, double x0);
BsSolution solve_convex(const BsMarket& market, double strike, const LossSpec<double>& loss, double x0);

/// Dispatches on classify(); boundary regimes are solved directly.
BsSolution solve_black_scholes(const BsMarket& market, double strike, const LossSpec<double>& loss, double x0);

}  // namespace shortfall
