#include "shortfall/black_scholes.hpp"

#include <cmath>
#include <sstream>

#include "shortfall/normal.hpp"

namespace shortfall {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kBracketTolerance = 1e-12;

double sqrt_t(const BsMarket& m) { return std::sqrt(m.T); }

// P(W*_T <= c) under P, where W*_T ~ N(mu T / sigma, T).
double prob_wstar_below(const BsMarket& m, double c) {
    return normal_cdf((c - m.mu / m.sigma * m.T) / sqrt_t(m));
}

std::string describe(const BsMarket& m, double kbar, double x0) {
    std::ostringstream out;
    out.precision(17);
    out << "s=" << m.s << " mu=" << m.mu << " sigma=" << m.sigma << " T=" << m.T << " Kbar=" << kbar
        << " x0=" << x0;
    return out.str();
}

BsSolution full_hedge(const BsMarket& m, double kbar, double x0) {
    BsSolution out;
    out.regime = BsCase::FullHedge;
    out.modified_strike = kbar;
    out.x0 = x0;
    out.success_probability = 1.0;
    out.budget_used = price_call(m, kbar);
    out.success_set = {PriceInterval{}};
    out.decomposition = {{InstrumentKind::Call, kbar, 0.0, 1.0}};
    return out;
}

// Zero budget: only outcomes where the shifted claim vanishes succeed.
BsSolution degenerate(const BsMarket& m, double kbar) {
    BsSolution out;
    out.regime = BsCase::Degenerate;
    out.x0 = 0.0;
    out.modified_strike = kbar;
    out.c3 = kbar;
    out.c4 = kbar > 0.0 ? wstar_level(m, kbar) : -std::numeric_limits<double>::infinity();
    out.success_probability = prob_wstar_below(m, *out.c4);
    out.budget_used = 0.0;
    if (kbar > 0.0) out.success_set = {PriceInterval{0.0, kbar}};
    return out;
}

void require_budget(double x0) {
    if (!(x0 >= 0.0) || !std::isfinite(x0)) throw DomainError("budget x0 must be a nonnegative number");
}

// Log-gap theta ln x - ln(x - Kbar) - ln cbar; positive means x is in the success set.
double log_gap(double theta, double kbar, double log_cbar, double x) {
    return theta * std::log(x) - std::log(x - kbar) - log_cbar;
}

// Bisection down to adjacent doubles; `positive_at_lo` tells which side has g > 0.
template <typename Gap>
double bisect_root(Gap gap, double lo, double hi, bool positive_at_lo) {
    for (int i = 0; i < 2 * kMaxIterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const bool positive = gap(mid) > 0.0;
        if (positive == positive_at_lo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double glo = std::abs(gap(lo));
    const double ghi = std::abs(gap(hi));
    if (!std::isfinite(glo)) return hi;
    if (!std::isfinite(ghi)) return lo;
    return glo <= ghi ? lo : hi;
}

}  // namespace

void BsMarket::validate() const {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("initial price s must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("volatility sigma must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon T must be positive");
    if (!std::isfinite(mu)) throw DomainError("drift mu must be finite");
}

std::string to_string(BsCase c) {
    switch (c) {
        case BsCase::Concave: return "Concave";
        case BsCase::Convex: return "Convex";
        case BsCase::FullHedge: return "FullHedge";
        case BsCase::Degenerate: return "Degenerate";
    }
    return "unknown";
}

bool contains(const PriceSet& set, double price) {
    for (const auto& interval : set) {
        if (interval.contains(price)) return true;
    }
    return false;
}

double price_call(const BsMarket& m, double strike) {
    if (strike < 0.0) throw DomainError("call strike must be nonnegative");
    if (strike == 0.0) return m.s;
    if (std::isinf(strike)) return 0.0;
    const double vol = m.sigma * sqrt_t(m);
    const double d_plus = (std::log(m.s / strike) + 0.5 * vol * vol) / vol;
    return m.s * normal_cdf(d_plus) - strike * normal_cdf(d_plus - vol);
}

double price_digital(const BsMarket& m, double strike, double cash) {
    if (strike <= 0.0) return cash;
    if (std::isinf(strike)) return 0.0;
    const double vol = m.sigma * sqrt_t(m);
    const double d_minus = (std::log(m.s / strike) - 0.5 * vol * vol) / vol;
    return cash * normal_cdf(d_minus);
}

double price(const BsMarket& m, const Decomposition& decomposition) {
    double total = 0.0;
    for (const auto& e : decomposition) {
        total += e.weight * (e.kind == InstrumentKind::Call ? price_call(m, e.strike)
                                                            : price_digital(m, e.strike, e.cash));
    }
    return total;
}

double payoff(const Decomposition& decomposition, double terminal_price) {
    double total = 0.0;
    for (const auto& e : decomposition) {
        const double leg = e.kind == InstrumentKind::Call ? std::max(terminal_price - e.strike, 0.0)
                                                          : (terminal_price > e.strike ? e.cash : 0.0);
        total += e.weight * leg;
    }
    return total;
}

BsCase classify(const BsMarket& m) {
    m.validate();
    if (m.mu <= 0.0) {
        throw CapabilityError("drift mu <= 0 is not supported (the success-set shape is not covered)");
    }
    return m.mu <= m.sigma * m.sigma ? BsCase::Concave : BsCase::Convex;
}

BsCase classify(const BsMarket& m, double kbar, double x0) {
    const BsCase shape = classify(m);
    require_budget(x0);
    if (x0 >= price_call(m, kbar)) return BsCase::FullHedge;
    if (x0 == 0.0) return BsCase::Degenerate;
    return shape;
}

double wstar_level(const BsMarket& m, double level) {
    if (level <= 0.0) return -std::numeric_limits<double>::infinity();
    return (std::log(level / m.s) + 0.5 * m.sigma * m.sigma * m.T) / m.sigma;
}

double price_level(const BsMarket& m, double wstar) {
    return m.s * std::exp(m.sigma * wstar - 0.5 * m.sigma * m.sigma * m.T);
}

double concave_budget(const BsMarket& m, double kbar, double c4) {
    if (price_level(m, c4) <= kbar) return 0.0;
    const double rt = sqrt_t(m);
    return price_call(m, kbar) - m.s * normal_cdf((-c4 + m.sigma * m.T) / rt) + kbar * normal_cdf(-c4 / rt);
}

double convex_budget(const BsMarket& m, double kbar, double c7, double c8) {
    const double rt = sqrt_t(m);
    const double vol = m.sigma * rt;
    return price_call(m, kbar) - m.s * normal_cdf(-c7 / rt + vol) + m.s * normal_cdf(-c8 / rt + vol) +
           kbar * (normal_cdf(-c7 / rt) - normal_cdf(-c8 / rt));
}

Tangency convex_tangency(const BsMarket& m, double kbar) {
    const double theta = m.density_exponent();
    if (!(theta > 1.0)) throw PreconditionError("tangency needs mu > sigma^2");
    if (kbar == 0.0) return {0.0, 0.0};
    const double point = theta * kbar / (theta - 1.0);
    return {point, std::exp(theta * std::log(point) - std::log(kbar / (theta - 1.0)))};
}

RootPair convex_roots(const BsMarket& m, double kbar, double c_bar) {
    const double theta = m.density_exponent();
    const Tangency tangency = convex_tangency(m, kbar);
    if (!(c_bar >= tangency.c_bar) || !(c_bar > 0.0)) {
        throw NumericError("cbar below the tangency value has no real roots");
    }
    const double log_cbar = std::log(c_bar);
    auto gap = [&](double x) { return log_gap(theta, kbar, log_cbar, x); };

    RootPair roots;
    // Upper root: g <= 0 at the tangency point, g -> +inf as x -> inf.
    double lo = tangency.point;
    double hi = tangency.point > 0.0 ? 2.0 * tangency.point : 1.0;
    int guard = 0;
    while (gap(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 2000) throw NumericError("upper root of the convex gap could not be bracketed");
    }
    roots.c6 = bisect_root(gap, lo, hi, false);
    // Lower root: g -> +inf as x -> Kbar+, g <= 0 at the tangency point.
    roots.c5 = kbar == 0.0 ? 0.0 : bisect_root(gap, kbar, tangency.point, true);
    return roots;
}

BsSolution solve_concave(const BsMarket& m, double strike, const LossSpec<double>& loss, double x0) {
    if (classify(m) != BsCase::Concave) throw PreconditionError("solve_concave needs mu <= sigma^2");
    require_budget(x0);
    const double kbar = strike + inverse_threshold(loss);
    const double full_price = price_call(m, kbar);
    if (x0 >= full_price) return full_hedge(m, kbar, x0);
    if (x0 == 0.0) return degenerate(m, kbar);

    auto budget = [&](double c4) { return concave_budget(m, kbar, c4); };
    const double rt = sqrt_t(m);
    double lo = kbar > 0.0 ? wstar_level(m, kbar) : -10.0 * rt;
    int guard = 0;
    while (budget(lo) > x0) {
        lo -= 10.0 * rt * (1 << std::min(guard, 20));
        if (++guard > kMaxIterations) throw NumericError("concave bracket (lower) failed: " + describe(m, kbar, x0));
    }
    double step = rt;
    double hi = lo + step;
    guard = 0;
    while (budget(hi) < x0) {
        lo = hi;
        step *= 2.0;
        hi += step;
        if (++guard > kMaxIterations) throw NumericError("concave bracket (upper) failed: " + describe(m, kbar, x0));
    }

    BsSolution out;
    int it = 0;
    while (hi - lo > kBracketTolerance * std::max(1.0, std::abs(hi)) && it < kMaxIterations) {
        const double mid = 0.5 * (lo + hi);
        (budget(mid) < x0 ? lo : hi) = mid;
        ++it;
    }
    const double c4 = 0.5 * (lo + hi);
    const double c3 = price_level(m, c4);

    out.regime = BsCase::Concave;
    out.modified_strike = kbar;
    out.x0 = x0;
    out.c3 = c3;
    out.c4 = c4;
    out.iterations = it;
    out.success_probability = prob_wstar_below(m, c4);
    out.budget_used = budget(c4);
    out.success_set = {PriceInterval{0.0, c3}};
    out.decomposition = {
        {InstrumentKind::Call, kbar, 0.0, 1.0},
        {InstrumentKind::Call, c3, 0.0, -1.0},
        {InstrumentKind::Digital, c3, c3 - kbar, -1.0},
    };
    return out;
}

BsSolution solve_convex(const BsMarket& m, double strike, const LossSpec<double>& loss, double x0) {
    if (classify(m) != BsCase::Convex) throw PreconditionError("solve_convex needs mu > sigma^2");
    require_budget(x0);
    const double kbar = strike + inverse_threshold(loss);
    const double full_price = price_call(m, kbar);
    if (x0 >= full_price) return full_hedge(m, kbar, x0);
    if (x0 == 0.0) return degenerate(m, kbar);

    const Tangency tangency = convex_tangency(m, kbar);
    auto budget = [&](double c_bar) {
        const RootPair r = convex_roots(m, kbar, c_bar);
        return convex_budget(m, kbar, wstar_level(m, r.c5), wstar_level(m, r.c6));
    };

    // Budget decreases from the full call price at the tangency value to 0.
    double lo = tangency.c_bar > 0.0 ? tangency.c_bar * (1.0 + 1e-9) : 1.0;
    int guard = 0;
    while (budget(lo) < x0) {
        lo = tangency.c_bar > 0.0 ? tangency.c_bar + (lo - tangency.c_bar) * 1e-3 : 0.5 * lo;
        if (++guard > kMaxIterations) throw NumericError("convex bracket (lower) failed: " + describe(m, kbar, x0));
    }
    double hi = 2.0 * lo;
    guard = 0;
    while (budget(hi) > x0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > kMaxIterations) throw NumericError("convex bracket (upper) failed: " + describe(m, kbar, x0));
    }

    BsSolution out;
    double budget_lo = budget(lo);
    double budget_hi = budget(hi);
    int it = 0;
    while (hi - lo > kBracketTolerance * hi && it < kMaxIterations) {
        const double mid = std::sqrt(lo * hi);
        const double value = budget(mid);
        if (value > budget_lo || value < budget_hi) out.budget_monotone = false;
        if (value > x0) {
            lo = mid;
            budget_lo = value;
        } else {
            hi = mid;
            budget_hi = value;
        }
        ++it;
    }
    const double c_bar = std::sqrt(lo * hi);
    const RootPair roots = convex_roots(m, kbar, c_bar);

    out.regime = BsCase::Convex;
    out.modified_strike = kbar;
    out.x0 = x0;
    out.c_bar = c_bar;
    out.c5 = roots.c5;
    out.c6 = roots.c6;
    out.c7 = wstar_level(m, roots.c5);
    out.c8 = wstar_level(m, roots.c6);
    out.iterations = it;
    out.success_probability = prob_wstar_below(m, *out.c7) + normal_cdf(-(*out.c8 - m.mu / m.sigma * m.T) / sqrt_t(m));
    out.budget_used = convex_budget(m, kbar, *out.c7, *out.c8);
    if (roots.c5 > 0.0) out.success_set.push_back(PriceInterval{0.0, roots.c5});
    out.success_set.push_back(PriceInterval{roots.c6, std::numeric_limits<double>::infinity()});
    out.decomposition = {
        {InstrumentKind::Call, kbar, 0.0, 1.0},
        {InstrumentKind::Call, roots.c5, 0.0, -1.0},
        {InstrumentKind::Digital, roots.c5, roots.c5 - kbar, -1.0},
        {InstrumentKind::Call, roots.c6, 0.0, 1.0},
        {InstrumentKind::Digital, roots.c6, roots.c6 - kbar, 1.0},
    };
    return out;
}

BsSolution solve_black_scholes(const BsMarket& m, double strike, const LossSpec<double>& loss, double x0) {
    const double kbar = strike + inverse_threshold(loss);
    switch (classify(m, kbar, x0)) {
        case BsCase::FullHedge: return full_hedge(m, kbar, x0);
        case BsCase::Degenerate: return degenerate(m, kbar);
        case BsCase::Concave: return solve_concave(m, strike, loss, x0);
        case BsCase::Convex: return solve_convex(m, strike, loss, x0);
    }
    throw NumericError("unreachable Black-Scholes regime");
}

}  // namespace shortfall
