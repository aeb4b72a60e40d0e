#pragma once

// One-period trinomial model S_1 = S (1 + xi), xi in {a, b, c}, zero interest.
// The martingale measures form an open segment; a budget holds under all of
// them iff it holds at both closed-segment endpoints, so the success set
// solves a two-constraint knapsack over the three outcomes.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shortfall/discrete_optimizer.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/scalar.hpp"

namespace shortfall {

template <typename Scalar>
using Triple = std::array<Scalar, 3>;

template <typename Scalar>
struct TrinomialMarket {
    Scalar s{0};
    Scalar a{0}, b{0}, c{0};     // returns, a > b > c, a > 0 > c
    Scalar p1{0}, p2{0}, p3{0};  // objective probabilities

    void validate() const {
        if (!(s > Scalar(0))) throw DomainError("initial price s must be positive");
        if (!(a > b && b > c)) throw DomainError("returns must satisfy a > b > c");
        if (!(a > Scalar(0) && c < Scalar(0))) throw DomainError("returns must satisfy a > 0 > c");
        if (!(c > Scalar(-1))) throw DomainError("return c must exceed -1");
        if (!(p1 > Scalar(0) && p2 > Scalar(0) && p3 > Scalar(0))) {
            throw DomainError("outcome probabilities must be positive");
        }
        const Scalar total = p1 + p2 + p3;
        if constexpr (ScalarTraits<Scalar>::is_exact) {
            if (total != Scalar(1)) throw DomainError("outcome probabilities must sum to 1");
        } else {
            if (std::abs(total - 1.0) > 1e-12) throw DomainError("outcome probabilities must sum to 1");
        }
    }

    Triple<Scalar> probabilities() const { return {p1, p2, p3}; }
    Triple<Scalar> terminal_prices() const {
        return {Scalar(s * (1 + a)), Scalar(s * (1 + b)), Scalar(s * (1 + c))};
    }

    template <typename Target>
    TrinomialMarket<Target> cast() const {
        if constexpr (std::is_same_v<Scalar, Target>) {
            return *this;
        } else {
            return {scalar_cast<Target>(s),  scalar_cast<Target>(a),  scalar_cast<Target>(b),
                    scalar_cast<Target>(c),  scalar_cast<Target>(p1), scalar_cast<Target>(p2),
                    scalar_cast<Target>(p3)};
        }
    }

    bool operator==(const TrinomialMarket&) const = default;
};

/// Martingale measure with first component q1; q1 in (q_low, q_high) gives an
/// equivalent one.
template <typename Scalar>
Triple<Scalar> measure_at(const TrinomialMarket<Scalar>& m, const Scalar& q1) {
    return {q1, Scalar((m.c - m.a) / (m.b - m.c) * q1 + m.c / (m.c - m.b)),
            Scalar((m.a - m.b) / (m.b - m.c) * q1 + m.b / (m.b - m.c))};
}

template <typename Scalar>
struct VertexMeasures {
    Scalar q_low{0};
    Scalar q_high{0};
    Triple<Scalar> low;   // endpoint at q_low
    Triple<Scalar> high;  // endpoint at q_high
};

/// Endpoints written with their vanishing component set exactly to zero.
template <typename Scalar>
VertexMeasures<Scalar> vertex_measures(const TrinomialMarket<Scalar>& m) {
    m.validate();
    VertexMeasures<Scalar> v;
    v.q_high = m.c / (m.c - m.a);
    v.high = {v.q_high, Scalar(0), Scalar(m.a / (m.a - m.c))};
    if (m.b > Scalar(0)) {
        v.q_low = Scalar(0);
        v.low = {Scalar(0), Scalar(m.c / (m.c - m.b)), Scalar(m.b / (m.b - m.c))};
    } else {
        v.q_low = m.b / (m.b - m.a);
        v.low = {v.q_low, Scalar(m.a / (m.a - m.b)), Scalar(0)};
    }
    return v;
}

/// (H_i - u^{-1}(alpha))^+ per outcome. Call claims use the terminal prices.
template <typename Scalar>
Triple<Scalar> shifted_claim(const TrinomialMarket<Scalar>& m, const ClaimSpec<Scalar>& claim,
                             const LossSpec<Scalar>& loss) {
    claim.require_outcomes(3);
    const Triple<Scalar> prices = m.terminal_prices();
    Triple<Scalar> out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = shifted_payoff(loss, claim.payoff(i, prices[i]));
    return out;
}

/// Outcome ids 0, 1, 2 for the returns a, b, c; cost columns are the low
/// and high endpoint prices of the shifted claim on each outcome.
template <typename Scalar>
AtomTable<Scalar> trinomial_atoms(const TrinomialMarket<Scalar>& m, const ClaimSpec<Scalar>& claim,
                                  const LossSpec<Scalar>& loss) {
    const VertexMeasures<Scalar> v = vertex_measures(m);
    const Triple<Scalar> hbar = shifted_claim(m, claim, loss);
    Vector<Scalar> prob(3);
    Matrix<Scalar> costs(3, 2);
    const Triple<Scalar> p = m.probabilities();
    for (Eigen::Index i = 0; i < 3; ++i) {
        const auto k = static_cast<std::size_t>(i);
        prob(i) = p[k];
        costs(i, 0) = v.low[k] * hbar[k];
        costs(i, 1) = v.high[k] * hbar[k];
    }
    return AtomTable<Scalar>({0, 1, 2}, std::move(prob), std::move(costs));
}

/// E^Q[1_set Hbar] for a measure given as a triple.
template <typename Scalar>
Scalar expected_cost(const Triple<Scalar>& measure, const Triple<Scalar>& hbar, const std::vector<std::size_t>& set) {
    Scalar total(0);
    for (std::size_t id : set) total += measure.at(id) * hbar.at(id);
    return total;
}

/// Hand-derived case table for b > 0: returns the branch label
/// and the chosen outcome ids. Ties follow the table's comparisons literally.
template <typename Scalar>
std::pair<std::string, std::vector<std::size_t>> decision_table_branch(const TrinomialMarket<Scalar>& m,
                                                                       const ClaimSpec<Scalar>& claim,
                                                                       const LossSpec<Scalar>& loss,
                                                                       const Scalar& x0) {
    using T = ScalarTraits<Scalar>;
    m.validate();
    if (!(m.b > Scalar(0))) throw CapabilityError("the case table covers b > 0 only");
    if (x0 < Scalar(0)) throw DomainError("budget x0 must be nonnegative");
    const Triple<Scalar> h = shifted_claim(m, claim, loss);
    // Low endpoint charges outcomes 2 and 3, high endpoint outcomes 1 and 3.
    const Scalar low2 = m.c / (m.c - m.b) * h[1];
    const Scalar low3 = m.b / (m.b - m.c) * h[2];
    const Scalar high1 = m.c / (m.c - m.a) * h[0];
    const Scalar high3 = m.a / (m.a - m.c) * h[2];
    const Scalar l1 = low2 + low3;
    const Scalar l2 = high1 + high3;
    auto ok = [&](const Scalar& v) { return T::fits(v, x0); };
    const bool min_low_ok = ok(std::min(low2, low3));
    const bool min_high_ok = ok(std::min(high1, high3));
    const bool max_low_ok = ok(std::max(low2, low3));
    const bool max_high_ok = ok(std::max(high1, high3));

    if (ok(l1) && ok(l2)) return {"1", {0, 1, 2}};
    if (!min_low_ok || !min_high_ok) return {"2", {}};
    if (ok(l1) && !ok(l2)) {
        if (!max_high_ok) return high1 >= high3 ? std::pair{std::string("3(a)i"), std::vector<std::size_t>{1, 2}}
                                                : std::pair{std::string("3(a)ii"), std::vector<std::size_t>{0, 1}};
        return m.p1 >= m.p3 ? std::pair{std::string("3(b)i"), std::vector<std::size_t>{0, 1}}
                            : std::pair{std::string("3(b)ii"), std::vector<std::size_t>{1, 2}};
    }
    if (!ok(l1) && ok(l2)) {
        if (!max_low_ok) return low2 >= low3 ? std::pair{std::string("4(a)i"), std::vector<std::size_t>{0, 2}}
                                             : std::pair{std::string("4(a)ii"), std::vector<std::size_t>{0, 1}};
        return m.p2 >= m.p3 ? std::pair{std::string("4(b)i"), std::vector<std::size_t>{0, 1}}
                            : std::pair{std::string("4(b)ii"), std::vector<std::size_t>{0, 2}};
    }
    // Both full budgets exceeded; the cheaper atom of each pair is affordable.
    if (!max_low_ok && !max_high_ok) {
        if (low2 <= low3 && high1 <= high3) return {"5(a)i", {0, 1}};
        if (low2 <= low3) return {"5(a)ii", {1}};
        if (high1 <= high3) return {"5(a)iii", {0}};
        return {"5(a)iv", {2}};
    }
    if (!max_low_ok) {
        if (low2 <= low3) return {"5(b)i", {0, 1}};
        return m.p3 >= m.p1 ? std::pair{std::string("5(b)ii.A"), std::vector<std::size_t>{2}}
                            : std::pair{std::string("5(b)ii.B"), std::vector<std::size_t>{0}};
    }
    if (!max_high_ok) {
        if (high1 <= high3) return {"5(c)i", {0, 1}};
        return m.p2 >= m.p3 ? std::pair{std::string("5(c)ii.A"), std::vector<std::size_t>{1}}
                            : std::pair{std::string("5(c)ii.B"), std::vector<std::size_t>{2}};
    }
    return m.p1 + m.p2 >= m.p3 ? std::pair{std::string("5(d)i"), std::vector<std::size_t>{0, 1}}
                               : std::pair{std::string("5(d)ii"), std::vector<std::size_t>{2}};
}

template <typename Scalar>
SuccessSet<Scalar> decision_table_b_positive(const TrinomialMarket<Scalar>& m, const ClaimSpec<Scalar>& claim,
                                             const LossSpec<Scalar>& loss, const Scalar& x0) {
    auto [branch, ids] = decision_table_branch(m, claim, loss, x0);
    return detail::make_set(trinomial_atoms(m, claim, loss), std::move(ids), Certificate::DecisionTable);
}

template <typename Scalar>
struct TrinomialSolution {
    VertexMeasures<Scalar> vertices;
    Triple<Scalar> shifted;
    Scalar x0{0};
    SuccessSet<Scalar> set;
    std::vector<Scalar> costs_used;  // low and high endpoint prices of 1_set Hbar
    std::optional<std::string> table_branch;  // b > 0 only
    std::optional<Scalar> table_probability;
    bool table_agrees = true;
};

/// Exact search over the 8 outcome subsets with budgets (x0, x0); for b > 0
/// the hand-derived case table is evaluated alongside and compared.
template <typename Scalar>
TrinomialSolution<Scalar> solve_trinomial(const TrinomialMarket<Scalar>& m, const ClaimSpec<Scalar>& claim,
                                          const LossSpec<Scalar>& loss, const Scalar& x0) {
    if (x0 < Scalar(0)) throw DomainError("budget x0 must be nonnegative");
    TrinomialSolution<Scalar> out;
    out.vertices = vertex_measures(m);
    out.shifted = shifted_claim(m, claim, loss);
    out.x0 = x0;
    out.set = solve_exact(trinomial_atoms(m, claim, loss), std::vector<Scalar>{x0, x0});
    out.costs_used = out.set.costs_used;
    if (m.b > Scalar(0)) {
        const SuccessSet<Scalar> table = decision_table_b_positive(m, claim, loss, x0);
        out.table_branch = decision_table_branch(m, claim, loss, x0).first;
        out.table_probability = table.probability;
        out.table_agrees = ScalarTraits<Scalar>::same(table.probability, out.set.probability);
    }
    return out;
}

}  // namespace shortfall
