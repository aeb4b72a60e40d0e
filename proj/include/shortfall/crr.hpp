#pragma once

// Multi-period binomial model with zero interest rate. Every price path is an
// atom; the success set is chosen among paths and the resulting path-dependent
// claim is replicated on the non-recombining tree.
//
// Path ids: bit N-1-t of the id is move t (1 = up), so the first move is the
// most significant bit and id order equals the lexicographic order of move
// strings with 'd' < 'u'.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shortfall/discrete_optimizer.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/parallel.hpp"
#include "shortfall/scalar.hpp"

namespace shortfall {

inline constexpr int kMaxCrrPeriods = 24;
inline constexpr int kCrrExactCheckPeriods = 20;

template <typename Scalar>
struct CrrMarket {
    Scalar s0{0};
    Scalar up{0};    // return on an up move, > 0
    Scalar down{0};  // return on a down move, in (-1, 0)
    Scalar p{0};     // objective probability of an up move
    int periods = 0;

    void validate() const {
        if (!(s0 > Scalar(0))) throw DomainError("initial price s0 must be positive");
        if (!(up > Scalar(0))) throw DomainError("up return u must be positive");
        if (!(down > Scalar(-1) && down < Scalar(0))) throw DomainError("down return d must lie in (-1, 0)");
        if (!(p > Scalar(0) && p < Scalar(1))) throw DomainError("up probability p must lie in (0, 1)");
        if (periods < 1) throw DomainError("number of periods n must be at least 1");
    }

    /// p* = -d / (u - d).
    Scalar risk_neutral() const { return Scalar(-down / (up - down)); }

    template <typename Target>
    CrrMarket<Target> cast() const {
        if constexpr (std::is_same_v<Scalar, Target>) {
            return *this;
        } else {
            return {scalar_cast<Target>(s0), scalar_cast<Target>(up), scalar_cast<Target>(down),
                    scalar_cast<Target>(p), periods};
        }
    }

    bool operator==(const CrrMarket&) const = default;
};

template <typename Scalar>
struct LatticePath {
    std::size_t id = 0;
    std::string moves;
    int ups = 0;
    Scalar terminal_price{0};
    Scalar p_mass{0};
    Scalar qstar_mass{0};
    Scalar qbar_mass{0};  // shifted payoff times qstar_mass
};

inline std::string path_moves(std::size_t id, int periods) {
    std::string out(static_cast<std::size_t>(periods), 'd');
    for (int t = 0; t < periods; ++t) {
        if (id >> (periods - 1 - t) & 1U) out[static_cast<std::size_t>(t)] = 'u';
    }
    return out;
}

/// Inverse of path_moves; throws DomainError on characters other than u/d.
inline std::size_t path_id(std::string_view moves) {
    std::size_t id = 0;
    for (char c : moves) {
        if (c != 'u' && c != 'd') throw DomainError("path moves must be 'u' or 'd'");
        id = id << 1 | (c == 'u' ? 1U : 0U);
    }
    return id;
}

template <typename Scalar>
Scalar int_pow(Scalar base, int exponent) {
    Scalar out(1);
    while (exponent > 0) {
        if (exponent & 1) out *= base;
        base *= base;
        exponent >>= 1;
    }
    return out;
}

namespace detail {

template <typename Scalar>
void require_periods(const CrrMarket<Scalar>& market) {
    market.validate();
    if (market.periods > kMaxCrrPeriods) {
        throw CapabilityError("path enumeration supports at most " + std::to_string(kMaxCrrPeriods) +
                              " periods, got " + std::to_string(market.periods));
    }
}

// Terminal price, P mass and Q* mass per number of up moves.
template <typename Scalar>
struct LayerValues {
    std::vector<Scalar> price, p_mass, qstar_mass;

    explicit LayerValues(const CrrMarket<Scalar>& m) {
        const int n = m.periods;
        const Scalar qs = m.risk_neutral();
        for (int k = 0; k <= n; ++k) {
            price.push_back(m.s0 * int_pow(Scalar(1 + m.up), k) * int_pow(Scalar(1 + m.down), n - k));
            p_mass.push_back(int_pow(m.p, k) * int_pow(Scalar(1 - m.p), n - k));
            qstar_mass.push_back(int_pow(qs, k) * int_pow(Scalar(1 - qs), n - k));
        }
    }
};

inline int ups_of(std::size_t id) { return std::popcount(static_cast<std::uint64_t>(id)); }

}  // namespace detail

/// All 2^N paths in id order, with qbar_mass from the shifted claim.
template <typename Scalar>
std::vector<LatticePath<Scalar>> lattice_paths(const CrrMarket<Scalar>& market, const ClaimSpec<Scalar>& claim,
                                               const LossSpec<Scalar>& loss) {
    detail::require_periods(market);
    const std::size_t count = std::size_t{1} << market.periods;
    claim.require_outcomes(count);
    const detail::LayerValues<Scalar> layers(market);
    const Scalar threshold = inverse_threshold(loss);
    std::vector<LatticePath<Scalar>> paths(count);
    parallel_ranges(count, [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = begin; id < end; ++id) {
            auto& path = paths[id];
            const int k = detail::ups_of(id);
            path.id = id;
            path.moves = path_moves(id, market.periods);
            path.ups = k;
            path.terminal_price = layers.price[static_cast<std::size_t>(k)];
            path.p_mass = layers.p_mass[static_cast<std::size_t>(k)];
            path.qstar_mass = layers.qstar_mass[static_cast<std::size_t>(k)];
            const Scalar shifted = positive_part(Scalar(claim.payoff(id, path.terminal_price) - threshold));
            path.qbar_mass = shifted * path.qstar_mass;
        }
    });
    return paths;
}

template <typename Scalar>
AtomTable<Scalar> atoms_from_paths(const std::vector<LatticePath<Scalar>>& paths) {
    const auto n = static_cast<Eigen::Index>(paths.size());
    std::vector<std::size_t> ids(paths.size());
    Vector<Scalar> prob(n);
    Matrix<Scalar> costs(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& path = paths[static_cast<std::size_t>(i)];
        ids[static_cast<std::size_t>(i)] = path.id;
        prob(i) = path.p_mass;
        costs(i, 0) = path.qbar_mass;
    }
    return AtomTable<Scalar>(std::move(ids), std::move(prob), std::move(costs));
}

/// One atom per path: objective mass and cost (H - u^{-1}(alpha))^+ q*-mass.
template <typename Scalar>
AtomTable<Scalar> build_atoms(const CrrMarket<Scalar>& market, const ClaimSpec<Scalar>& claim,
                              const LossSpec<Scalar>& loss) {
    return atoms_from_paths(lattice_paths(market, claim, loss));
}

enum class MonotoneCase {
    IncreasingQbar,  // cost increasing in k, p <= 1/2: fill layers from k = 0 upwards
    DecreasingQbar,  // cost decreasing in k, p >= 1/2: fill layers from k = N downwards
    Neither,
};

inline std::string to_string(MonotoneCase c) {
    switch (c) {
        case MonotoneCase::IncreasingQbar: return "IncreasingQbar";
        case MonotoneCase::DecreasingQbar: return "DecreasingQbar";
        case MonotoneCase::Neither: return "Neither";
    }
    return "unknown";
}

/// b_k = (x_{k+1} - Kbar)^+ / (x_k - Kbar)^+ for k = 0..N-1, x_k the terminal
/// price after k up moves. Empty optional stands for a/0 = infinity.
template <typename Scalar>
std::vector<std::optional<Scalar>> layer_ratios(const CrrMarket<Scalar>& market, const Scalar& modified_strike) {
    market.validate();
    const detail::LayerValues<Scalar> layers(market);
    std::vector<std::optional<Scalar>> out;
    for (int k = 0; k < market.periods; ++k) {
        const Scalar below = positive_part(Scalar(layers.price[static_cast<std::size_t>(k)] - modified_strike));
        const Scalar above = positive_part(Scalar(layers.price[static_cast<std::size_t>(k) + 1] - modified_strike));
        if (below == Scalar(0)) {
            out.emplace_back();
        } else {
            out.emplace_back(Scalar(above / below));
        }
    }
    return out;
}

struct QbarShape {
    bool increasing = false;
    bool decreasing = false;
};

/// Monotonicity of the cost in k on its positive support:
/// increasing iff b_{N-1} >= (1-p*)/p*, decreasing iff b_kmin <= (1-p*)/p*
/// at the first finite b_k (vacuously true when there is none).
template <typename Scalar>
QbarShape qbar_shape(const CrrMarket<Scalar>& market, const Scalar& modified_strike) {
    using T = ScalarTraits<Scalar>;
    const auto b = layer_ratios(market, modified_strike);
    const Scalar qs = market.risk_neutral();
    const Scalar level = (Scalar(1) - qs) / qs;
    QbarShape shape;
    shape.increasing = !b.back() || *b.back() >= level || T::same(*b.back(), level);
    shape.decreasing = true;
    for (const auto& bk : b) {
        if (bk) {
            shape.decreasing = *bk <= level || T::same(*bk, level);
            break;
        }
    }
    return shape;
}

/// Which layer-greedy construction is provably optimal, if any. Only call
/// claims have a cost that depends on k alone; table claims give Neither.
template <typename Scalar>
MonotoneCase check_monotone_case(const CrrMarket<Scalar>& market, const ClaimSpec<Scalar>& claim,
                                 const LossSpec<Scalar>& loss) {
    if (!claim.is_call()) return MonotoneCase::Neither;
    const QbarShape shape = qbar_shape(market, modified_strike(claim, loss));
    const Scalar half(Scalar(1) / Scalar(2));
    if (shape.increasing && market.p <= half) return MonotoneCase::IncreasingQbar;
    if (shape.decreasing && market.p >= half) return MonotoneCase::DecreasingQbar;
    return MonotoneCase::Neither;
}

/// Zero-cost paths plus whole layers in the order given by `which`, then as
/// many paths of the next layer as fit, smallest ids first.
template <typename Scalar>
SuccessSet<Scalar> solve_layer_greedy(const std::vector<LatticePath<Scalar>>& paths, const AtomTable<Scalar>& table,
                                      MonotoneCase which, const Scalar& budget, int periods) {
    using T = ScalarTraits<Scalar>;
    if (which == MonotoneCase::Neither) throw PreconditionError("layer greedy needs a monotone case");
    std::vector<std::size_t> chosen;
    std::vector<std::vector<std::size_t>> layers(static_cast<std::size_t>(periods) + 1);
    for (std::size_t pos = 0; pos < paths.size(); ++pos) {
        if (paths[pos].qbar_mass == Scalar(0)) {
            chosen.push_back(pos);
        } else {
            layers[static_cast<std::size_t>(paths[pos].ups)].push_back(pos);
        }
    }
    if (which == MonotoneCase::DecreasingQbar) std::reverse(layers.begin(), layers.end());

    Scalar used(0);
    for (const auto& layer : layers) {
        bool stopped = false;
        for (std::size_t pos : layer) {  // ascending id within a layer
            const Scalar next = used + paths[pos].qbar_mass;
            if (!T::fits(next, budget)) {
                stopped = true;
                break;
            }
            used = next;
            chosen.push_back(pos);
        }
        if (stopped) break;
    }
    return detail::make_set(table, std::move(chosen), Certificate::MonotoneGreedy);
}

/// Sum of payoff times q*-mass over paths; payoffs indexed by path id.
template <typename Scalar>
Scalar price_claim(const CrrMarket<Scalar>& market, std::span<const Scalar> payoffs) {
    detail::require_periods(market);
    if (payoffs.size() != std::size_t{1} << market.periods) {
        throw DomainError("payoff vector must have one entry per path");
    }
    const detail::LayerValues<Scalar> layers(market);
    Scalar total(0);
    for (std::size_t id = 0; id < payoffs.size(); ++id) {
        total += payoffs[id] * layers.qstar_mass[static_cast<std::size_t>(detail::ups_of(id))];
    }
    return total;
}

template <typename Scalar>
Scalar price_claim(const CrrMarket<Scalar>& market, const std::vector<Scalar>& payoffs) {
    return price_claim(market, std::span<const Scalar>(payoffs));
}

template <typename Scalar>
struct Holding {
    Scalar stock{0};
    Scalar cash{0};
};

/// Replicating strategy on the path tree. Node (t, j) is reached by the first
/// t moves encoded as j (first move most significant).
template <typename Scalar>
struct HedgePlan {
    Scalar initial_capital{0};
    std::vector<std::vector<Holding<Scalar>>> holdings;  // [t][j], t = 0..N-1
    std::vector<std::vector<Scalar>> values;             // [t][j], t = 0..N

    int periods() const { return static_cast<int>(holdings.size()); }
};

namespace detail {

template <typename Scalar>
Scalar node_price(const CrrMarket<Scalar>& m, int t, std::size_t j) {
    const int k = ups_of(j);
    return m.s0 * int_pow(Scalar(1 + m.up), k) * int_pow(Scalar(1 + m.down), t - k);
}

}  // namespace detail

/// Backward induction: stock * S_up + cash = V_up, stock * S_down + cash = V_down.
template <typename Scalar>
HedgePlan<Scalar> replicate(const CrrMarket<Scalar>& market, std::span<const Scalar> payoffs) {
    detail::require_periods(market);
    const int n = market.periods;
    if (payoffs.size() != std::size_t{1} << n) throw DomainError("payoff vector must have one entry per path");
    HedgePlan<Scalar> plan;
    plan.values.resize(static_cast<std::size_t>(n) + 1);
    plan.holdings.resize(static_cast<std::size_t>(n));
    plan.values[static_cast<std::size_t>(n)].assign(payoffs.begin(), payoffs.end());
    const Scalar spread = market.up - market.down;
    for (int t = n - 1; t >= 0; --t) {
        const std::size_t width = std::size_t{1} << t;
        const auto& next = plan.values[static_cast<std::size_t>(t) + 1];
        auto& value = plan.values[static_cast<std::size_t>(t)];
        auto& hold = plan.holdings[static_cast<std::size_t>(t)];
        value.resize(width);
        hold.resize(width);
        parallel_ranges(width, [&](std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j) {
                const Scalar s = detail::node_price(market, t, j);
                const Scalar& v_up = next[2 * j + 1];
                const Scalar& v_down = next[2 * j];
                const Scalar stock = (v_up - v_down) / (s * spread);
                const Scalar cash = v_up - stock * s * (1 + market.up);
                hold[j] = {stock, cash};
                value[j] = stock * s + cash;
            }
        });
    }
    plan.initial_capital = plan.values[0][0];
    return plan;
}

template <typename Scalar>
HedgePlan<Scalar> replicate(const CrrMarket<Scalar>& market, const std::vector<Scalar>& payoffs) {
    return replicate(market, std::span<const Scalar>(payoffs));
}

template <typename Scalar>
struct WealthRun {
    std::vector<Scalar> terminal;  // by path id
    Scalar max_rebalance_gap{0};   // |wealth before - value after| over all rebalancings
};

/// Runs the plan forward along every path, starting from its initial capital.
template <typename Scalar>
WealthRun<Scalar> run_plan(const CrrMarket<Scalar>& market, const HedgePlan<Scalar>& plan) {
    detail::require_periods(market);
    const int n = market.periods;
    if (plan.periods() != n) throw DomainError("plan and market have different horizons");
    WealthRun<Scalar> run;
    run.terminal.resize(std::size_t{1} << n);
    std::vector<Scalar> gaps(run.terminal.size(), Scalar(0));
    parallel_ranges(run.terminal.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = begin; id < end; ++id) {
            Scalar wealth = plan.initial_capital;
            Scalar s = market.s0;
            for (int t = 0; t < n; ++t) {
                const std::size_t j = id >> (n - t);
                const auto& h = plan.holdings[static_cast<std::size_t>(t)][j];
                using std::abs;
                const Scalar gap = abs(Scalar(wealth - (h.stock * s + h.cash)));
                if (gap > gaps[id]) gaps[id] = gap;
                const bool up = id >> (n - 1 - t) & 1U;
                s = s * (1 + (up ? market.up : market.down));
                wealth = h.stock * s + h.cash;
            }
            run.terminal[id] = wealth;
        }
    });
    for (const auto& g : gaps) {
        if (g > run.max_rebalance_gap) run.max_rebalance_gap = g;
    }
    return run;
}

template <typename Scalar>
struct CrrSolution {
    MonotoneCase monotone = MonotoneCase::Neither;
    bool full_hedge = false;
    std::optional<Scalar> modified_strike;  // call claims only
    Scalar threshold{0};                    // u^{-1}(alpha)
    Scalar x0{0};
    Scalar claim_price{0};    // price of H
    Scalar shifted_price{0};  // price of (H - u^{-1}(alpha))^+
    SuccessSet<Scalar> set;
    std::optional<SuccessSet<Scalar>> exact;  // present when N <= 20
    bool exact_agrees = true;
    std::vector<LatticePath<Scalar>> paths;
    std::vector<Scalar> payoff, shifted, modified;  // by path id
    HedgePlan<Scalar> plan;
};

/// Success set by layer greedy when a monotone case holds, otherwise by exact
/// search; checked against exact search whenever N <= 20. The modified claim
/// 1_set (H - u^{-1}(alpha))^+ is then replicated.
template <typename Scalar>
CrrSolution<Scalar> solve_crr(const CrrMarket<Scalar>& market, const ClaimSpec<Scalar>& claim,
                              const LossSpec<Scalar>& loss, const Scalar& x0) {
    using T = ScalarTraits<Scalar>;
    if (x0 < Scalar(0)) throw DomainError("budget x0 must be nonnegative");
    CrrSolution<Scalar> out;
    out.x0 = x0;
    out.paths = lattice_paths(market, claim, loss);
    out.threshold = inverse_threshold(loss);
    if (claim.is_call()) out.modified_strike = modified_strike(claim, loss);

    const std::size_t count = out.paths.size();
    out.payoff.resize(count);
    out.shifted.resize(count);
    for (const auto& path : out.paths) {
        out.payoff[path.id] = claim.payoff(path.id, path.terminal_price);
        out.shifted[path.id] = positive_part(Scalar(out.payoff[path.id] - out.threshold));
    }
    out.claim_price = price_claim(market, out.payoff);
    out.shifted_price = price_claim(market, out.shifted);

    const AtomTable<Scalar> table = atoms_from_paths(out.paths);
    const std::vector<Scalar> budgets{x0};
    out.monotone = check_monotone_case(market, claim, loss);
    if (T::fits(out.shifted_price, x0)) {
        std::vector<std::size_t> all(count);
        std::iota(all.begin(), all.end(), std::size_t{0});
        out.full_hedge = true;
        out.set = detail::make_set(table, std::move(all), Certificate::ExhaustiveOptimal);
    } else if (out.monotone != MonotoneCase::Neither) {
        out.set = solve_layer_greedy(out.paths, table, out.monotone, x0, market.periods);
    } else {
        out.set = solve_exact(table, budgets);
    }
    if (market.periods <= kCrrExactCheckPeriods) {
        out.exact = solve_exact(table, budgets);
        out.exact_agrees = T::same(out.exact->probability, out.set.probability);
    }

    out.modified.assign(count, Scalar(0));
    for (std::size_t id : out.set.member_ids) out.modified[id] = out.shifted[id];
    out.plan = replicate(market, out.modified);
    return out;
}

/// Every optimal success set; needs 2^N <= 20, i.e. N <= 4.
template <typename Scalar>
std::vector<SuccessSet<Scalar>> crr_candidates(const CrrMarket<Scalar>& market, const ClaimSpec<Scalar>& claim,
                                               const LossSpec<Scalar>& loss, const Scalar& x0) {
    if (x0 < Scalar(0)) throw DomainError("budget x0 must be nonnegative");
    return solve_exact_all(build_atoms(market, claim, loss), std::vector<Scalar>{x0});
}

}  // namespace shortfall
