#pragma once

// Success-set optimization on a finite outcome space:
//
//     maximize P(A)  subject to  sum_{i in A} cost_ij <= budget_j  for every j.
//
// This is a multi-constraint 0/1 knapsack. solve_exact certifies optimality by
// enumeration (small tables) or branch-and-bound; the greedy and level-set
// constructions are provided for the structured cases and as diagnostics.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <initializer_list>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shortfall/errors.hpp"
#include "shortfall/scalar.hpp"

namespace shortfall {

enum class Certificate {
    ExhaustiveOptimal,
    BranchBoundOptimal,
    MonotoneGreedy,
    NaiveDiagnostic,
    DecisionTable,
};

inline std::string to_string(Certificate certificate) {
    switch (certificate) {
        case Certificate::ExhaustiveOptimal: return "ExhaustiveOptimal";
        case Certificate::BranchBoundOptimal: return "BranchBoundOptimal";
        case Certificate::MonotoneGreedy: return "MonotoneGreedy";
        case Certificate::NaiveDiagnostic: return "NaiveDiagnostic";
        case Certificate::DecisionTable: return "DecisionTable";
    }
    return "unknown";
}

/// Outcomes with their objective probability and one cost per constraint
/// measure (row i, column j holds E^{Q_j}[1_{atom i} Hbar]).
template <typename Scalar>
struct AtomTable {
    std::vector<std::size_t> ids;
    Vector<Scalar> prob;
    Matrix<Scalar> costs;

    AtomTable() = default;

    AtomTable(std::vector<std::size_t> atom_ids, Vector<Scalar> probabilities, Matrix<Scalar> atom_costs)
        : ids(std::move(atom_ids)), prob(std::move(probabilities)), costs(std::move(atom_costs)) {
        validate();
    }

    // Single-constraint table with ids 0..n-1.
    static AtomTable single(std::span<const Scalar> probabilities, std::span<const Scalar> atom_costs) {
        if (probabilities.size() != atom_costs.size()) {
            throw DomainError("probability and cost vectors differ in length");
        }
        const auto n = static_cast<Eigen::Index>(probabilities.size());
        std::vector<std::size_t> ids(probabilities.size());
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        Vector<Scalar> p(n);
        Matrix<Scalar> c(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = probabilities[static_cast<std::size_t>(i)];
            c(i, 0) = atom_costs[static_cast<std::size_t>(i)];
        }
        return AtomTable(std::move(ids), std::move(p), std::move(c));
    }

    std::size_t size() const { return ids.size(); }
    std::size_t constraint_count() const { return static_cast<std::size_t>(costs.cols()); }

    void validate() const {
        const auto n = static_cast<Eigen::Index>(ids.size());
        if (prob.size() != n || costs.rows() != n) throw DomainError("atom table dimensions disagree");
        if (n > 0 && costs.cols() == 0) throw DomainError("atom table has no cost columns");
        std::vector<std::size_t> sorted(ids);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw DomainError("atom ids must be unique");
        }
        Scalar total(0);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(prob(i) > Scalar(0))) throw DomainError("atom probabilities must be positive");
            total += prob(i);
            for (Eigen::Index j = 0; j < costs.cols(); ++j) {
                if (costs(i, j) < Scalar(0)) throw DomainError("atom costs must be nonnegative");
            }
        }
        if (to_double(total) > 1.0 + 1e-12) throw DomainError("atom probabilities sum above one");
    }
};

template <typename Scalar>
struct SuccessSet {
    std::vector<std::size_t> member_ids;
    Scalar probability{0};
    std::vector<Scalar> costs_used;
    Certificate certificate = Certificate::ExhaustiveOptimal;

    bool contains(std::size_t id) const {
        return std::binary_search(member_ids.begin(), member_ids.end(), id);
    }
};

template <typename Scalar>
struct NeymanPearsonLevel {
    std::optional<Scalar> beta;         // empty when no level set fits
    std::vector<std::size_t> members;   // positions into the input spans
    Scalar mass{0};
    bool certified = false;
};

namespace detail {

template <typename Scalar>
void require_budgets(const AtomTable<Scalar>& table, std::span<const Scalar> budgets) {
    if (table.size() > 0 && budgets.size() != table.constraint_count()) {
        throw DomainError("budget count does not match the number of cost columns");
    }
    for (const auto& b : budgets) {
        if (b < Scalar(0)) throw DomainError("budgets must be nonnegative");
    }
}

template <typename Scalar>
void require_single(const AtomTable<Scalar>& table, const Scalar& budget) {
    if (table.size() > 0 && table.constraint_count() != 1) {
        throw PreconditionError("single-constraint routine called on a multi-constraint table");
    }
    if (budget < Scalar(0)) throw DomainError("budget must be nonnegative");
}

// Builds the reported set from table positions; sums run in ascending id order.
template <typename Scalar>
SuccessSet<Scalar> make_set(const AtomTable<Scalar>& table, std::vector<std::size_t> positions,
                            Certificate certificate) {
    std::sort(positions.begin(), positions.end(),
              [&](std::size_t a, std::size_t b) { return table.ids[a] < table.ids[b]; });
    SuccessSet<Scalar> out;
    out.certificate = certificate;
    out.costs_used.assign(table.constraint_count(), Scalar(0));
    for (std::size_t pos : positions) {
        const auto i = static_cast<Eigen::Index>(pos);
        out.member_ids.push_back(table.ids[pos]);
        out.probability += table.prob(i);
        for (std::size_t j = 0; j < out.costs_used.size(); ++j) {
            out.costs_used[j] += table.costs(i, static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

template <typename Scalar>
bool within_budget(const SuccessSet<Scalar>& set, std::span<const Scalar> budgets) {
    for (std::size_t j = 0; j < budgets.size(); ++j) {
        if (!ScalarTraits<Scalar>::fits(set.costs_used[j], budgets[j])) return false;
    }
    return true;
}

template <typename Scalar>
Scalar total_cost(const SuccessSet<Scalar>& set) {
    Scalar sum(0);
    for (const auto& c : set.costs_used) sum += c;
    return sum;
}

// Ordering used for tie-breaking: larger P, then smaller total cost, then the
// lexicographically smaller sorted id list.
template <typename Scalar>
bool preferred(const SuccessSet<Scalar>& a, const SuccessSet<Scalar>& b) {
    using T = ScalarTraits<Scalar>;
    if (!T::same(a.probability, b.probability)) return a.probability > b.probability;
    const Scalar ca = total_cost(a);
    const Scalar cb = total_cost(b);
    if (!T::same(ca, cb)) return ca < cb;
    return std::lexicographical_compare(a.member_ids.begin(), a.member_ids.end(), b.member_ids.begin(),
                                        b.member_ids.end());
}

template <typename Scalar>
bool all_zero_costs(const AtomTable<Scalar>& table, std::size_t pos) {
    for (Eigen::Index j = 0; j < table.costs.cols(); ++j) {
        if (table.costs(static_cast<Eigen::Index>(pos), j) != Scalar(0)) return false;
    }
    return true;
}

template <typename Scalar>
bool fits_alone(const AtomTable<Scalar>& table, std::size_t pos, std::span<const Scalar> budgets) {
    for (std::size_t j = 0; j < budgets.size(); ++j) {
        if (!ScalarTraits<Scalar>::fits(table.costs(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(j)),
                                        budgets[j])) {
            return false;
        }
    }
    return true;
}

// Largest k <= cap with k * cost fitting into `remaining`.
template <typename Scalar>
std::size_t max_copies(const Scalar& remaining, const Scalar& cost, std::size_t cap) {
    using T = ScalarTraits<Scalar>;
    if (cost == Scalar(0)) return cap;
    std::size_t k = 0;
    if constexpr (T::is_exact) {
        Rational q = remaining / cost;
        if (q > 0) {
            BigInt whole = numerator(q) / denominator(q);
            k = whole > BigInt(cap) ? cap : whole.template convert_to<std::size_t>();
        }
    } else {
        const double q = std::floor(remaining / cost);
        k = q <= 0 ? 0 : (q >= static_cast<double>(cap) ? cap : static_cast<std::size_t>(q));
    }
    while (k < cap && T::fits(Scalar(cost * Scalar(static_cast<long long>(k + 1))), remaining)) ++k;
    while (k > 0 && !T::fits(Scalar(cost * Scalar(static_cast<long long>(k))), remaining)) --k;
    return k;
}

template <typename Scalar>
class GroupedBranchBound {
public:
    GroupedBranchBound(const AtomTable<Scalar>& table, std::vector<std::size_t> always,
                       const std::vector<std::size_t>& candidates, std::span<const Scalar> budgets)
        : table_(table), always_(std::move(always)), budgets_(budgets.begin(), budgets.end()) {
        build_groups(candidates);
        build_orders();
    }

    SuccessSet<Scalar> run() {
        std::vector<Scalar> remaining = budgets_;
        counts_.assign(groups_.size(), 0);
        best_ = make_set(table_, always_, Certificate::BranchBoundOptimal);
        have_best_ = within_budget(best_, std::span<const Scalar>(budgets_));
        search(0, remaining, best_.probability);
        return best_;
    }

private:
    struct Group {
        std::vector<std::size_t> positions;  // ascending id
        Scalar prob;
        std::vector<Scalar> cost;
    };

    static constexpr std::uint64_t kNodeLimit = 200'000'000;

    void build_groups(const std::vector<std::size_t>& candidates) {
        const auto m = table_.constraint_count();
        std::map<std::vector<double>, std::vector<std::size_t>> by_key;
        std::vector<std::vector<std::size_t>> buckets;
        // Group by exact equality of (p, cost row); the double key only buckets.
        for (std::size_t pos : candidates) {
            const auto i = static_cast<Eigen::Index>(pos);
            std::vector<double> key{to_double(table_.prob(i))};
            for (std::size_t j = 0; j < m; ++j) key.push_back(to_double(table_.costs(i, static_cast<Eigen::Index>(j))));
            by_key[key].push_back(pos);
        }
        for (auto& [key, members] : by_key) {
            std::vector<std::vector<std::size_t>> exact;
            for (std::size_t pos : members) {
                bool placed = false;
                for (auto& bucket : exact) {
                    if (same_atom(bucket.front(), pos)) {
                        bucket.push_back(pos);
                        placed = true;
                        break;
                    }
                }
                if (!placed) exact.push_back({pos});
            }
            for (auto& bucket : exact) buckets.push_back(std::move(bucket));
        }
        for (auto& bucket : buckets) {
            std::sort(bucket.begin(), bucket.end(),
                      [&](std::size_t a, std::size_t b) { return table_.ids[a] < table_.ids[b]; });
            Group g;
            const auto i = static_cast<Eigen::Index>(bucket.front());
            g.prob = table_.prob(i);
            for (std::size_t j = 0; j < m; ++j) g.cost.push_back(table_.costs(i, static_cast<Eigen::Index>(j)));
            g.positions = std::move(bucket);
            groups_.push_back(std::move(g));
        }
        // Branch on the most efficient groups first.
        std::vector<double> score(groups_.size());
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            double load = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double b = to_double(budgets_[j]);
                if (b > 0) load += to_double(groups_[g].cost[j]) / b;
            }
            score[g] = load > 0 ? to_double(groups_[g].prob) / load : std::numeric_limits<double>::infinity();
        }
        std::vector<std::size_t> order(groups_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return table_.ids[groups_[a].positions.front()] < table_.ids[groups_[b].positions.front()];
        });
        std::vector<Group> sorted;
        for (std::size_t g : order) sorted.push_back(std::move(groups_[g]));
        groups_ = std::move(sorted);
    }

    bool same_atom(std::size_t a, std::size_t b) const {
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        if (table_.prob(ia) != table_.prob(ib)) return false;
        for (Eigen::Index j = 0; j < table_.costs.cols(); ++j) {
            if (table_.costs(ia, j) != table_.costs(ib, j)) return false;
        }
        return true;
    }

    // Per constraint, groups ordered by p / cost_j (zero cost first).
    void build_orders() {
        const auto m = table_.constraint_count();
        orders_.assign(m, {});
        for (std::size_t j = 0; j < m; ++j) {
            auto& order = orders_[j];
            order.resize(groups_.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const Scalar& ca = groups_[a].cost[j];
                const Scalar& cb = groups_[b].cost[j];
                if (ca == Scalar(0) || cb == Scalar(0)) return ca == Scalar(0) && cb != Scalar(0);
                return groups_[a].prob * cb > groups_[b].prob * ca;
            });
        }
    }

    // Fractional-relaxation bound on the probability still obtainable from
    // groups [from, end); the minimum over constraints is a valid bound.
    Scalar bound(std::size_t from, const std::vector<Scalar>& remaining) const {
        Scalar best(0);
        for (std::size_t g = from; g < groups_.size(); ++g) {
            best += groups_[g].prob * Scalar(static_cast<long long>(groups_[g].positions.size()));
        }
        for (std::size_t j = 0; j < orders_.size(); ++j) {
            Scalar cap = remaining[j];
            Scalar gained(0);
            for (std::size_t g : orders_[j]) {
                if (g < from) continue;
                const Group& grp = groups_[g];
                const Scalar count(static_cast<long long>(grp.positions.size()));
                const Scalar weight = grp.cost[j] * count;
                const Scalar value = grp.prob * count;
                if (grp.cost[j] == Scalar(0) || weight <= cap) {
                    gained += value;
                    cap -= weight;
                } else {
                    if (cap > Scalar(0)) gained += value * (cap / weight);
                    break;
                }
            }
            if (gained < best) best = gained;
        }
        return best;
    }

    void search(std::size_t g, std::vector<Scalar>& remaining, Scalar prob) {
        if (++nodes_ > kNodeLimit) throw NumericError("branch-and-bound node limit exceeded");
        if (have_best_) {
            const Scalar ub = prob + bound(g, remaining);
            if (ScalarTraits<Scalar>::greater(best_.probability, ub)) return;
        }
        if (g == groups_.size()) {
            consider_leaf();
            return;
        }
        const Group& grp = groups_[g];
        std::size_t cap = grp.positions.size();
        for (std::size_t j = 0; j < grp.cost.size(); ++j) cap = std::min(cap, max_copies(remaining[j], grp.cost[j], cap));
        for (std::size_t k = cap + 1; k-- > 0;) {
            const Scalar count(static_cast<long long>(k));
            for (std::size_t j = 0; j < grp.cost.size(); ++j) remaining[j] -= grp.cost[j] * count;
            counts_[g] = k;
            search(g + 1, remaining, prob + grp.prob * count);
            for (std::size_t j = 0; j < grp.cost.size(); ++j) remaining[j] += grp.cost[j] * count;
        }
        counts_[g] = 0;
    }

    void consider_leaf() {
        std::vector<std::size_t> positions = always_;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            positions.insert(positions.end(), groups_[g].positions.begin(),
                             groups_[g].positions.begin() + static_cast<std::ptrdiff_t>(counts_[g]));
        }
        SuccessSet<Scalar> candidate = make_set(table_, std::move(positions), Certificate::BranchBoundOptimal);
        if (!within_budget(candidate, std::span<const Scalar>(budgets_))) return;
        if (!have_best_ || preferred(candidate, best_)) {
            best_ = std::move(candidate);
            have_best_ = true;
        }
    }

    const AtomTable<Scalar>& table_;
    std::vector<std::size_t> always_;
    std::vector<Scalar> budgets_;
    std::vector<Group> groups_;
    std::vector<std::vector<std::size_t>> orders_;
    std::vector<std::size_t> counts_;
    SuccessSet<Scalar> best_;
    bool have_best_ = false;
    std::uint64_t nodes_ = 0;
};

// Screening slack for sums kept incrementally during enumeration; anything
// that passes is re-summed in id order and checked exactly.
inline constexpr double kWalkSlack = 1e-9;

template <typename Scalar>
std::vector<Scalar> cost_scale(const AtomTable<Scalar>& table, const std::vector<std::size_t>& positions,
                               std::span<const Scalar> budgets) {
    std::vector<Scalar> scale(budgets.begin(), budgets.end());
    for (std::size_t j = 0; j < scale.size(); ++j) {
        for (std::size_t pos : positions) {
            const Scalar& c = table.costs(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(j));
            scale[j] += c < Scalar(0) ? Scalar(-c) : c;
        }
    }
    return scale;
}

template <typename Scalar>
bool loosely_within(const std::vector<Scalar>& cost, std::span<const Scalar> budgets, const std::vector<Scalar>& scale) {
    for (std::size_t j = 0; j < budgets.size(); ++j) {
        if constexpr (ScalarTraits<Scalar>::is_exact) {
            if (cost[j] > budgets[j]) return false;
        } else {
            if (cost[j] > budgets[j] + kWalkSlack * scale[j] + 1e-15) return false;
        }
    }
    return true;
}

template <typename Scalar>
bool loosely_at_least(const Scalar& p, const Scalar& best) {
    if constexpr (ScalarTraits<Scalar>::is_exact) {
        return p >= best;
    } else {
        return p >= best - kWalkSlack;
    }
}

// Visits every subset of `positions` (bit b = positions[b]) in Gray-code
// order with running probability and cost sums.
template <typename Scalar, typename Visit>
void gray_walk(const AtomTable<Scalar>& table, const std::vector<std::size_t>& positions, std::size_t constraints,
               Visit&& visit) {
    Scalar p(0);
    std::vector<Scalar> cost(constraints, Scalar(0));
    std::uint64_t gray = 0;
    visit(gray, p, cost);
    const std::uint64_t subsets = std::uint64_t{1} << positions.size();
    for (std::uint64_t step = 1; step < subsets; ++step) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(step));
        gray ^= std::uint64_t{1} << bit;
        const auto i = static_cast<Eigen::Index>(positions[bit]);
        const bool added = (gray >> bit & 1U) != 0;
        if (added) {
            p += table.prob(i);
        } else {
            p -= table.prob(i);
        }
        for (std::size_t j = 0; j < constraints; ++j) {
            const Scalar& c = table.costs(i, static_cast<Eigen::Index>(j));
            if (added) {
                cost[j] += c;
            } else {
                cost[j] -= c;
            }
        }
        visit(gray, p, cost);
    }
}

}  // namespace detail

inline constexpr std::size_t kExhaustiveLimit = 20;

/// Optimal success set under all budgets. Zero-cost atoms are always members;
/// atoms that exceed a budget on their own are never members. The remaining
/// atoms are enumerated when there are at most 20 of them, otherwise solved
/// by branch-and-bound over groups of identical atoms.
template <typename Scalar>
SuccessSet<Scalar> solve_exact(const AtomTable<Scalar>& table, std::span<const Scalar> budgets) {
    detail::require_budgets(table, budgets);
    std::vector<std::size_t> always;
    std::vector<std::size_t> candidates;
    for (std::size_t pos = 0; pos < table.size(); ++pos) {
        if (detail::all_zero_costs(table, pos)) {
            always.push_back(pos);
        } else if (detail::fits_alone(table, pos, budgets)) {
            candidates.push_back(pos);
        }
    }

    if (candidates.size() > kExhaustiveLimit) {
        return detail::GroupedBranchBound<Scalar>(table, always, candidates, budgets).run();
    }

    // Candidates in ascending id order so mask bit order matches id order.
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) { return table.ids[a] < table.ids[b]; });
    SuccessSet<Scalar> best = detail::make_set(table, always, Certificate::ExhaustiveOptimal);
    const Scalar base = best.probability;
    const auto scale = detail::cost_scale(table, candidates, budgets);
    detail::gray_walk(table, candidates, budgets.size(), [&](std::uint64_t mask, const Scalar& p, const auto& cost) {
        if (!detail::loosely_within(cost, budgets, scale) || !detail::loosely_at_least(Scalar(base + p), best.probability)) {
            return;
        }
        std::vector<std::size_t> positions = always;
        for (std::size_t b = 0; b < candidates.size(); ++b) {
            if (mask >> b & 1U) positions.push_back(candidates[b]);
        }
        SuccessSet<Scalar> trial = detail::make_set(table, std::move(positions), Certificate::ExhaustiveOptimal);
        if (detail::within_budget(trial, budgets) && detail::preferred(trial, best)) best = std::move(trial);
    });
    return best;
}

template <typename Scalar>
SuccessSet<Scalar> solve_exact(const AtomTable<Scalar>& table, const std::vector<Scalar>& budgets) {
    return solve_exact(table, std::span<const Scalar>(budgets));
}

template <typename Scalar>
SuccessSet<Scalar> solve_exact(const AtomTable<Scalar>& table, std::initializer_list<Scalar> budgets) {
    return solve_exact(table, std::vector<Scalar>(budgets));
}

/// Every subset attaining the maximal probability within budget, sorted by
/// id list. Enumerates all 2^n subsets, so n <= 20.
template <typename Scalar>
std::vector<SuccessSet<Scalar>> solve_exact_all(const AtomTable<Scalar>& table, std::span<const Scalar> budgets) {
    detail::require_budgets(table, budgets);
    if (table.size() > kExhaustiveLimit) {
        throw CapabilityError("listing all optimal sets needs at most " + std::to_string(kExhaustiveLimit) +
                              " atoms, table has " + std::to_string(table.size()));
    }
    std::vector<std::size_t> all(table.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto scale = detail::cost_scale(table, all, budgets);
    // Near-optimal feasible sets; the final filter below is the exact one.
    std::vector<SuccessSet<Scalar>> near;
    Scalar best(0);
    detail::gray_walk(table, all, budgets.size(), [&](std::uint64_t mask, const Scalar& p, const auto& cost) {
        if (!detail::loosely_within(cost, budgets, scale) || !detail::loosely_at_least(p, best)) return;
        std::vector<std::size_t> positions;
        for (std::size_t b = 0; b < all.size(); ++b) {
            if (mask >> b & 1U) positions.push_back(b);
        }
        SuccessSet<Scalar> trial = detail::make_set(table, std::move(positions), Certificate::ExhaustiveOptimal);
        if (!detail::within_budget(trial, budgets)) return;
        if (trial.probability > best) {
            best = trial.probability;
            std::erase_if(near, [&](const auto& s) { return !detail::loosely_at_least(s.probability, best); });
        }
        near.push_back(std::move(trial));
    });
    std::vector<SuccessSet<Scalar>> out;
    for (auto& s : near) {
        if (ScalarTraits<Scalar>::same(s.probability, best)) out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.member_ids < b.member_ids; });
    return out;
}

template <typename Scalar>
std::vector<SuccessSet<Scalar>> solve_exact_all(const AtomTable<Scalar>& table, const std::vector<Scalar>& budgets) {
    return solve_exact_all(table, std::span<const Scalar>(budgets));
}

/// Maximal affordable prefix of a table sorted by nonincreasing probability
/// and nondecreasing cost; under that ordering the prefix is optimal.
/// Throws PreconditionError when the ordering does not hold.
template <typename Scalar>
SuccessSet<Scalar> solve_monotone_greedy(const AtomTable<Scalar>& table, const Scalar& budget) {
    using T = ScalarTraits<Scalar>;
    detail::require_single(table, budget);
    const auto n = static_cast<Eigen::Index>(table.size());
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (T::greater(table.prob(i + 1), table.prob(i)) || T::greater(table.costs(i, 0), table.costs(i + 1, 0))) {
            throw PreconditionError("greedy prefix needs p nonincreasing and cost nondecreasing (atom " +
                                    std::to_string(i) + ")");
        }
    }
    std::vector<std::size_t> prefix;
    Scalar used(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar next = used + table.costs(i, 0);
        if (!T::fits(next, budget)) break;
        used = next;
        prefix.push_back(static_cast<std::size_t>(i));
    }
    return detail::make_set(table, std::move(prefix), Certificate::MonotoneGreedy);
}

/// Level-set construction {p_i / cost_i >= a} with the smallest admissible a.
/// Not optimal on discrete spaces; kept for comparison.
template <typename Scalar>
SuccessSet<Scalar> solve_naive_ratio(const AtomTable<Scalar>& table, const Scalar& budget) {
    using T = ScalarTraits<Scalar>;
    detail::require_single(table, budget);
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> priced;
    for (std::size_t pos = 0; pos < table.size(); ++pos) {
        (table.costs(static_cast<Eigen::Index>(pos), 0) == Scalar(0) ? chosen : priced).push_back(pos);
    }
    auto ratio_greater = [&](std::size_t a, std::size_t b) {
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        return table.prob(ia) * table.costs(ib, 0) > table.prob(ib) * table.costs(ia, 0);
    };
    std::stable_sort(priced.begin(), priced.end(), ratio_greater);
    Scalar used(0);
    std::size_t i = 0;
    while (i < priced.size()) {
        // Next level: all atoms sharing the current ratio.
        std::size_t j = i + 1;
        const auto head = static_cast<Eigen::Index>(priced[i]);
        const Scalar head_ratio = table.prob(head) / table.costs(head, 0);
        while (j < priced.size()) {
            const auto idx = static_cast<Eigen::Index>(priced[j]);
            if (!T::same(Scalar(table.prob(idx) / table.costs(idx, 0)), head_ratio)) break;
            ++j;
        }
        Scalar level_cost = used;
        for (std::size_t k = i; k < j; ++k) level_cost += table.costs(static_cast<Eigen::Index>(priced[k]), 0);
        if (!T::fits(level_cost, budget)) break;
        used = level_cost;
        chosen.insert(chosen.end(), priced.begin() + static_cast<std::ptrdiff_t>(i),
                      priced.begin() + static_cast<std::ptrdiff_t>(j));
        i = j;
    }
    return detail::make_set(table, std::move(chosen), Certificate::NaiveDiagnostic);
}

/// Largest level set {ratio >= beta} whose constraint mass stays within gamma.
/// The set is certified optimal when its mass equals gamma exactly, or when it
/// is the whole space.
template <typename Scalar>
NeymanPearsonLevel<Scalar> neyman_pearson_threshold(std::span<const Scalar> ratios, std::span<const Scalar> masses,
                                                    const Scalar& gamma) {
    using T = ScalarTraits<Scalar>;
    if (ratios.size() != masses.size()) throw DomainError("ratio and mass vectors differ in length");
    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratios[a] > ratios[b]; });

    NeymanPearsonLevel<Scalar> out;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && T::same(ratios[order[j]], ratios[order[i]])) ++j;
        Scalar mass = out.mass;
        for (std::size_t k = i; k < j; ++k) mass += masses[order[k]];
        if (!T::fits(mass, gamma)) break;
        out.mass = mass;
        out.beta = ratios[order[j - 1]];
        out.members.insert(out.members.end(), order.begin() + static_cast<std::ptrdiff_t>(i),
                           order.begin() + static_cast<std::ptrdiff_t>(j));
        i = j;
    }
    std::sort(out.members.begin(), out.members.end());
    out.certified = T::same(out.mass, gamma) || out.members.size() == ratios.size();
    return out;
}

}  // namespace shortfall
