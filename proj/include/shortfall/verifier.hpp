#pragma once

// Independent checks of solver output: Monte Carlo and quadrature for the
// Black-Scholes sets, direct outcome enumeration for the discrete models.

#include <cstddef>
#include <cstdint>
#include <span>

#include "shortfall/black_scholes.hpp"
#include "shortfall/loss.hpp"

namespace shortfall {

struct McConfig {
    std::uint64_t paths = 1'000'000;
    std::uint64_t seed = 0;
    std::uint64_t batch = 1 << 16;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t paths = 0;
};

/// Standard normal draw for path `index`; a pure function of (seed, index).
double path_normal(std::uint64_t seed, std::uint64_t index);

/// Fraction of simulated S_T (under P) inside `set`, with its binomial
/// standard error. Batches run in parallel; hit counts are integers, so the
/// result does not depend on scheduling.
McEstimate mc_success_probability(const BsMarket& market, const PriceSet& set, const McConfig& config);

inline constexpr std::size_t kQuadratureNodes = 201;

/// E^Q[1_set (S_T - Kbar)^+] by Gauss-Legendre in the standardized
/// log-price, per interval, truncated at ten standard deviations.
double quadrature_budget(const BsMarket& market, const PriceSet& set, double modified_strike,
                         std::size_t nodes = kQuadratureNodes);

/// P(S_T in set) by the same quadrature under the objective measure.
double quadrature_probability(const BsMarket& market, const PriceSet& set, std::size_t nodes = kQuadratureNodes);

/// P[u((H - X_T)^+) <= alpha] over a finite outcome list, using
/// u((H - X)^+) <= alpha  <=>  X >= (H - u^{-1}(alpha))^+.
/// `tolerance` absorbs rounding in floating-point wealth.
template <typename Scalar>
Scalar enumerate_check(std::span<const Scalar> probabilities, std::span<const Scalar> terminal_wealth,
                       std::span<const Scalar> claim, const LossSpec<Scalar>& loss,
                       const Scalar& tolerance = Scalar(0)) {
    if (probabilities.size() != terminal_wealth.size() || probabilities.size() != claim.size()) {
        throw DomainError("outcome vectors differ in length");
    }
    const Scalar threshold = inverse_threshold(loss);
    Scalar total(0);
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const Scalar needed = positive_part(Scalar(claim[i] - threshold));
        bool success = terminal_wealth[i] + tolerance >= needed;
        if constexpr (!ScalarTraits<Scalar>::is_exact) {
            success = success || ScalarTraits<Scalar>::same(terminal_wealth[i], needed);
        }
        if (success) total += probabilities[i];
    }
    return total;
}

}  // namespace shortfall
