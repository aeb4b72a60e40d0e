#pragma once

// Loss functions u, acceptance levels alpha and the shifted claim
// (H - u^{-1}(alpha))^+ that every solver hedges on its success set.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shortfall/errors.hpp"
#include "shortfall/scalar.hpp"

namespace shortfall {

enum class LossFamily { Power, Scaled };

inline std::string to_string(LossFamily family) {
    return family == LossFamily::Power ? "power" : "scaled";
}

/// Loss u(x) = lambda * x^gamma (lambda = 1 for the power family) together
/// with the acceptance level alpha. Success on an outcome means
/// u((H - X_T)^+) <= alpha.
template <typename Scalar>
class LossSpec {
public:
    static LossSpec power(Scalar gamma, Scalar alpha) {
        return LossSpec(LossFamily::Power, Scalar(1), std::move(gamma), std::move(alpha));
    }

    static LossSpec scaled(Scalar lambda, Scalar gamma, Scalar alpha) {
        return LossSpec(LossFamily::Scaled, std::move(lambda), std::move(gamma), std::move(alpha));
    }

    // Identity loss with alpha = 0: plain quantile hedging.
    static LossSpec quantile() { return power(Scalar(1), Scalar(0)); }

    LossFamily family() const { return family_; }
    const Scalar& lambda() const { return lambda_; }
    const Scalar& gamma() const { return gamma_; }
    const Scalar& alpha() const { return alpha_; }

    LossSpec with_alpha(Scalar alpha) const { return LossSpec(family_, lambda_, gamma_, std::move(alpha)); }

    template <typename Target>
    LossSpec<Target> cast() const {
        if constexpr (std::is_same_v<Scalar, Target>) {
            return *this;
        } else {
            return family_ == LossFamily::Power
                       ? LossSpec<Target>::power(scalar_cast<Target>(gamma_), scalar_cast<Target>(alpha_))
                       : LossSpec<Target>::scaled(scalar_cast<Target>(lambda_), scalar_cast<Target>(gamma_),
                                                  scalar_cast<Target>(alpha_));
        }
    }

    bool operator==(const LossSpec&) const = default;

private:
    LossSpec(LossFamily family, Scalar lambda, Scalar gamma, Scalar alpha)
        : family_(family), lambda_(std::move(lambda)), gamma_(std::move(gamma)), alpha_(std::move(alpha)) {
        if (!(gamma_ > Scalar(0))) throw DomainError("loss exponent gamma must be positive");
        if (!(lambda_ > Scalar(0))) throw DomainError("loss scale lambda must be positive");
        if (alpha_ < Scalar(0)) throw DomainError("acceptance level alpha must be nonnegative");
    }

    LossFamily family_;
    Scalar lambda_;
    Scalar gamma_;
    Scalar alpha_;
};

/// u(x). Throws DomainError for x < 0.
template <typename Scalar>
Scalar eval_loss(const LossSpec<Scalar>& spec, const Scalar& x) {
    if (x < Scalar(0)) throw DomainError("loss evaluated at a negative shortfall");
    if (x == Scalar(0)) return Scalar(0);
    return spec.lambda() * scalar_pow(x, spec.gamma());
}

/// u^{-1}(alpha) = (alpha / lambda)^(1 / gamma).
template <typename Scalar>
Scalar inverse_threshold(const LossSpec<Scalar>& spec) {
    if (spec.alpha() == Scalar(0)) return Scalar(0);
    return scalar_pow(Scalar(spec.alpha() / spec.lambda()), Scalar(Scalar(1) / spec.gamma()));
}

/// (H - u^{-1}(alpha))^+ for a single outcome payoff H >= 0.
template <typename Scalar>
Scalar shifted_payoff(const LossSpec<Scalar>& spec, const Scalar& payoff) {
    return positive_part(Scalar(payoff - inverse_threshold(spec)));
}

enum class ClaimKind { Call, Table };

/// European call on the terminal price, or an explicit payoff per outcome.
template <typename Scalar>
class ClaimSpec {
public:
    static ClaimSpec call(Scalar strike) {
        if (strike < Scalar(0)) throw DomainError("call strike must be nonnegative");
        ClaimSpec claim;
        claim.kind_ = ClaimKind::Call;
        claim.strike_ = std::move(strike);
        return claim;
    }

    static ClaimSpec table(std::vector<Scalar> payoffs) {
        for (const auto& h : payoffs) {
            if (h < Scalar(0)) throw DomainError("claim payoffs must be nonnegative");
        }
        ClaimSpec claim;
        claim.kind_ = ClaimKind::Table;
        claim.payoffs_ = std::move(payoffs);
        return claim;
    }

    ClaimKind kind() const { return kind_; }
    bool is_call() const { return kind_ == ClaimKind::Call; }
    const Scalar& strike() const { return strike_; }
    std::span<const Scalar> payoffs() const { return payoffs_; }

    // Payoff on outcome `index` whose terminal price is `terminal_price`.
    Scalar payoff(std::size_t index, const Scalar& terminal_price) const {
        if (is_call()) return positive_part(Scalar(terminal_price - strike_));
        if (index >= payoffs_.size()) throw DomainError("claim table shorter than the outcome count");
        return payoffs_[index];
    }

    void require_outcomes(std::size_t count) const {
        if (!is_call() && payoffs_.size() != count) {
            throw DomainError("claim table has " + std::to_string(payoffs_.size()) + " payoffs, model has " +
                              std::to_string(count) + " outcomes");
        }
    }

    template <typename Target>
    ClaimSpec<Target> cast() const {
        if constexpr (std::is_same_v<Scalar, Target>) {
            return *this;
        } else {
            if (is_call()) return ClaimSpec<Target>::call(scalar_cast<Target>(strike_));
            std::vector<Target> out;
            out.reserve(payoffs_.size());
            for (const auto& h : payoffs_) out.push_back(scalar_cast<Target>(h));
            return ClaimSpec<Target>::table(std::move(out));
        }
    }

    bool operator==(const ClaimSpec&) const = default;

private:
    ClaimSpec() = default;

    ClaimKind kind_ = ClaimKind::Call;
    Scalar strike_{0};
    std::vector<Scalar> payoffs_;
};

/// K + u^{-1}(alpha): the strike of the shifted call, since
/// ((S - K)^+ - t)^+ = (S - K - t)^+ for nonnegative K and t.
template <typename Scalar>
Scalar modified_strike(const ClaimSpec<Scalar>& claim, const LossSpec<Scalar>& loss) {
    if (!claim.is_call()) throw DomainError("modified strike is defined for call claims only");
    return claim.strike() + inverse_threshold(loss);
}

}  // namespace shortfall
