#pragma once

// Scalar support shared by all solvers. Discrete models are templated on the
// scalar type and instantiated with `double` (floating mode) and `Rational`
// (exact mode).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

#include "shortfall/errors.hpp"

namespace shortfall {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr bool is_exact = false;
    // Feasibility slack so that exactly-binding budgets survive rounding.
    static constexpr double kRelativeSlack = 1e-12;
    static constexpr double kAbsoluteSlack = 1e-15;

    static double to_double(double x) { return x; }

    static bool fits(double cost, double budget) {
        return cost <= budget * (1.0 + kRelativeSlack) + kAbsoluteSlack;
    }

    static bool same(double a, double b) {
        return std::abs(a - b) <= kRelativeSlack * std::max(std::abs(a), std::abs(b)) + kAbsoluteSlack;
    }

    // a is strictly larger than b beyond rounding noise.
    static bool greater(double a, double b) { return a > b && !same(a, b); }
};

template <>
struct ScalarTraits<Rational> {
    static constexpr bool is_exact = true;

    static double to_double(const Rational& x) { return x.convert_to<double>(); }
    static bool fits(const Rational& cost, const Rational& budget) { return cost <= budget; }
    static bool same(const Rational& a, const Rational& b) { return a == b; }
    static bool greater(const Rational& a, const Rational& b) { return a > b; }
};

template <typename Scalar>
double to_double(const Scalar& x) {
    return ScalarTraits<Scalar>::to_double(x);
}

template <typename Scalar>
Scalar positive_part(const Scalar& x) {
    return x > Scalar(0) ? x : Scalar(0);
}

template <typename Target>
Target scalar_cast(const Rational& x) {
    if constexpr (std::is_same_v<Target, Rational>) {
        return x;
    } else {
        return x.convert_to<Target>();
    }
}

// Largest r with r^n <= x, for x >= 0.
BigInt integer_root_floor(const BigInt& x, unsigned n);

// base^exponent when the result is rational, std::nullopt otherwise.
// Requires base >= 0 unless the exponent is an integer.
std::optional<Rational> exact_pow(const Rational& base, const Rational& exponent);

// base^exponent in the scalar's arithmetic. Exact mode throws CapabilityError
// when the result is irrational.
template <typename Scalar>
Scalar scalar_pow(const Scalar& base, const Scalar& exponent) {
    if constexpr (ScalarTraits<Scalar>::is_exact) {
        auto value = exact_pow(base, exponent);
        if (!value) {
            throw CapabilityError("power " + base.str() + "^" + exponent.str() +
                                  " is not rational; use floating mode");
        }
        return *value;
    } else {
        return std::pow(base, exponent);
    }
}

// Exact parse of "12", "-0.25", "1/4" or "1.5e-3". Throws DomainError on
// malformed input.
Rational parse_rational(std::string_view text);

// Shortest decimal string that round-trips to `value`, parsed exactly.
Rational rational_from_double(double value);

// "p/q" (or "p" when integral).
std::string fraction_string(const Rational& value);

// Shortest round-trip decimal rendering, the format used in reports.
std::string decimal_string(double value);

}  // namespace shortfall
