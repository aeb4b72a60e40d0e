#include "shortfall/scalar.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace shortfall {

namespace {

BigInt parse_digits(std::string_view digits, std::string_view whole) {
    BigInt value = 0;
    for (char ch : digits) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
            throw DomainError("malformed number '" + std::string(whole) + "'");
        }
        value = value * 10 + (ch - '0');
    }
    return value;
}

BigInt pow10(unsigned exponent) {
    return boost::multiprecision::pow(BigInt(10), exponent);
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
    if (text.empty()) {
        throw DomainError("malformed number '" + std::string(whole) + "'");
    }
    bool negative = false;
    if (text.front() == '+' || text.front() == '-') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    long long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view exp_text = text.substr(e + 1);
        text = text.substr(0, e);
        auto [ptr, ec] = std::from_chars(exp_text.data() + (exp_text.starts_with('+') ? 1 : 0),
                                         exp_text.data() + exp_text.size(), exponent);
        if (ec != std::errc{} || ptr != exp_text.data() + exp_text.size() || exp_text.empty()) {
            throw DomainError("malformed exponent in '" + std::string(whole) + "'");
        }
        if (exponent > 4000 || exponent < -4000) {
            throw DomainError("exponent out of range in '" + std::string(whole) + "'");
        }
    }
    std::string_view int_part = text;
    std::string_view frac_part;
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        int_part = text.substr(0, dot);
        frac_part = text.substr(dot + 1);
    }
    if (int_part.empty() && frac_part.empty()) {
        throw DomainError("malformed number '" + std::string(whole) + "'");
    }
    BigInt numerator = parse_digits(int_part, whole) * pow10(static_cast<unsigned>(frac_part.size())) +
                       parse_digits(frac_part, whole);
    exponent -= static_cast<long long>(frac_part.size());
    Rational value = exponent >= 0 ? Rational(numerator * pow10(static_cast<unsigned>(exponent)))
                                   : Rational(numerator, pow10(static_cast<unsigned>(-exponent)));
    return negative ? -value : value;
}

std::string_view trim(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    return text;
}

}  // namespace

BigInt integer_root_floor(const BigInt& x, unsigned n) {
    if (x < 0) throw DomainError("integer root of a negative number");
    if (n == 0) throw DomainError("zeroth root");
    if (x < 2 || n == 1) return x;
    unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(x)) + 1;
    BigInt r = BigInt(1) << (bits / n + 1);
    while (true) {
        BigInt next = ((n - 1) * r + x / boost::multiprecision::pow(r, n - 1)) / n;
        if (next >= r) break;
        r = next;
    }
    while (boost::multiprecision::pow(r, n) > x) --r;
    while (boost::multiprecision::pow(r + 1, n) <= x) ++r;
    return r;
}

std::optional<Rational> exact_pow(const Rational& base, const Rational& exponent) {
    BigInt p = numerator(exponent);
    BigInt q = denominator(exponent);
    if (base == 0) {
        if (exponent > 0) return Rational(0);
        if (exponent == 0) return Rational(1);
        return std::nullopt;
    }
    if (base < 0 && q != 1) return std::nullopt;
    if (boost::multiprecision::abs(p) > 4096 || q > 4096) return std::nullopt;

    const auto abs_p = static_cast<unsigned>(boost::multiprecision::abs(p));
    const auto root = static_cast<unsigned>(q);
    BigInt num = boost::multiprecision::pow(numerator(base), abs_p);
    BigInt den = boost::multiprecision::pow(denominator(base), abs_p);
    if (root != 1) {
        BigInt num_root = integer_root_floor(boost::multiprecision::abs(num), root);
        BigInt den_root = integer_root_floor(den, root);
        if (boost::multiprecision::pow(num_root, root) != boost::multiprecision::abs(num) ||
            boost::multiprecision::pow(den_root, root) != den) {
            return std::nullopt;
        }
        num = num_root;
        den = den_root;
    }
    Rational value(num, den);
    return p < 0 ? Rational(1) / value : value;
}

Rational parse_rational(std::string_view text) {
    std::string_view whole = trim(text);
    if (whole.empty()) throw DomainError("empty number");
    if (auto slash = whole.find('/'); slash != std::string_view::npos) {
        Rational num = parse_decimal(trim(whole.substr(0, slash)), whole);
        Rational den = parse_decimal(trim(whole.substr(slash + 1)), whole);
        if (den == 0) throw DomainError("zero denominator in '" + std::string(whole) + "'");
        return num / den;
    }
    return parse_decimal(whole, whole);
}

Rational rational_from_double(double value) {
    if (!std::isfinite(value)) throw DomainError("non-finite number");
    return parse_rational(decimal_string(value));
}

std::string fraction_string(const Rational& value) {
    if (denominator(value) == 1) return numerator(value).str();
    return numerator(value).str() + "/" + denominator(value).str();
}

std::string decimal_string(double value) {
    std::array<char, 64> buffer{};
    auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), ptr);
}

}  // namespace shortfall
