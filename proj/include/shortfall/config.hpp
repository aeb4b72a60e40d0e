#pragma once

// Problem description read from a flat `key = value` file with dotted keys,
// or from the equivalent nested JSON object. Numbers are read exactly.
//
//   market.crr.{s0,u,d,p,n} | market.bs.{s,mu,sigma,T} | market.tri.{s,a,b,c,p1,p2,p3}
//   claim.call.strike | claim.table = [h1, h2, ...]
//   loss.{family,gamma,lambda,alpha}   family = power | scaled
//   budget.x0

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shortfall/black_scholes.hpp"
#include "shortfall/crr.hpp"
#include "shortfall/loss.hpp"
#include "shortfall/scalar.hpp"
#include "shortfall/trinomial.hpp"

namespace shortfall {

enum class ModelKind { Bs, Crr, Tri };

std::string to_string(ModelKind kind);

/// Raised for malformed or inconsistent configuration; the message names the
/// line or field.
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

struct ProblemSpec {
    ModelKind model = ModelKind::Crr;
    std::optional<CrrMarket<Rational>> crr;
    std::optional<TrinomialMarket<Rational>> tri;
    std::optional<BsMarket> bs;
    ClaimSpec<Rational> claim = ClaimSpec<Rational>::call(Rational(0));
    LossSpec<Rational> loss = LossSpec<Rational>::quantile();
    Rational x0{0};
};

/// Raw values by dotted key; a table value holds several entries.
struct ConfigValue {
    std::vector<std::string> items;
    bool is_list = false;
    int line = 0;  // 0 for JSON input
};

using ConfigMap = std::map<std::string, ConfigValue>;

ConfigMap parse_key_values(std::string_view text);
ConfigMap parse_json_config(std::string_view text);

/// Chooses JSON when the first non-blank character is '{'.
ConfigMap parse_config_text(std::string_view text);

ProblemSpec build_problem(const ConfigMap& values);

ProblemSpec load_problem(const std::string& path);

}  // namespace shortfall
