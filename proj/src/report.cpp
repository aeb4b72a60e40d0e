#include "shortfall/report.hpp"

#include <sstream>

#include "json.hpp"
#include "shortfall/errors.hpp"
#include "shortfall/scalar.hpp"

namespace shortfall {

using nlohmann::json;

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
    j[key] = value ? json(*value) : json(nullptr);
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& value) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        value.reset();
    } else {
        value = it->get<T>();
    }
}

std::string join(const std::vector<std::string>& items) {
    std::string out = "{";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out + "}";
}

std::string num(double x) { return decimal_string(x); }

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

void to_json(json& j, const IntervalRow& r) {
    j = json{{"lower", r.lower}};
    put_optional(j, "upper", r.upper);
}
void from_json(const json& j, IntervalRow& r) {
    r.lower = j.at("lower").get<double>();
    get_optional(j, "upper", r.upper);
}

void to_json(json& j, const DecompositionRow& r) {
    j = json{{"kind", r.kind}, {"strike", r.strike}, {"cash", r.cash}, {"weight", r.weight}};
}
void from_json(const json& j, DecompositionRow& r) {
    j.at("kind").get_to(r.kind);
    j.at("strike").get_to(r.strike);
    j.at("cash").get_to(r.cash);
    j.at("weight").get_to(r.weight);
}

void to_json(json& j, const OutcomeRow& r) {
    j = json{{"label", r.label},     {"probability", r.probability}, {"terminal_price", r.terminal_price},
             {"payoff", r.payoff},   {"shifted", r.shifted},         {"in_set", r.in_set}};
}
void from_json(const json& j, OutcomeRow& r) {
    j.at("label").get_to(r.label);
    j.at("probability").get_to(r.probability);
    j.at("terminal_price").get_to(r.terminal_price);
    j.at("payoff").get_to(r.payoff);
    j.at("shifted").get_to(r.shifted);
    j.at("in_set").get_to(r.in_set);
}

void to_json(json& j, const CandidateRow& r) {
    j = json{{"members", r.members},
             {"modified_payoff", r.modified_payoff},
             {"modified_exact", r.modified_exact},
             {"budget_used", r.budget_used}};
}
void from_json(const json& j, CandidateRow& r) {
    j.at("members").get_to(r.members);
    j.at("modified_payoff").get_to(r.modified_payoff);
    j.at("modified_exact").get_to(r.modified_exact);
    j.at("budget_used").get_to(r.budget_used);
}

void to_json(json& j, const SolveReport& r) {
    j = json{{"model", r.model},
             {"certificate", r.certificate},
             {"regime", r.regime},
             {"rational", r.rational},
             {"x0", r.x0},
             {"success_probability", r.success_probability},
             {"budget_used", r.budget_used},
             {"claim_price", r.claim_price},
             {"shifted_price", r.shifted_price},
             {"constants", r.constants},
             {"exact", r.exact},
             {"success_set", r.success_set},
             {"intervals", r.intervals},
             {"decomposition", r.decomposition},
             {"outcomes", r.outcomes},
             {"candidates", r.candidates}};
    put_optional(j, "modified_strike", r.modified_strike);
    put_optional(j, "candidate_count", r.candidate_count);
    put_optional(j, "exact_check_agrees", r.exact_check_agrees);
    put_optional(j, "table_agrees", r.table_agrees);
    put_optional(j, "hedge_capital", r.hedge_capital);
}

void from_json(const json& j, SolveReport& r) {
    j.at("model").get_to(r.model);
    j.at("certificate").get_to(r.certificate);
    j.at("regime").get_to(r.regime);
    j.at("rational").get_to(r.rational);
    j.at("x0").get_to(r.x0);
    j.at("success_probability").get_to(r.success_probability);
    j.at("budget_used").get_to(r.budget_used);
    j.at("claim_price").get_to(r.claim_price);
    j.at("shifted_price").get_to(r.shifted_price);
    j.at("constants").get_to(r.constants);
    j.at("exact").get_to(r.exact);
    j.at("success_set").get_to(r.success_set);
    j.at("intervals").get_to(r.intervals);
    j.at("decomposition").get_to(r.decomposition);
    j.at("outcomes").get_to(r.outcomes);
    j.at("candidates").get_to(r.candidates);
    get_optional(j, "modified_strike", r.modified_strike);
    get_optional(j, "candidate_count", r.candidate_count);
    get_optional(j, "exact_check_agrees", r.exact_check_agrees);
    get_optional(j, "table_agrees", r.table_agrees);
    get_optional(j, "hedge_capital", r.hedge_capital);
}

void write_text(std::ostream& out, const SolveReport& r, bool with_outcomes) {
    auto line = [&](const std::string& key, const std::string& value) { out << key << " = " << value << '\n'; };
    // Exact fraction printed next to the decimal when available.
    auto value = [&](const std::string& key, double x) {
        const auto it = r.exact.find(key);
        line(key, it == r.exact.end() ? num(x) : num(x) + " (" + it->second + ")");
    };
    line("model", r.model);
    line("arithmetic", r.rational ? "rational" : "floating");
    line("certificate", r.certificate);
    if (!r.regime.empty()) line("regime", r.regime);
    value("x0", r.x0);
    value("success_probability", r.success_probability);
    value("budget_used", r.budget_used);
    value("claim_price", r.claim_price);
    value("shifted_price", r.shifted_price);
    if (r.modified_strike) value("modified_strike", *r.modified_strike);
    for (const auto& [key, x] : r.constants) value("constants." + key, x);
    if (r.hedge_capital) value("hedge_capital", *r.hedge_capital);
    if (r.candidate_count) line("candidate_count", std::to_string(*r.candidate_count));
    if (r.exact_check_agrees) line("exact_check_agrees", flag(*r.exact_check_agrees));
    if (r.table_agrees) line("table_agrees", flag(*r.table_agrees));
    if (r.model != "bs") line("success_set", join(r.success_set));
    if (!r.intervals.empty() || r.model == "bs") {
        // Lower sets are closed, upper sets open; the boundary has zero probability.
        std::vector<std::string> parts;
        for (const auto& iv : r.intervals) {
            parts.push_back(iv.lower <= 0.0 ? "S_T <= " + (iv.upper ? num(*iv.upper) : std::string("inf"))
                                            : "S_T > " + num(iv.lower));
        }
        line("success_set", parts.empty() ? "{}" : join(parts));
    }
    for (std::size_t i = 0; i < r.decomposition.size(); ++i) {
        const auto& d = r.decomposition[i];
        const std::string prefix = "decomposition." + std::to_string(i);
        line(prefix, d.kind == "call" ? num(d.weight) + " x call(" + num(d.strike) + ")"
                                      : num(d.weight) + " x digital(" + num(d.strike) + ", " + num(d.cash) + ")");
    }
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        const auto& c = r.candidates[i];
        const std::string prefix = "candidate." + std::to_string(i + 1);
        line(prefix + ".members", join(c.members));
        std::vector<std::string> payoff;
        for (std::size_t k = 0; k < c.modified_payoff.size(); ++k) {
            payoff.push_back(c.modified_exact.empty() ? num(c.modified_payoff[k]) : c.modified_exact[k]);
        }
        line(prefix + ".modified_payoff", "[" + join(payoff).substr(1, join(payoff).size() - 2) + "]");
        line(prefix + ".budget_used", num(c.budget_used));
    }
    if (with_outcomes) {
        for (const auto& o : r.outcomes) {
            line("outcome." + o.label, "p=" + num(o.probability) + " price=" + num(o.terminal_price) + " H=" +
                                           num(o.payoff) + " Hbar=" + num(o.shifted) + " in_set=" + flag(o.in_set));
        }
    }
}

std::string to_json_string(const SolveReport& report) { return json(report).dump(2) + "\n"; }

SolveReport report_from_json_string(const std::string& text) {
    try {
        return json::parse(text).get<SolveReport>();
    } catch (const json::exception& e) {
        throw DomainError(std::string("report JSON: ") + e.what());
    }
}

}  // namespace shortfall
