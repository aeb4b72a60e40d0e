#pragma once

// Solver output in a form that is printed as `key = value` text and
// serialized to JSON. Numbers are doubles; in rational mode the exact values
// are kept alongside as fraction strings.

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace shortfall {

struct IntervalRow {
    double lower = 0.0;
    std::optional<double> upper;  // empty for +inf

    bool operator==(const IntervalRow&) const = default;
};

struct DecompositionRow {
    std::string kind;  // "call" or "digital"
    double strike = 0.0;
    double cash = 0.0;
    double weight = 0.0;

    bool operator==(const DecompositionRow&) const = default;
};

/// One lattice path or trinomial outcome.
struct OutcomeRow {
    std::string label;  // move string such as "udd", or "a" / "b" / "c"
    double probability = 0.0;
    double terminal_price = 0.0;
    double payoff = 0.0;
    double shifted = 0.0;
    bool in_set = false;

    bool operator==(const OutcomeRow&) const = default;
};

struct CandidateRow {
    std::vector<std::string> members;
    std::vector<double> modified_payoff;  // by outcome, in outcome order
    std::vector<std::string> modified_exact;  // rational mode only
    double budget_used = 0.0;

    bool operator==(const CandidateRow&) const = default;
};

struct SolveReport {
    std::string model;
    std::string certificate;
    std::string regime;  // bs regime, crr monotone case, trinomial table branch
    bool rational = false;
    double x0 = 0.0;
    double success_probability = 0.0;
    double budget_used = 0.0;
    double claim_price = 0.0;
    double shifted_price = 0.0;
    std::optional<double> modified_strike;
    std::map<std::string, double> constants;
    std::map<std::string, std::string> exact;  // rational mode: key -> "p/q"
    std::optional<std::size_t> candidate_count;
    std::vector<std::string> success_set;  // discrete models
    std::vector<IntervalRow> intervals;    // bs
    std::vector<DecompositionRow> decomposition;
    std::vector<OutcomeRow> outcomes;  // trinomial, or crr with N <= 6
    std::vector<CandidateRow> candidates;
    std::optional<bool> exact_check_agrees;
    std::optional<bool> table_agrees;
    std::optional<double> hedge_capital;

    bool operator==(const SolveReport&) const = default;
};

/// Deterministic `key = value` rendering; `with_outcomes` adds the per-outcome
/// table.
void write_text(std::ostream& out, const SolveReport& report, bool with_outcomes);

std::string to_json_string(const SolveReport& report);
SolveReport report_from_json_string(const std::string& text);

}  // namespace shortfall
