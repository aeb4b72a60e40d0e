#include "shortfall/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shortfall/verifier.hpp"

namespace shortfall {

namespace {

constexpr int kTablePeriods = 6;
constexpr std::size_t kCandidateAtoms = kExhaustiveLimit;
constexpr double kMcBand = 3.0;                // standard errors
constexpr double kQuadratureTolerance = 1e-6;  // relative, budget re-check
constexpr double kFloatTolerance = 1e-12;      // relative, discrete re-solve
constexpr double kReplicationTolerance = 1e-9;  // times s0, floating hedge wealth

const char* const kTriLabels[3] = {"a", "b", "c"};

template <typename S>
void put_exact(SolveReport& r, const std::string& key, const S& value) {
    if constexpr (ScalarTraits<S>::is_exact) r.exact[key] = fraction_string(value);
}

template <typename S>
void put_exact(SolveReport& r, const std::string& key, const std::optional<S>& value) {
    if (value) put_exact(r, key, *value);
}

SolveReport bs_report(const ProblemSpec& spec, bool with_candidates) {
    if (with_candidates) throw CapabilityError("candidate listing applies to the discrete models only");
    const BsMarket& m = *spec.bs;
    const auto claim = spec.claim.cast<double>();
    const auto loss = spec.loss.cast<double>();
    const double x0 = to_double(spec.x0);
    const BsSolution sol = solve_black_scholes(m, claim.strike(), loss, x0);

    SolveReport r;
    r.model = "bs";
    r.regime = to_string(sol.regime);
    r.certificate = sol.regime == BsCase::FullHedge ? "FullHedge" : "ClosedForm";
    r.x0 = x0;
    r.success_probability = sol.success_probability;
    r.budget_used = sol.budget_used;
    r.claim_price = price_call(m, claim.strike());
    r.shifted_price = price_call(m, sol.modified_strike);
    r.modified_strike = sol.modified_strike;
    const std::pair<const char*, const std::optional<double>*> named[] = {
        {"c3", &sol.c3}, {"c4", &sol.c4}, {"c5", &sol.c5},          {"c6", &sol.c6},
        {"c7", &sol.c7}, {"c8", &sol.c8}, {"c_bar", &sol.c_bar},
    };
    for (const auto& [name, value] : named) {
        if (*value) r.constants[name] = **value;
    }
    r.constants["iterations"] = sol.iterations;
    if (!sol.budget_monotone) r.constants["budget_monotone"] = 0.0;
    for (const auto& iv : sol.success_set) {
        r.intervals.push_back({iv.lower, std::isinf(iv.upper) ? std::nullopt : std::optional<double>(iv.upper)});
    }
    for (const auto& d : sol.decomposition) {
        r.decomposition.push_back({d.kind == InstrumentKind::Call ? "call" : "digital", d.strike, d.cash, d.weight});
    }
    r.hedge_capital = price(m, sol.decomposition);
    return r;
}

template <typename S>
SolveReport crr_report(const ProblemSpec& spec, bool with_candidates) {
    const auto market = spec.crr->cast<S>();
    const auto claim = spec.claim.cast<S>();
    const auto loss = spec.loss.cast<S>();
    const S x0 = scalar_cast<S>(spec.x0);
    const CrrSolution<S> sol = solve_crr(market, claim, loss, x0);
    const int n = market.periods;

    SolveReport r;
    r.model = "crr";
    r.rational = ScalarTraits<S>::is_exact;
    r.regime = to_string(sol.monotone);
    r.certificate = sol.full_hedge ? "FullHedge" : to_string(sol.set.certificate);
    r.x0 = to_double(x0);
    r.success_probability = to_double(sol.set.probability);
    r.budget_used = to_double(sol.plan.initial_capital);
    r.claim_price = to_double(sol.claim_price);
    r.shifted_price = to_double(sol.shifted_price);
    if (sol.modified_strike) r.modified_strike = to_double(*sol.modified_strike);
    r.constants["threshold"] = to_double(sol.threshold);
    r.constants["risk_neutral_p"] = to_double(market.risk_neutral());
    r.hedge_capital = to_double(sol.plan.initial_capital);
    put_exact(r, "x0", x0);
    put_exact(r, "success_probability", sol.set.probability);
    put_exact(r, "budget_used", sol.plan.initial_capital);
    put_exact(r, "hedge_capital", sol.plan.initial_capital);
    put_exact(r, "claim_price", sol.claim_price);
    put_exact(r, "shifted_price", sol.shifted_price);
    put_exact(r, "modified_strike", sol.modified_strike);
    put_exact(r, "constants.threshold", sol.threshold);
    put_exact(r, "constants.risk_neutral_p", market.risk_neutral());
    for (std::size_t id : sol.set.member_ids) r.success_set.push_back(path_moves(id, n));
    if (sol.exact) r.exact_check_agrees = sol.exact_agrees;
    if (n <= kTablePeriods) {
        for (const auto& path : sol.paths) {
            r.outcomes.push_back({path.moves, to_double(path.p_mass), to_double(path.terminal_price),
                                  to_double(sol.payoff[path.id]), to_double(sol.shifted[path.id]),
                                  sol.set.contains(path.id)});
        }
    }
    const bool listable = sol.paths.size() <= kCandidateAtoms;
    if (listable || with_candidates) {
        const auto all = crr_candidates(market, claim, loss, x0);
        r.candidate_count = all.size();
        if (with_candidates) {
            for (const auto& c : all) {
                CandidateRow row;
                row.budget_used = to_double(c.costs_used.front());
                for (std::size_t id : c.member_ids) row.members.push_back(path_moves(id, n));
                for (std::size_t id = 0; id < sol.paths.size(); ++id) {
                    const S value = c.contains(id) ? sol.shifted[id] : S(0);
                    row.modified_payoff.push_back(to_double(value));
                    if constexpr (ScalarTraits<S>::is_exact) row.modified_exact.push_back(fraction_string(value));
                }
                r.candidates.push_back(std::move(row));
            }
        }
    }
    return r;
}

template <typename S>
S superhedge_price(const VertexMeasures<S>& v, const Triple<S>& payoff) {
    const std::vector<std::size_t> all{0, 1, 2};
    return std::max(expected_cost(v.low, payoff, all), expected_cost(v.high, payoff, all));
}

template <typename S>
Triple<S> tri_payoff(const TrinomialMarket<S>& m, const ClaimSpec<S>& claim) {
    const Triple<S> prices = m.terminal_prices();
    return {claim.payoff(0, prices[0]), claim.payoff(1, prices[1]), claim.payoff(2, prices[2])};
}

template <typename S>
SolveReport tri_report(const ProblemSpec& spec, bool with_candidates) {
    const auto market = spec.tri->cast<S>();
    const auto claim = spec.claim.cast<S>();
    const auto loss = spec.loss.cast<S>();
    const S x0 = scalar_cast<S>(spec.x0);
    const TrinomialSolution<S> sol = solve_trinomial(market, claim, loss, x0);
    const Triple<S> payoff = tri_payoff(market, claim);
    const S used = std::max(sol.costs_used[0], sol.costs_used[1]);
    const S claim_price = superhedge_price(sol.vertices, payoff);
    const S shifted_price = superhedge_price(sol.vertices, sol.shifted);

    SolveReport r;
    r.model = "tri";
    r.rational = ScalarTraits<S>::is_exact;
    r.regime = sol.table_branch ? "table " + *sol.table_branch : "b <= 0";
    r.certificate = ScalarTraits<S>::fits(shifted_price, x0) ? "FullHedge" : to_string(sol.set.certificate);
    r.x0 = to_double(x0);
    r.success_probability = to_double(sol.set.probability);
    r.budget_used = to_double(used);
    r.claim_price = to_double(claim_price);
    r.shifted_price = to_double(shifted_price);
    if (claim.is_call()) r.modified_strike = to_double(modified_strike(claim, loss));
    r.constants["q_low"] = to_double(sol.vertices.q_low);
    r.constants["q_high"] = to_double(sol.vertices.q_high);
    r.constants["cost_low"] = to_double(sol.costs_used[0]);
    r.constants["cost_high"] = to_double(sol.costs_used[1]);
    if (sol.table_probability) r.constants["table_probability"] = to_double(*sol.table_probability);
    put_exact(r, "x0", x0);
    put_exact(r, "success_probability", sol.set.probability);
    put_exact(r, "budget_used", used);
    put_exact(r, "claim_price", claim_price);
    put_exact(r, "shifted_price", shifted_price);
    put_exact(r, "constants.q_low", sol.vertices.q_low);
    put_exact(r, "constants.q_high", sol.vertices.q_high);
    put_exact(r, "constants.cost_low", sol.costs_used[0]);
    put_exact(r, "constants.cost_high", sol.costs_used[1]);
    put_exact(r, "constants.table_probability", sol.table_probability);
    if (claim.is_call()) put_exact(r, "modified_strike", modified_strike(claim, loss));
    if (sol.table_branch) r.table_agrees = sol.table_agrees;
    for (std::size_t id : sol.set.member_ids) r.success_set.push_back(kTriLabels[id]);

    const Triple<S> p = market.probabilities();
    const Triple<S> prices = market.terminal_prices();
    for (std::size_t i = 0; i < 3; ++i) {
        r.outcomes.push_back({kTriLabels[i], to_double(p[i]), to_double(prices[i]), to_double(payoff[i]),
                              to_double(sol.shifted[i]), sol.set.contains(i)});
    }
    const auto all = solve_exact_all(trinomial_atoms(market, claim, loss), std::vector<S>{x0, x0});
    r.candidate_count = all.size();
    if (with_candidates) {
        for (const auto& c : all) {
            CandidateRow row;
            row.budget_used = to_double(std::max(c.costs_used[0], c.costs_used[1]));
            for (std::size_t id : c.member_ids) row.members.push_back(kTriLabels[id]);
            for (std::size_t i = 0; i < 3; ++i) {
                const S value = c.contains(i) ? sol.shifted[i] : S(0);
                row.modified_payoff.push_back(to_double(value));
                if constexpr (ScalarTraits<S>::is_exact) row.modified_exact.push_back(fraction_string(value));
            }
            r.candidates.push_back(std::move(row));
        }
    }
    return r;
}

void require_rational_supported(const ProblemSpec& spec) {
    if (spec.model == ModelKind::Bs) throw CapabilityError("--rational applies to the crr and tri models only");
    if (spec.model == ModelKind::Crr && spec.crr->periods > kMaxRationalPeriods) {
        throw CapabilityError("rational mode supports at most " + std::to_string(kMaxRationalPeriods) +
                              " periods; rerun without --rational");
    }
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300; }

void check(VerifyResult& result, const std::string& key, bool ok) {
    result.values[key] = ok ? "pass" : "fail";
    result.passed = result.passed && ok;
}

// Re-solve and compare the reported probability, then recount success
// outcome by outcome from the hedge's terminal wealth.
template <typename S>
void verify_crr(const ProblemSpec& spec, const SolveReport& report, VerifyResult& result) {
    const auto market = spec.crr->cast<S>();
    const auto claim = spec.claim.cast<S>();
    const auto loss = spec.loss.cast<S>();
    const CrrSolution<S> sol = solve_crr(market, claim, loss, scalar_cast<S>(spec.x0));
    const WealthRun<S> run = run_plan(market, sol.plan);
    std::vector<S> probs(sol.paths.size());
    for (const auto& path : sol.paths) probs[path.id] = path.p_mass;
    const S slack = ScalarTraits<S>::is_exact ? S(0) : S(kReplicationTolerance * to_double(market.s0));
    const S counted = enumerate_check<S>(probs, run.terminal, sol.payoff, loss, slack);
    result.values["verify.enumerated_probability"] = decimal_string(to_double(counted));
    result.values["verify.max_rebalance_gap"] = decimal_string(to_double(run.max_rebalance_gap));
    if constexpr (ScalarTraits<S>::is_exact) {
        result.values["verify.enumerated_probability_exact"] = fraction_string(counted);
        const auto it = report.exact.find("success_probability");
        check(result, "verify.enumerated_matches_report",
              it != report.exact.end() && it->second == fraction_string(counted));
        check(result, "verify.self_financing", run.max_rebalance_gap == 0);
    } else {
        check(result, "verify.enumerated_matches_report",
              close(to_double(counted), report.success_probability, kFloatTolerance));
        check(result, "verify.self_financing", to_double(run.max_rebalance_gap) <= kReplicationTolerance * to_double(market.s0));
    }
    check(result, "verify.resolve_matches_report",
          close(to_double(sol.set.probability), report.success_probability, kFloatTolerance));
    check(result, "verify.within_budget", report.budget_used <= report.x0 * (1 + kFloatTolerance) + 1e-15);
}

// The trinomial hedge superreplicates the modified claim; its terminal
// wealth is taken to be that claim.
template <typename S>
void verify_tri(const ProblemSpec& spec, const SolveReport& report, VerifyResult& result) {
    const auto market = spec.tri->cast<S>();
    const auto claim = spec.claim.cast<S>();
    const auto loss = spec.loss.cast<S>();
    const TrinomialSolution<S> sol = solve_trinomial(market, claim, loss, scalar_cast<S>(spec.x0));
    const Triple<S> payoff = tri_payoff(market, claim);
    Triple<S> wealth{S(0), S(0), S(0)};
    for (std::size_t id : sol.set.member_ids) wealth[id] = sol.shifted[id];
    const Triple<S> p = market.probabilities();
    const S counted = enumerate_check<S>(p, wealth, payoff, loss);
    result.values["verify.enumerated_probability"] = decimal_string(to_double(counted));
    if constexpr (ScalarTraits<S>::is_exact) {
        result.values["verify.enumerated_probability_exact"] = fraction_string(counted);
        const auto it = report.exact.find("success_probability");
        check(result, "verify.enumerated_matches_report",
              it != report.exact.end() && it->second == fraction_string(counted));
    } else {
        check(result, "verify.enumerated_matches_report",
              close(to_double(counted), report.success_probability, kFloatTolerance));
    }
    check(result, "verify.resolve_matches_report",
          close(to_double(sol.set.probability), report.success_probability, kFloatTolerance));
    check(result, "verify.within_budget", report.budget_used <= report.x0 * (1 + kFloatTolerance) + 1e-15);
}

void verify_bs(const ProblemSpec& spec, const SolveReport& report, std::uint64_t paths, std::uint64_t seed,
               VerifyResult& result) {
    if (paths < kMinReportedPaths) {
        throw DomainError("--paths must be at least " + std::to_string(kMinReportedPaths));
    }
    const BsMarket& m = *spec.bs;
    PriceSet set;
    for (const auto& iv : report.intervals) {
        set.push_back({iv.lower, iv.upper ? *iv.upper : std::numeric_limits<double>::infinity()});
    }
    const double kbar = modified_strike(spec.claim.cast<double>(), spec.loss.cast<double>());
    const McEstimate mc = mc_success_probability(m, set, {paths, seed});
    const double p = report.success_probability;
    // Standard error under the reported probability.
    const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(paths));
    const double z = se > 0.0 ? (mc.estimate - p) / se : (mc.estimate == p ? 0.0 : INFINITY);
    result.values["verify.mc_paths"] = std::to_string(paths);
    result.values["verify.mc_seed"] = std::to_string(seed);
    result.values["verify.mc_estimate"] = decimal_string(mc.estimate);
    result.values["verify.mc_std_error"] = decimal_string(mc.std_error);
    result.values["verify.mc_z"] = decimal_string(z);
    check(result, "verify.mc_within_3se", std::abs(z) <= kMcBand);

    const double budget = quadrature_budget(m, set, kbar);
    const double prob = quadrature_probability(m, set);
    result.values["verify.quadrature_budget"] = decimal_string(budget);
    result.values["verify.quadrature_probability"] = decimal_string(prob);
    check(result, "verify.quadrature_budget_matches",
          std::abs(budget - report.budget_used) <= kQuadratureTolerance * std::max(report.budget_used, 1.0));
    check(result, "verify.quadrature_probability_matches", std::abs(prob - p) <= kQuadratureTolerance);
    check(result, "verify.within_budget", report.budget_used <= report.x0 * (1 + kFloatTolerance) + 1e-15);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out || !(out << text)) throw DomainError("cannot write " + path);
}

}  // namespace

SolveReport solve_problem(const ProblemSpec& spec, bool rational, bool with_candidates) {
    if (rational) require_rational_supported(spec);
    switch (spec.model) {
        case ModelKind::Bs: return bs_report(spec, with_candidates);
        case ModelKind::Crr:
            return rational ? crr_report<Rational>(spec, with_candidates) : crr_report<double>(spec, with_candidates);
        case ModelKind::Tri:
            return rational ? tri_report<Rational>(spec, with_candidates) : tri_report<double>(spec, with_candidates);
    }
    throw DomainError("unknown model");
}

VerifyResult verify_report(const ProblemSpec& spec, const SolveReport& report, std::uint64_t paths,
                           std::uint64_t seed) {
    if (report.model != to_string(spec.model)) {
        throw DomainError("report is for model " + report.model + ", config describes " + to_string(spec.model));
    }
    VerifyResult result;
    result.values["verify.model"] = report.model;
    result.values["verify.reported_probability"] = decimal_string(report.success_probability);
    switch (spec.model) {
        case ModelKind::Bs: verify_bs(spec, report, paths, seed, result); break;
        case ModelKind::Crr:
            if (report.rational) {
                require_rational_supported(spec);
                verify_crr<Rational>(spec, report, result);
            } else {
                verify_crr<double>(spec, report, result);
            }
            break;
        case ModelKind::Tri:
            if (report.rational) {
                verify_tri<Rational>(spec, report, result);
            } else {
                verify_tri<double>(spec, report, result);
            }
            break;
    }
    result.values["verify.result"] = result.passed ? "pass" : "fail";
    return result;
}

void write_text(std::ostream& out, const VerifyResult& result) {
    for (const auto& [key, value] : result.values) out << key << " = " << value << '\n';
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const ProblemSpec spec = load_problem(options.config_path);
        const std::string& cmd = options.command;
        if ((cmd == "bs" || cmd == "crr" || cmd == "tri") && cmd != to_string(spec.model)) {
            throw ConfigError("command " + cmd + " does not match the config's market." + to_string(spec.model));
        }
        if (cmd == "verify") {
            const SolveReport report = options.report_path
                                           ? report_from_json_string(read_file(*options.report_path))
                                           : solve_problem(spec, options.rational);
            const VerifyResult result = verify_report(spec, report, options.paths, options.seed);
            write_text(out, result);
            if (options.json_out) write_file(*options.json_out, nlohmann::json(result.values).dump(2) + "\n");
            return result.passed ? kExitOk : kExitVerifyMismatch;
        }
        if (cmd != "bs" && cmd != "crr" && cmd != "tri" && cmd != "candidates") {
            throw ConfigError("unknown command " + cmd);
        }
        const SolveReport report = solve_problem(spec, options.rational, cmd == "candidates");
        if (options.table && spec.model == ModelKind::Crr && spec.crr->periods > kTablePeriods) {
            err << "note: the per-path table is limited to " << kTablePeriods << " periods\n";
        }
        write_text(out, report, options.table);
        if (options.json_out) write_file(*options.json_out, to_json_string(report));
        return kExitOk;
    } catch (const CapabilityError& e) {
        err << "error (capability): " << e.what() << '\n';
        return kExitCapability;
    } catch (const NumericError& e) {
        err << "error (numeric): " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DomainError& e) {
        err << "error (config): " << e.what() << '\n';
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << "error (config): " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error (numeric): " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace shortfall
