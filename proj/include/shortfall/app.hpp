#pragma once

// Command dispatch shared by the `shortfall` executable and the tests.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "shortfall/config.hpp"
#include "shortfall/report.hpp"

namespace shortfall {

enum ExitCode : int {
    kExitOk = 0,
    kExitVerifyMismatch = 1,
    kExitConfig = 2,
    kExitCapability = 3,
    kExitNumeric = 4,
};

inline constexpr int kMaxRationalPeriods = 12;
inline constexpr std::uint64_t kMinReportedPaths = 10'000;

struct RunOptions {
    std::string command;  // bs, crr, tri, verify, candidates
    std::string config_path;
    std::optional<std::string> json_out;
    bool rational = false;
    bool table = false;
    std::uint64_t paths = 1'000'000;
    std::uint64_t seed = 0;
    std::optional<std::string> report_path;
};

/// Solves the problem and fills a report. `with_candidates` lists every
/// optimal set (discrete models only).
SolveReport solve_problem(const ProblemSpec& spec, bool rational, bool with_candidates = false);

/// Checks of a report against an independent evaluation; `passed` is the
/// conjunction of all checks.
struct VerifyResult {
    std::map<std::string, std::string> values;
    bool passed = true;
};

VerifyResult verify_report(const ProblemSpec& spec, const SolveReport& report, std::uint64_t paths,
                           std::uint64_t seed);

void write_text(std::ostream& out, const VerifyResult& result);

/// Runs one command; the report goes to `out`, diagnostics to `err`.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace shortfall
