#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "shortfall/app.hpp"

using namespace shortfall;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("shortfall_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path write(const std::string& name, const std::string& text) {
    const fs::path path = scratch() / name;
    std::ofstream(path) << text;
    return path;
}

std::string example(const std::string& name) { return std::string(SHORTFALL_EXAMPLES_DIR) + "/" + name; }

Outcome cli(const std::string& args) {
    const fs::path err_path = scratch() / "stderr.txt";
    const std::string command = std::string(SHORTFALL_CLI_PATH) + " " + args + " 2>" + err_path.string();
    Outcome result;
    FILE* pipe = ::popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer{};
    std::size_t n = 0;
    while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) result.out.append(buffer.data(), n);
    const int status = ::pclose(pipe);
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.err = slurp(err_path);
    return result;
}

const std::string kCrrBase =
    "market.crr.s0 = 1000\nmarket.crr.u = 0.1\nmarket.crr.d = -0.2\nmarket.crr.p = 1/4\nmarket.crr.n = 3\n"
    "claim.call.strike = 600\nloss.gamma = 1/2\nloss.alpha = 5\n";

}  // namespace

TEST_CASE("key-value and JSON configs read the same problem") {
    const ProblemSpec a = build_problem(parse_config_text(kCrrBase + "budget.x0 = 150  # trailing comment\n"));
    const ProblemSpec b = build_problem(parse_config_text(R"({
        "market": {"crr": {"s0": 1000, "u": 0.1, "d": -0.2, "p": "1/4", "n": 3}},
        "claim": {"call": {"strike": 600}},
        "loss": {"gamma": 0.5, "alpha": 5},
        "budget": {"x0": 150}})"));
    CHECK(a.model == ModelKind::Crr);
    CHECK(*a.crr == *b.crr);
    CHECK(a.crr->up == Rational(1, 10));
    CHECK(a.claim == b.claim);
    CHECK(a.loss == b.loss);
    CHECK(a.loss.family() == LossFamily::Power);
    CHECK(a.x0 == b.x0);

    const ConfigMap table = parse_key_values("claim.table = [1, 2/3, 0.5]\n");
    CHECK(table.at("claim.table").is_list);
    CHECK(table.at("claim.table").items == std::vector<std::string>{"1", "2/3", "0.5"});
}

TEST_CASE("config diagnostics") {
    auto message = [](const std::string& text) -> std::string {
        try {
            build_problem(parse_config_text(text));
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message(kCrrBase + "budget.x0 = 150\nbudget.x0 = 10\n").find("line 10") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0 = 150\nmarket.crr.q = 1\n").find("unknown key") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0\n").find("line 9") != std::string::npos);
    CHECK(message(kCrrBase).find("budget.x0") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0 = -1\n").find("budget.x0") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0 = 1\nmarket.bs.s = 100\n").find("exactly one") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0 = 1\nclaim.table = [1, 2]\n").find("exactly one") != std::string::npos);
    CHECK(message(kCrrBase + "budget.x0 = 1\nloss.family = cubic\n").find("loss.family") != std::string::npos);
    CHECK(message("market.crr.s0 = 1000\nmarket.crr.u = -0.1\nmarket.crr.d = -0.2\nmarket.crr.p = 1/4\n"
                  "market.crr.n = 3\nclaim.call.strike = 1\nbudget.x0 = 1\n")
              .find("market.crr") != std::string::npos);
    CHECK(message("{\"market\": {\"crr\": {\"s0\": true}}}").find("market.crr.s0") != std::string::npos);
    CHECK(message("{\"market\": ").find("JSON") != std::string::npos);
}

TEST_CASE("worked example through the executable") {
    const Outcome run = cli("crr " + example("crr_example.cfg") + " --rational --table");
    CHECK(run.code == 0);
    CHECK(run.out.find("success_probability = 0.9375 (15/16)") != std::string::npos);
    CHECK(run.out.find("modified_strike = 625 (625)") != std::string::npos);
    CHECK(run.out.find("candidate_count = 3") != std::string::npos);
    CHECK(run.out.find("outcome.duu = ") != std::string::npos);

    const Outcome listing = cli("candidates " + example("crr_example.cfg") + " --rational");
    CHECK(listing.code == 0);
    CHECK(listing.out.find("candidate.3.members") != std::string::npos);
    CHECK(listing.out.find("candidate.4.members") == std::string::npos);

    const Outcome floating = cli("crr " + example("crr_example.cfg"));
    CHECK(floating.code == 0);
    CHECK(floating.out.find("success_probability = 0.9375\n") != std::string::npos);
}

TEST_CASE("exit codes") {
    const fs::path bad = write("bad.cfg", kCrrBase + "budget.x0 = abc\n");
    Outcome run = cli("crr " + bad.string());
    CHECK(run.code == 2);
    CHECK(run.err.find("line 9 (budget.x0)") != std::string::npos);

    CHECK(cli("bs " + example("crr_example.cfg")).code == 2);
    CHECK(cli("crr " + (scratch() / "missing.cfg").string()).code == 2);
    CHECK(cli("crr").code == 2);
    CHECK(cli("nonsense x").code == 2);

    const fs::path long_tree = write("n25.cfg", "market.crr.s0 = 1\nmarket.crr.u = 0.1\nmarket.crr.d = -0.1\n"
                                                "market.crr.p = 1/2\nmarket.crr.n = 25\nclaim.call.strike = 1\n"
                                                "budget.x0 = 0.01\n");
    run = cli("crr " + long_tree.string());
    CHECK(run.code == 3);
    CHECK(run.err.find("24") != std::string::npos);

    const fs::path negative = write("neg.cfg", "market.bs.s = 100\nmarket.bs.mu = -0.01\nmarket.bs.sigma = 0.2\n"
                                               "market.bs.T = 1\nclaim.call.strike = 100\nbudget.x0 = 1\n");
    CHECK(cli("bs " + negative.string()).code == 3);
    CHECK(cli("bs " + example("bs_concave.cfg") + " --rational").code == 3);
    CHECK(cli("candidates " + example("bs_concave.cfg")).code == 3);
    const fs::path thirteen = write("n13.cfg", kCrrBase.substr(0, kCrrBase.find("market.crr.n")) + "market.crr.n = 13\n" +
                                                   "claim.call.strike = 600\nbudget.x0 = 150\n");
    CHECK(cli("crr " + thirteen.string() + " --rational").code == 3);
    CHECK(cli("crr " + thirteen.string()).code == 0);
}

TEST_CASE("budget above the shifted claim price gives a full hedge") {
    const fs::path rich = write("rich.cfg", kCrrBase + "budget.x0 = 10238/27\n");
    const Outcome run = cli("crr " + rich.string() + " --rational");
    CHECK(run.code == 0);
    CHECK(run.out.find("certificate = FullHedge") != std::string::npos);
    CHECK(run.out.find("success_probability = 1 (1)") != std::string::npos);

    const SolveReport bs = solve_problem(load_problem(example("bs_concave.cfg")), false);
    const fs::path rich_bs = write("rich_bs.cfg", "market.bs.s = 100\nmarket.bs.mu = 0.02\nmarket.bs.sigma = 0.2\n"
                                                  "market.bs.T = 1\nclaim.call.strike = 100\nbudget.x0 = 8\n");
    const SolveReport full = solve_problem(load_problem(rich_bs.string()), false);
    CHECK(bs.certificate == "ClosedForm");
    CHECK(full.certificate == "FullHedge");
    CHECK(full.success_probability == 1.0);
}

TEST_CASE("JSON report round trip") {
    for (const char* name : {"crr_example.cfg", "bs_concave.cfg", "bs_convex.cfg", "tri.json"}) {
        const ProblemSpec spec = load_problem(example(name));
        for (bool rational : {false, true}) {
            if (rational && spec.model == ModelKind::Bs) continue;
            const SolveReport report = solve_problem(spec, rational, spec.model != ModelKind::Bs);
            CHECK(report_from_json_string(to_json_string(report)) == report);
        }
    }
    const fs::path out = scratch() / "report.json";
    CHECK(cli("crr " + example("crr_example.cfg") + " --rational --json " + out.string()).code == 0);
    const SolveReport read = report_from_json_string(slurp(out));
    CHECK(read == solve_problem(load_problem(example("crr_example.cfg")), true));
    CHECK(read.exact.at("success_probability") == "15/16");
    const auto doc = nlohmann::json::parse(slurp(out));
    CHECK(doc.at("candidate_count") == 3);
}

TEST_CASE("identical inputs give byte-identical output") {
    const std::string args = "verify " + example("bs_convex.cfg") + " --paths 200000 --seed 11";
    const Outcome a = cli(args);
    const Outcome b = cli(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(cli("crr " + example("crr_example.cfg") + " --table").out ==
          cli("crr " + example("crr_example.cfg") + " --table").out);
    const fs::path j1 = scratch() / "j1.json";
    const fs::path j2 = scratch() / "j2.json";
    cli("bs " + example("bs_concave.cfg") + " --json " + j1.string());
    cli("bs " + example("bs_concave.cfg") + " --json " + j2.string());
    CHECK(slurp(j1) == slurp(j2));
}

TEST_CASE("verify accepts honest reports and rejects altered ones") {
    for (const char* name : {"crr_example.cfg", "tri.json", "bs_concave.cfg"}) {
        const fs::path report = scratch() / "verify.json";
        const std::string solve = std::string(name).find("bs") == 0 ? "bs" : std::string(name).find("tri") == 0 ? "tri" : "crr";
        CHECK(cli(solve + " " + example(name) + " --json " + report.string()).code == 0);
        CHECK(cli("verify " + example(name) + " --report " + report.string()).code == 0);

        auto doc = nlohmann::json::parse(slurp(report));
        doc["success_probability"] = 0.5;
        doc["exact"]["success_probability"] = "1/2";
        const fs::path altered = write("altered.json", doc.dump());
        const Outcome run = cli("verify " + example(name) + " --report " + altered.string());
        CHECK(run.code == 1);
        CHECK(run.out.find("verify.result = fail") != std::string::npos);
    }
    CHECK(cli("verify " + example("crr_example.cfg") + " --rational").code == 0);
    CHECK(cli("verify " + example("bs_concave.cfg") + " --paths 100").code == 2);
}
