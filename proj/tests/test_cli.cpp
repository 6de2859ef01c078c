#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(LOANMIX_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
    const int status = pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, output};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::vector<double> column(const std::string& csv, std::size_t index) {
    std::vector<double> values;
    const auto rows = lines_of(csv);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::stringstream ss(rows[r]);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i++ == index) values.push_back(std::stod(cell));
        }
    }
    return values;
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("cli: solve emits a converged report") {
    const RunResult r = run_cli("solve -s quadratic");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("pool_ability:") != std::string::npos);
    CHECK(r.output.find("icl_only=") != std::string::npos);
    CHECK(r.output.find("break_even_residual:") != std::string::npos);
    CHECK(r.output.find("multistart_pool_values:") != std::string::npos);

    const RunResult fde = run_cli("solve -s quadratic --regime fde");
    CHECK(fde.exit_code == 0);
    CHECK(fde.output.find("funding_diversity") != std::string::npos);
}

TEST_CASE("cli: invalid scenarios exit with code 1 and a field message") {
    const auto path = write_temp("loanmix_bad_scenario.json", R"({
      "economy": {"R": 1.2, "A": 2.0},
      "signals": {"y1": 1.0, "y2": 3.0, "nodes": 11},
      "noise": {"kind": "two_point", "sigma": 1.4},
      "utility": {"family": "cara", "lambda": 0.5},
      "production": {"kind": "direct_wage", "omega": 1.5}
    })");
    const RunResult r = run_cli("solve -s " + path.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("sigma") != std::string::npos);
    std::filesystem::remove(path);

    CHECK(run_cli("solve -s no_such_scenario").exit_code == 1);
    CHECK(run_cli("sweep -s crra --param nope --values 1,2").exit_code == 1);
    CHECK(run_cli("sweep -s crra --param A --values ''").exit_code == 1);
}

TEST_CASE("cli: nonconvergence exits with code 2") {
    const auto path = write_temp("loanmix_slow_scenario.json", R"({
      "economy": {"R": 1.3, "A": 2.0},
      "signals": {"y1": 1.0, "y2": 3.0, "nodes": 41},
      "noise": {"kind": "two_point", "sigma": 0.6},
      "utility": {"family": "crra", "gamma": 2.0},
      "production": {"kind": "direct_wage", "omega": 1.2},
      "solver": {"max_iter": 3}
    })");
    const RunResult r = run_cli("solve -s " + path.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("did not converge") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("cli: compare reports the dominance verdict") {
    const RunResult r = run_cli("compare -s crra");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("pareto_improvement: true") != std::string::npos);
    CHECK(r.output.find("theorem_scope: true") != std::string::npos);
    CHECK(r.output.find("delta_pool_ability:") != std::string::npos);
}

TEST_CASE("cli: figure compatibility contract") {
    CHECK(run_cli("figure fig1 -s quadratic").exit_code == 1);
    CHECK(run_cli("figure fig2a -s crra").exit_code == 1);
    CHECK(run_cli("figure fig2b -s cara").exit_code == 1);
    CHECK(run_cli("figure fig9 -s crra").exit_code == 1);
}

TEST_CASE("cli: fig1 shows a nondecreasing share column") {
    const RunResult r = run_cli("figure fig1 -s crra");
    CHECK(r.exit_code == 0);
    const auto rows = lines_of(r.output);
    REQUIRE(!rows.empty());
    CHECK(rows[0] == "y,theta_pr,theta_fde");
    const auto theta = column(r.output, 1);
    REQUIRE(theta.size() == 41);
    for (std::size_t i = 1; i < theta.size(); ++i) CHECK(theta[i] >= theta[i - 1] - 1e-10);
    // the binary column only takes corner values
    for (const double v : column(r.output, 2)) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("cli: fig2a emits the unclamped diagnostics column") {
    const RunResult r = run_cli("figure fig2a -s quadratic");
    CHECK(r.exit_code == 0);
    const auto rows = lines_of(r.output);
    REQUIRE(!rows.empty());
    CHECK(rows[0] == "y,theta_pr,theta_fde,theta_raw");
    const auto share = column(r.output, 1);
    const auto raw = column(r.output, 3);
    REQUIRE(share.size() == 41);
    // contingent-only at the low end, with the raw value strictly negative there
    CHECK(share.front() == 0.0);
    CHECK(raw.front() < 0.0);
    // some raw preferences overshoot the admissible range before clamping
    bool overshoot = false;
    for (const double v : raw) overshoot = overshoot || v > 1.0;
    CHECK(overshoot);
    for (std::size_t i = 0; i < share.size(); ++i) {
        CHECK(share[i] >= 0.0);
        CHECK(share[i] <= 1.0);
    }
}

TEST_CASE("cli: fig2b stacks a raised-capital variant that lowers every share") {
    const RunResult r = run_cli("figure fig2b -s quadratic");
    CHECK(r.exit_code == 0);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 1 + 2 * 41);
    CHECK(rows[0] == "a_basic,y,theta_pr,theta_fde,theta_raw");
    const auto a_col = column(r.output, 0);
    const auto share = column(r.output, 2);
    CHECK(a_col.front() == 2.0);
    CHECK(a_col.back() == doctest::Approx(2.12).epsilon(1e-12));
    for (std::size_t i = 0; i < 41; ++i) CHECK(share[41 + i] <= share[i] + 1e-10);
    // the raised-capital panel eliminates full-CML funding
    for (std::size_t i = 41; i < 82; ++i) CHECK(share[i] < 1.0);
}

TEST_CASE("cli: sweep emits long-format rows") {
    const RunResult r = run_cli("sweep -s quadratic --param sigma2 --values 0,0.04,0.09");
    CHECK(r.exit_code == 0);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 1 + 3 * 41);
    CHECK(rows[0] == "param_value,y,theta,a_bar");
    const auto theta = column(r.output, 2);
    for (std::size_t i = 0; i < 41; ++i) {
        CHECK(theta[41 + i] <= theta[i] + 1e-10);
        CHECK(theta[82 + i] <= theta[41 + i] + 1e-10);
    }
}

TEST_CASE("cli: oracle agrees on references and catches a corrupted pool") {
    const RunResult ok = run_cli("oracle -s quadratic --samples 100000");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("oracle_verdict: ok") != std::string::npos);

    const RunResult bad = run_cli("oracle -s quadratic --samples 100000 --corrupt-pool-mean 0.05");
    CHECK(bad.exit_code == 3);
    CHECK(bad.output.find("oracle_verdict: BREACH") != std::string::npos);
}

TEST_CASE("cli: oracle on a noiseless scenario agrees to round-off") {
    const auto path = write_temp("loanmix_sigma0.json", R"({
      "economy": {"R": 1.2, "A": 2.0},
      "signals": {"y1": 1.8, "y2": 2.2, "nodes": 41},
      "noise": {"kind": "two_point", "sigma": 0.0},
      "utility": {"family": "quadratic", "alpha": 8.7, "beta": 1.5},
      "production": {"kind": "direct_wage", "omega": 1.5}
    })");
    const RunResult r = run_cli("oracle -s " + path.string() + " --samples 50000");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("oracle_verdict: ok") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("cli: compare flags a quadratic scenario outside the dominance scope") {
    const auto path = write_temp("loanmix_noisy_quadratic.json", R"({
      "economy": {"R": 1.2, "A": 2.0},
      "signals": {"y1": 1.8, "y2": 2.2, "nodes": 11},
      "noise": {"kind": "two_point", "sigma": 0.55},
      "utility": {"family": "quadratic", "alpha": 9.0, "beta": 1.5},
      "production": {"kind": "direct_wage", "omega": 1.5}
    })");
    const RunResult r = run_cli("compare -s " + path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("theorem_scope: false") != std::string::npos);
    CHECK(r.output.find("scope_note:") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("cli: --out writes the file") {
    const auto path = std::filesystem::temp_directory_path() / "loanmix_fig1.csv";
    const RunResult r = run_cli("figure fig1 -s cara --out " + path.string());
    CHECK(r.exit_code == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,theta_pr,theta_fde");
    std::filesystem::remove(path);
}
