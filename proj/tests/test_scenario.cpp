#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "loanmix/scenario.hpp"

using namespace loanmix;

namespace {

const char* kQuadraticDoc = R"({
  "economy": {"R": 1.2, "A": 2.0},
  "signals": {"y1": 1.8, "y2": 2.2, "nodes": 41},
  "noise": {"kind": "two_point", "sigma": 0.3},
  "utility": {"family": "quadratic", "alpha": 8.7, "beta": 1.5},
  "production": {"kind": "direct_wage", "omega": 1.5},
  "solver": {"damping": 0.5, "tol": 1e-12, "max_iter": 10000},
  "oracle": {"seed": 20240811, "samples": 1000000, "grid_points": 10001}
})";

bool params_equal(const EconomyParams& a, const EconomyParams& b) {
    if (a.interest_rate != b.interest_rate || a.basic_capital != b.basic_capital) return false;
    if (a.grid.size() != b.grid.size()) return false;
    for (int i = 0; i < a.grid.size(); ++i)
        if (a.grid.y(i) != b.grid.y(i) || a.grid.w(i) != b.grid.w(i)) return false;
    if (a.noise.kind != b.noise.kind || a.noise.sigma != b.noise.sigma) return false;
    if (a.noise.kind == NoiseKind::GaussHermite && a.noise.gh_nodes != b.noise.gh_nodes)
        return false;
    if (a.utility.index() != b.utility.index()) return false;
    if (const Crra* f = std::get_if<Crra>(&a.utility)) {
        if (f->gamma != std::get<Crra>(b.utility).gamma) return false;
    } else if (const Cara* f = std::get_if<Cara>(&a.utility)) {
        if (f->lambda != std::get<Cara>(b.utility).lambda) return false;
    } else {
        const Quadratic& qa = std::get<Quadratic>(a.utility);
        const Quadratic& qb = std::get<Quadratic>(b.utility);
        if (qa.alpha != qb.alpha || qa.beta != qb.beta) return false;
    }
    if (a.production.index() != b.production.index()) return false;
    if (const DirectWage* d = std::get_if<DirectWage>(&a.production)) {
        if (d->wage != std::get<DirectWage>(b.production).wage) return false;
    } else if (std::get<CobbDouglas>(a.production).delta !=
               std::get<CobbDouglas>(b.production).delta) {
        return false;
    }
    return true;
}

std::string with_replacement(std::string doc, const std::string& from, const std::string& to) {
    const std::size_t pos = doc.find(from);
    REQUIRE(pos != std::string::npos);
    return doc.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("scenario parses and round-trips exactly") {
    const Scenario first = parse_scenario(kQuadraticDoc);
    CHECK(first.params.interest_rate == 1.2);
    CHECK(first.params.grid.size() == 41);
    CHECK(first.solver.max_iterations == 10000);
    CHECK(first.oracle.seed == 20240811);

    const Scenario second = parse_scenario(serialize_scenario(first));
    CHECK(params_equal(first.params, second.params));
    CHECK(first.solver.damping == second.solver.damping);
    CHECK(first.solver.tolerance == second.solver.tolerance);
    CHECK(first.solver.max_iterations == second.solver.max_iterations);
    CHECK(first.oracle.seed == second.oracle.seed);
    CHECK(first.oracle.samples == second.oracle.samples);
    CHECK(first.oracle.grid_points == second.oracle.grid_points);

    // the serialized form is itself stable
    CHECK(serialize_scenario(first) == serialize_scenario(second));
}

TEST_CASE("scenario defaults for optional sections") {
    std::string doc = kQuadraticDoc;
    doc = with_replacement(doc, "  \"solver\": {\"damping\": 0.5, \"tol\": 1e-12, \"max_iter\": 10000},\n", "");
    doc = with_replacement(doc, ",\n  \"oracle\": {\"seed\": 20240811, \"samples\": 1000000, \"grid_points\": 10001}", "");
    const Scenario sc = parse_scenario(doc);
    CHECK(sc.solver.damping == 0.5);
    CHECK(sc.solver.tolerance == 1e-12);
    CHECK(sc.solver.max_iterations == 10000);
    CHECK(sc.oracle.grid_points == 10001);
    CHECK(sc.oracle.samples == 1000000);
}

TEST_CASE("scenario accepts explicit node lists") {
    const char* doc = R"({
      "economy": {"R": 1.2, "A": 1.0},
      "signals": {"list": [[1.0, 0.25], [2.0, 0.5], [3.0, 0.25]]},
      "noise": {"kind": "two_point", "sigma": 0.5},
      "utility": {"family": "cara", "lambda": 0.5},
      "production": {"kind": "cobb_douglas", "delta": 0.3}
    })";
    const Scenario sc = parse_scenario(doc);
    CHECK(sc.params.grid.size() == 3);
    CHECK(sc.params.grid.w(1) == 0.5);
    CHECK(std::holds_alternative<CobbDouglas>(sc.params.production));
    const Scenario again = parse_scenario(serialize_scenario(sc));
    CHECK(params_equal(sc.params, again.params));
}

TEST_CASE("scenario rejections carry the offending path") {
    const auto expect_error = [](const std::string& doc, const std::string& needle) {
        try {
            parse_scenario(doc);
            FAIL_CHECK("expected a validation error mentioning " << needle);
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_error("{ not json", "scenario");
    expect_error(R"({"economy": {"R": 1.2, "A": 0}})", "signals");
    expect_error(with_replacement(kQuadraticDoc, "\"sigma\": 0.3", "\"sigma\": 0.3, \"typo\": 1"),
                 "noise.typo");
    expect_error(with_replacement(kQuadraticDoc, "\"R\": 1.2", "\"R\": \"fast\""), "economy.R");
    expect_error(with_replacement(kQuadraticDoc, "\"family\": \"quadratic\", \"alpha\": 8.7, \"beta\": 1.5",
                                  "\"family\": \"quadratic\", \"alpha\": 8.7"),
                 "utility.beta");
    expect_error(with_replacement(kQuadraticDoc, "\"family\": \"quadratic\", \"alpha\": 8.7, \"beta\": 1.5",
                                  "\"family\": \"cara\", \"lambda\": 0.5, \"alpha\": 8.7"),
                 "utility.alpha");
    expect_error(with_replacement(kQuadraticDoc, "two_point", "triangular"), "noise.kind");
    // a sigma larger than the lowest signal makes abilities negative
    expect_error(with_replacement(kQuadraticDoc, "\"sigma\": 0.3", "\"sigma\": 1.9"), "sigma");
    expect_error(with_replacement(kQuadraticDoc, "\"damping\": 0.5", "\"damping\": 1.5"),
                 "solver.damping");
    expect_error(with_replacement(kQuadraticDoc, "\"nodes\": 41", "\"nodes\": 1"), "nodes");
}

TEST_CASE("built-in references validate and expose the expected families") {
    CHECK(std::holds_alternative<Quadratic>(reference_scenario("quadratic").params.utility));
    CHECK(std::holds_alternative<Crra>(reference_scenario("crra").params.utility));
    CHECK(std::holds_alternative<Cara>(reference_scenario("cara").params.utility));
    CHECK_THROWS_AS(reference_scenario("exotic"), ValidationError);

    // the quadratic satiation level clears every consumption the grid can produce
    const EconomyParams& q = reference_scenario("quadratic").params;
    const Quadratic& u = std::get<Quadratic>(q.utility);
    const double wage = std::get<DirectWage>(q.production).wage;
    const double top = (q.basic_capital + q.grid.upper() + q.noise.sigma) * wage -
                       q.interest_rate;
    CHECK(u.alpha / u.beta > top);
}

TEST_CASE("shipped scenario files stay in sync with the built-ins") {
    namespace fs = std::filesystem;
    for (const char* name : {"quadratic", "crra", "cara"}) {
        const fs::path path = fs::path(LOANMIX_SCENARIO_DIR_SRC) / (std::string(name) + ".json");
        REQUIRE(fs::exists(path));
        const Scenario from_file = load_scenario(path);
        const Scenario builtin = reference_scenario(name);
        CHECK(params_equal(from_file.params, builtin.params));
    }
}

TEST_CASE("scenario resolution order: path, directory variable, then built-ins") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "loanmix_scenario_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "custom.json");
        out << kQuadraticDoc;
    }

    setenv("LOANMIX_SCENARIO_DIR", dir.string().c_str(), 1);
    CHECK(std::holds_alternative<Quadratic>(resolve_scenario("custom").params.utility));
    CHECK(std::holds_alternative<Quadratic>(resolve_scenario("custom.json").params.utility));
    CHECK(std::holds_alternative<Crra>(resolve_scenario("crra").params.utility));
    CHECK_THROWS_AS(resolve_scenario("missing_file.json"), ValidationError);
    unsetenv("LOANMIX_SCENARIO_DIR");

    CHECK(std::holds_alternative<Quadratic>(
        resolve_scenario((dir / "custom.json").string()).params.utility));
    CHECK_THROWS_AS(resolve_scenario("custom"), ValidationError);
    fs::remove_all(dir);
}
