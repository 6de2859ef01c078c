#include "loanmix/scenario.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

namespace loanmix {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ValidationError(path + ": " + why);
}

void check_keys(const Json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) fail(path + "." + item.key(), "unknown key");
    }
}

const Json& require_section(const Json& root, const char* name) {
    if (!root.contains(name)) fail(name, "missing section");
    const Json& s = root.at(name);
    if (!s.is_object()) fail(name, "must be an object");
    return s;
}

double require_number(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(path + "." + key, "missing value");
    const Json& v = j.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double number_or(const Json& j, const std::string& path, const char* key, double def) {
    if (!j.contains(key)) return def;
    const Json& v = j.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

long integer_or(const Json& j, const std::string& path, const char* key, long def) {
    if (!j.contains(key)) return def;
    const Json& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long>();
}

int require_integer(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(path + "." + key, "missing value");
    const Json& v = j.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::string require_string(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(path + "." + key, "missing value");
    const Json& v = j.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("scenario: top level must be an object");
    check_keys(root, "scenario",
               {"economy", "signals", "noise", "utility", "production", "solver", "oracle"});

    Scenario s;

    const Json& economy = require_section(root, "economy");
    check_keys(economy, "economy", {"R", "A"});
    s.params.interest_rate = require_number(economy, "economy", "R");
    s.params.basic_capital = require_number(economy, "economy", "A");

    const Json& signals = require_section(root, "signals");
    check_keys(signals, "signals", {"y1", "y2", "nodes", "list"});
    if (signals.contains("list")) {
        if (signals.contains("y1") || signals.contains("y2") || signals.contains("nodes"))
            fail("signals", "give either y1/y2/nodes or an explicit list, not both");
        const Json& list = signals.at("list");
        if (!list.is_array()) fail("signals.list", "expected an array of [y, w] pairs");
        std::vector<std::pair<double, double>> nodes;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Json& e = list.at(i);
            const std::string path = "signals.list[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() || !e.at(1).is_number())
                fail(path, "expected a [y, w] number pair");
            nodes.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
        }
        s.params.grid = SignalGrid::from_nodes(nodes);
    } else {
        const double y1 = require_number(signals, "signals", "y1");
        const double y2 = require_number(signals, "signals", "y2");
        const int nodes = require_integer(signals, "signals", "nodes");
        s.params.grid = SignalGrid::uniform(y1, y2, nodes);
    }

    const Json& noise = require_section(root, "noise");
    check_keys(noise, "noise", {"kind", "sigma", "gh_nodes"});
    const std::string noise_kind = require_string(noise, "noise", "kind");
    if (noise_kind == "two_point") {
        s.params.noise.kind = NoiseKind::TwoPoint;
        if (noise.contains("gh_nodes"))
            fail("noise.gh_nodes", "only valid for kind gauss_hermite");
    } else if (noise_kind == "gauss_hermite") {
        s.params.noise.kind = NoiseKind::GaussHermite;
        s.params.noise.gh_nodes =
            static_cast<int>(integer_or(noise, "noise", "gh_nodes", s.params.noise.gh_nodes));
    } else {
        fail("noise.kind", "expected two_point or gauss_hermite, got '" + noise_kind + "'");
    }
    s.params.noise.sigma = require_number(noise, "noise", "sigma");

    const Json& utility = require_section(root, "utility");
    const std::string family = require_string(utility, "utility", "family");
    if (family == "crra") {
        check_keys(utility, "utility", {"family", "gamma"});
        s.params.utility = Crra{require_number(utility, "utility", "gamma")};
    } else if (family == "cara") {
        check_keys(utility, "utility", {"family", "lambda"});
        s.params.utility = Cara{require_number(utility, "utility", "lambda")};
    } else if (family == "quadratic") {
        check_keys(utility, "utility", {"family", "alpha", "beta"});
        s.params.utility = Quadratic{require_number(utility, "utility", "alpha"),
                                     require_number(utility, "utility", "beta")};
    } else {
        fail("utility.family", "expected crra, cara, or quadratic, got '" + family + "'");
    }

    const Json& production = require_section(root, "production");
    const std::string prod_kind = require_string(production, "production", "kind");
    if (prod_kind == "direct_wage") {
        check_keys(production, "production", {"kind", "omega"});
        s.params.production = DirectWage{require_number(production, "production", "omega")};
    } else if (prod_kind == "cobb_douglas") {
        check_keys(production, "production", {"kind", "delta"});
        s.params.production = CobbDouglas{require_number(production, "production", "delta")};
    } else {
        fail("production.kind", "expected direct_wage or cobb_douglas, got '" + prod_kind + "'");
    }

    if (root.contains("solver")) {
        const Json& solver = root.at("solver");
        if (!solver.is_object()) fail("solver", "must be an object");
        check_keys(solver, "solver", {"damping", "tol", "max_iter"});
        s.solver.damping = number_or(solver, "solver", "damping", s.solver.damping);
        s.solver.tolerance = number_or(solver, "solver", "tol", s.solver.tolerance);
        s.solver.max_iterations = static_cast<int>(
            integer_or(solver, "solver", "max_iter", s.solver.max_iterations));
    }
    if (!(s.solver.damping > 0.0 && s.solver.damping <= 1.0))
        fail("solver.damping", "must lie in (0, 1]");
    if (!(s.solver.tolerance > 0.0)) fail("solver.tol", "must be positive");
    if (s.solver.max_iterations < 1) fail("solver.max_iter", "must be at least 1");

    if (root.contains("oracle")) {
        const Json& oracle = root.at("oracle");
        if (!oracle.is_object()) fail("oracle", "must be an object");
        check_keys(oracle, "oracle", {"seed", "samples", "grid_points"});
        if (oracle.contains("seed")) {
            const Json& v = oracle.at("seed");
            if (!v.is_number_integer() || v.get<long long>() < 0)
                fail("oracle.seed", "expected a nonnegative integer");
            s.oracle.seed = v.get<std::uint64_t>();
        }
        s.oracle.samples = integer_or(oracle, "oracle", "samples", s.oracle.samples);
        s.oracle.grid_points = static_cast<int>(
            integer_or(oracle, "oracle", "grid_points", s.oracle.grid_points));
    }

    s.params.validate();
    s.oracle.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario file not found or unreadable: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    Json root;
    root["economy"] = {{"R", s.params.interest_rate}, {"A", s.params.basic_capital}};

    Json list = Json::array();
    for (int i = 0; i < s.params.grid.size(); ++i)
        list.push_back(Json::array({s.params.grid.y(i), s.params.grid.w(i)}));
    root["signals"] = {{"list", std::move(list)}};

    if (s.params.noise.kind == NoiseKind::TwoPoint) {
        root["noise"] = {{"kind", "two_point"}, {"sigma", s.params.noise.sigma}};
    } else {
        root["noise"] = {{"kind", "gauss_hermite"},
                         {"sigma", s.params.noise.sigma},
                         {"gh_nodes", s.params.noise.gh_nodes}};
    }

    if (const Crra* f = std::get_if<Crra>(&s.params.utility)) {
        root["utility"] = {{"family", "crra"}, {"gamma", f->gamma}};
    } else if (const Cara* f = std::get_if<Cara>(&s.params.utility)) {
        root["utility"] = {{"family", "cara"}, {"lambda", f->lambda}};
    } else {
        const Quadratic& q = *as_quadratic(s.params.utility);
        root["utility"] = {{"family", "quadratic"}, {"alpha", q.alpha}, {"beta", q.beta}};
    }

    if (const DirectWage* d = std::get_if<DirectWage>(&s.params.production)) {
        root["production"] = {{"kind", "direct_wage"}, {"omega", d->wage}};
    } else {
        root["production"] = {{"kind", "cobb_douglas"},
                              {"delta", std::get<CobbDouglas>(s.params.production).delta}};
    }

    root["solver"] = {{"damping", s.solver.damping},
                      {"tol", s.solver.tolerance},
                      {"max_iter", s.solver.max_iterations}};
    root["oracle"] = {{"seed", s.oracle.seed},
                      {"samples", s.oracle.samples},
                      {"grid_points", s.oracle.grid_points}};
    return root.dump(2) + "\n";
}

Scenario reference_scenario(const std::string& name) {
    Scenario s;
    s.params.interest_rate = 1.2;
    s.params.basic_capital = 2.0;
    s.params.production = DirectWage{1.5};
    if (name == "quadratic") {
        s.params.grid = SignalGrid::uniform(1.8, 2.2, 41);
        s.params.noise = NoiseSpec{NoiseKind::TwoPoint, 0.3};
        s.params.utility = Quadratic{8.7, 1.5};
    } else if (name == "crra") {
        s.params.interest_rate = 1.3;
        s.params.production = DirectWage{1.2};
        s.params.grid = SignalGrid::uniform(1.0, 3.0, 41);
        s.params.noise = NoiseSpec{NoiseKind::TwoPoint, 0.6};
        s.params.utility = Crra{2.0};
    } else if (name == "cara") {
        s.params.grid = SignalGrid::uniform(1.0, 3.0, 41);
        s.params.noise = NoiseSpec{NoiseKind::TwoPoint, 0.9};
        s.params.utility = Cara{0.5};
    } else {
        throw ValidationError("unknown reference scenario '" + name +
                              "' (expected quadratic, crra, or cara)");
    }
    s.params.validate();
    return s;
}

Scenario resolve_scenario(const std::string& arg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::exists(arg, ec)) return load_scenario(arg);
    if (const char* dir = std::getenv("LOANMIX_SCENARIO_DIR")) {
        for (const fs::path cand : {fs::path(dir) / arg, fs::path(dir) / (arg + ".json")})
            if (fs::exists(cand, ec)) return load_scenario(cand);
    }
    if (arg == "quadratic" || arg == "crra" || arg == "cara") return reference_scenario(arg);
    throw ValidationError("scenario '" + arg +
                          "' not found: no such file, nothing under LOANMIX_SCENARIO_DIR, and "
                          "not a built-in name (quadratic, crra, cara)");
}

}  // namespace loanmix
