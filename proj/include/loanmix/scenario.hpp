#pragma once

#include <filesystem>
#include <string>

#include "loanmix/equilibrium.hpp"
#include "loanmix/oracle.hpp"

namespace loanmix {

struct Scenario {
    EconomyParams params;
    SolverOptions solver;
    OracleConfig oracle;
};

/// Parse a scenario document (JSON). Unknown keys and malformed values are
/// rejected with the offending path in the message.
Scenario parse_scenario(const std::string& text);

Scenario load_scenario(const std::filesystem::path& path);

/// Lossless serialization; parsing the result reproduces identical parameters.
std::string serialize_scenario(const Scenario& s);

/// Shipped defaults: "quadratic", "crra", or "cara".
Scenario reference_scenario(const std::string& name);

/// Resolve a CLI scenario argument: an existing path, a file under
/// $LOANMIX_SCENARIO_DIR, or a built-in reference name.
Scenario resolve_scenario(const std::string& arg);

}  // namespace loanmix
