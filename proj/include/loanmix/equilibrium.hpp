#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loanmix/choice.hpp"

namespace loanmix {

struct SolverOptions {
    double damping = 0.5;      // halved after three sign-alternating residuals
    double tolerance = 1e-12;  // relative to the unconditional mean signal
    int max_iterations = 10000;
};

/// Converged break-even state of one regime. `pool_ability` is NaN only for
/// the degenerate all-CML outcome of the binary regime, flagged below.
struct Equilibrium {
    Regime regime = Regime::Portfolio;
    double pool_ability = 0.0;
    double wage = 0.0;
    double capital = 0.0;
    double human_capital = 0.0;
    ShareProfile profile;
    SetPartition partition;
    std::vector<double> indifference;     // in-range equal-corner signals
    std::optional<CutoffReport> cutoffs;  // quadratic utility only
    double fixed_point_residual = 0.0;
    double break_even = 0.0;
    int iterations = 0;
    std::vector<double> trace;
    bool degenerate_pool = false;
};

/// Weighted mean ability of pool participants (nodes with share < 1).
double pool_mean(const ShareProfile& profile, const SignalGrid& grid);

Equilibrium solve_fixed_point(const EconomyParams& params, Regime regime,
                              const SolverOptions& opts = {});
Equilibrium solve_fixed_point_from(const EconomyParams& params, Regime regime, double start,
                                   const SolverOptions& opts = {});

/// Distinct fixed points reached from evenly spaced starts over the grid span.
/// More than one entry indicates multiplicity.
std::vector<double> probe_fixed_points(const EconomyParams& params, Regime regime,
                                       const SolverOptions& opts = {}, int starts = 5);

/// E[share * R + (1 - share) * R * y / pool] - R. Zero (up to round-off) at
/// any converged state; the pool mean is exactly the break-even plug number.
double break_even_residual(const Equilibrium& eq, const EconomyParams& params);

enum class Verdict { Better, Equal, Worse };

struct WelfareReport {
    Equilibrium portfolio;
    Equilibrium binary;
    double delta_pool_ability = 0.0;  // NaN when the binary outcome is degenerate
    Eigen::ArrayXd eu_portfolio;      // per node, at the regime's own state
    Eigen::ArrayXd eu_binary;
    std::vector<Verdict> verdict;  // per node, tolerance 1e-12 * local EU scale
    bool pareto_improvement = false;
    bool theorem_scope = false;  // dominance hypotheses hold for this scenario
    std::string scope_note;
    double entry_exit_bound = 0.0;  // lower bound on the pool-mean change
};

WelfareReport compare_regimes(const EconomyParams& params, const SolverOptions& opts = {});

/// Same comparison from explicit iteration starts; covers degenerate binary
/// outcomes that are unreachable from the default start.
WelfareReport compare_regimes_from(const EconomyParams& params, double portfolio_start,
                                   double binary_start, const SolverOptions& opts = {});

enum class SweepParam { RiskSlope, BasicCapital, NoiseVariance };

struct SweepPoint {
    double value = 0.0;
    bool converged = false;
    std::string note;  // failure reason when not converged
    double pool_ability = 0.0;
    ShareProfile profile;
    SetPartition partition;
};

struct SweepTable {
    SweepParam param = SweepParam::BasicCapital;
    std::vector<SweepPoint> points;
    bool share_nonincreasing = false;  // node-wise across consecutive converged points
    double max_violation = 0.0;
};

/// Solve the Portfolio regime across strictly increasing parameter values.
/// RiskSlope sweeps beta/alpha (quadratic only), BasicCapital sweeps A,
/// NoiseVariance sweeps sigma^2. Failed points are recorded, not fatal.
SweepTable comparative_static_sweep(SweepParam param, const std::vector<double>& values,
                                    const EconomyParams& params, const SolverOptions& opts = {});

struct AssumptionCheck {
    bool applicable = false;
    bool holds = false;
    double margin = 0.0;  // signed; positive means satisfied with room
};

struct AssumptionReport {
    AssumptionCheck interior_indifference;  // equal-corner signal strictly inside the grid
    AssumptionCheck profitable_investment;  // pool * wage > R
    // Quadratic-utility conditions; not applicable otherwise.
    AssumptionCheck satiation_margin;              // k > 0
    AssumptionCheck noise_below_portfolio_bound;   // sigma^2 < (k*pool / (2(pool*wage - R)))^2
    AssumptionCheck noise_below_cml_bound;         // sigma^2 <= (k / (2*wage))^2
    AssumptionCheck cml_boundary_reachable;        // grid top >= lower share=1 crossing
};

AssumptionReport assumption_checks(const Equilibrium& eq, const EconomyParams& params);

}  // namespace loanmix
