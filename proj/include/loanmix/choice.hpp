#pragma once

#include <optional>
#include <vector>

#include "loanmix/economy.hpp"

namespace loanmix {

/// One signal group's portfolio problem evaluated at a candidate pool mean
/// ability and a solved wage. Immutable value; safe to share across threads.
struct ChoiceContext {
    const EconomyParams* params = nullptr;
    double pool_ability = 0.0;
    double wage = 0.0;
    NoiseNodes noise;
};

ChoiceContext make_context(const EconomyParams& params, double pool_ability, double wage);

/// Constants of the quadratic closed form:
///   satiation_margin = alpha/beta - ((A + pool) * wage - R), required > 0
///   margin_over_rate = satiation_margin * pool / R
///   pool_premium     = (pool * wage - R) / R
struct QuadraticConstants {
    double satiation_margin;
    double margin_over_rate;
    double pool_premium;
};

QuadraticConstants quadratic_constants(const ChoiceContext& ctx);

double expected_utility(double y, double share, const ChoiceContext& ctx);

/// d E[u(c)] / d share: (R/pool) * E[u'(c) * (ability - pool)], the sum of the
/// expected-repayment motive and the (negative) insurance covariance motive.
double foc_derivative(double y, double share, const ChoiceContext& ctx);

struct ShareResult {
    double share;  // clamped to [0, 1]
    double raw;    // unclamped closed-form value under quadratic utility, else == share
};

/// Unique maximizer of expected utility over share in [0, 1]. Corner when the
/// derivative does not change sign; otherwise bisection of the first-order
/// condition (concavity guarantees the bracket).
ShareResult optimal_share(double y, const ChoiceContext& ctx);

/// Closed-form share under quadratic utility, clamped with the raw value kept.
ShareResult optimal_share_quadratic(double y, const ChoiceContext& ctx);

/// Restricted choice between the two pure funding channels. Ties go to the
/// income-contingent side (share 0).
double binary_choice(double y, const ChoiceContext& ctx);

/// Signals at which the two pure channels give equal expected utility, found
/// by a 512-interval sign scan over the grid span plus bisection refinement.
/// Empty when no crossing exists.
std::vector<double> indifference_signals(const ChoiceContext& ctx);

/// Boundary signals of the quadratic share profile. Boundaries whose
/// discriminant is negative are left unset rather than reported as errors.
struct CutoffReport {
    std::vector<double> corner_indifference;  // equal-corner signals, ascending
    std::optional<double> icl_boundary_lo;    // raw share crosses 0
    std::optional<double> icl_boundary_hi;
    std::optional<double> cml_boundary_lo;    // raw share crosses 1
    std::optional<double> cml_boundary_hi;
    double peak_signal = 0.0;                 // pool + sigma, maximizer of the raw share
    bool portfolio_region_exists = false;
};

CutoffReport cutoff_signals_quadratic(const ChoiceContext& ctx);

struct ShareProfile {
    Eigen::ArrayXd share;  // clamped CML share per grid node
    Eigen::ArrayXd raw;    // unclamped diagnostics (quadratic), else == share
    int size() const { return static_cast<int>(share.size()); }
};

enum class Regime { Portfolio, FundingDiversity };

/// Per-node choices across the whole grid: optimal shares under Portfolio,
/// binary corner choices under FundingDiversity.
ShareProfile solve_profile(const ChoiceContext& ctx, Regime regime);

enum class LoanSet { IclOnly, Portfolio, CmlOnly };

struct SetPartition {
    std::vector<LoanSet> label;
    int count(LoanSet s) const;
};

/// Node-wise classification with tolerance 1e-9 on the clamped share.
SetPartition classify_sets(const ShareProfile& profile, const SignalGrid& grid);

}  // namespace loanmix
