#pragma once

#include <cstdint>
#include <span>

#include "loanmix/choice.hpp"
#include "loanmix/equilibrium.hpp"

namespace loanmix {

struct OracleConfig {
    int grid_points = 10001;
    long samples = 1'000'000;
    std::uint64_t seed = 20240811;

    void validate() const;  // grid_points >= 3, samples >= 1000
};

/// Stateless counter-based uniform in [0, 1): a pure function of
/// (seed, index, stream). Reproducible under any evaluation order.
double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Standard normal draw via Box-Muller over streams (stream, stream + 1).
double counter_gaussian(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// Deterministic pairwise summation over a fixed index order.
double pairwise_sum(std::span<const double> values);

/// Brute-force argmax of expected utility over a uniform share grid on [0, 1];
/// ties resolve to the smaller share.
double grid_search_share(double y, const ChoiceContext& ctx, const OracleConfig& cfg);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// Sampled mean realized repayment at the equilibrium profile. Break-even
/// means the estimate matches R up to sampling error.
McEstimate monte_carlo_break_even(const Equilibrium& eq, const EconomyParams& params,
                                  const OracleConfig& cfg);

/// Sample-mean utility at (y, share). Samples outside the utility domain are
/// counted and reported through DomainError instead of being dropped.
McEstimate monte_carlo_expected_utility(double y, double share, const ChoiceContext& ctx,
                                        const OracleConfig& cfg);

}  // namespace loanmix
