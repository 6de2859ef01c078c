#include "loanmix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace loanmix {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

McEstimate from_samples(const std::vector<double>& x) {
    const long n = static_cast<long>(x.size());
    const double mean = pairwise_sum(x) / static_cast<double>(n);
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mean;
        sq[i] = d * d;
    }
    const double var = n > 1 ? pairwise_sum(sq) / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

/// Noise draw for sample `index`, matching the scenario's noise law:
/// a +-sigma coin for TwoPoint, a Gaussian for the Gauss-Hermite spec.
double sample_noise(const NoiseSpec& spec, std::uint64_t seed, std::uint64_t index,
                    std::uint64_t stream) {
    if (spec.sigma == 0.0) return 0.0;
    if (spec.kind == NoiseKind::TwoPoint)
        return counter_uniform(seed, index, stream) < 0.5 ? -spec.sigma : spec.sigma;
    return spec.sigma * counter_gaussian(seed, index, stream);
}

}  // namespace

void OracleConfig::validate() const {
    if (grid_points < 3) throw ValidationError("oracle.grid_points: need at least 3");
    if (samples < 1000) throw ValidationError("oracle.samples: need at least 1000");
}

double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::uint64_t z = mix64(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
    z = mix64(z ^ (index + 0x9E3779B97F4A7C15ull));
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double counter_gaussian(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    double u1 = counter_uniform(seed, index, stream);
    const double u2 = counter_uniform(seed, index, stream + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 64) {
        double acc = 0.0;
        for (const double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double grid_search_share(double y, const ChoiceContext& ctx, const OracleConfig& cfg) {
    cfg.validate();
    double best_share = 0.0;
    double best_value = expected_utility(y, 0.0, ctx);
    for (int i = 1; i < cfg.grid_points; ++i) {
        const double share = static_cast<double>(i) / (cfg.grid_points - 1);
        const double value = expected_utility(y, share, ctx);
        if (value > best_value) {
            best_value = value;
            best_share = share;
        }
    }
    return best_share;
}

McEstimate monte_carlo_break_even(const Equilibrium& eq, const EconomyParams& params,
                                  const OracleConfig& cfg) {
    cfg.validate();
    const SignalGrid& grid = params.grid;
    std::vector<double> cum(static_cast<std::size_t>(grid.size()));
    double running = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        running += grid.w(i);
        cum[static_cast<std::size_t>(i)] = running;
    }
    const double rate = params.interest_rate;
    std::vector<double> repayments(static_cast<std::size_t>(cfg.samples));
    for (long i = 0; i < cfg.samples; ++i) {
        const std::uint64_t idx64 = static_cast<std::uint64_t>(i);
        const double u = counter_uniform(cfg.seed, idx64, 0);
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        if (it == cum.end()) --it;
        const int node = static_cast<int>(it - cum.begin());
        const double eps = sample_noise(params.noise, cfg.seed, idx64, 1);
        const double share = eq.profile.share(node);
        double repayment = share * rate;
        if (share != 1.0)
            repayment += (1.0 - share) * rate * (grid.y(node) + eps) / eq.pool_ability;
        repayments[static_cast<std::size_t>(i)] = repayment;
    }
    return from_samples(repayments);
}

McEstimate monte_carlo_expected_utility(double y, double share, const ChoiceContext& ctx,
                                        const OracleConfig& cfg) {
    cfg.validate();
    const EconomyParams& params = *ctx.params;
    std::vector<double> values(static_cast<std::size_t>(cfg.samples));
    long violations = 0;
    double first_eps = 0.0;
    const char* first_why = nullptr;
    for (long i = 0; i < cfg.samples; ++i) {
        const double eps = sample_noise(params.noise, cfg.seed, static_cast<std::uint64_t>(i), 0);
        const double c = consumption(y, eps, share, ctx.pool_ability, ctx.wage, params);
        if (const char* why = utility_domain_violation(params.utility, c)) {
            if (violations++ == 0) {
                first_eps = eps;
                first_why = why;
            }
            values[static_cast<std::size_t>(i)] = 0.0;
            continue;
        }
        values[static_cast<std::size_t>(i)] = utility(params.utility, c);
    }
    if (violations > 0)
        throw DomainError(std::to_string(violations) + " of " + std::to_string(cfg.samples) +
                          " samples: " + first_why + " (first at y = " + detail::num(y) +
                          ", eps = " + detail::num(first_eps) + ")");
    return from_samples(values);
}

}  // namespace loanmix
