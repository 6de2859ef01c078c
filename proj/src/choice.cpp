#include "loanmix/choice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loanmix {

namespace {

constexpr double kFocRelTol = 1e-12;  // on |dEU/dshare|, relative to its value at share 0
constexpr int kMaxBisect = 200;
constexpr int kScanIntervals = 512;
constexpr double kRootWidth = 1e-12;
constexpr double kSetTol = 1e-9;

double raw_quadratic(double y, const ChoiceContext& ctx, const QuadraticConstants& qc) {
    const double x = y - ctx.pool_ability;
    const double s = ctx.params->noise.sigma;
    // noiseless and exactly at the pool mean: consumption is flat in the
    // share; keep the x -> 0 limit value instead of 0/0
    if (x == 0.0 && s == 0.0) return -qc.pool_premium;
    return qc.margin_over_rate * x / (x * x + s * s) - qc.pool_premium;
}

}  // namespace

ChoiceContext make_context(const EconomyParams& params, double pool_ability, double wage) {
    if (!(pool_ability > 0.0))
        throw ValidationError("pool mean ability must be positive, got " +
                              detail::num(pool_ability));
    if (!(wage > 0.0)) throw ValidationError("wage must be positive, got " + detail::num(wage));
    return ChoiceContext{&params, pool_ability, wage, noise_nodes(params.noise)};
}

QuadraticConstants quadratic_constants(const ChoiceContext& ctx) {
    const Quadratic* q = as_quadratic(ctx.params->utility);
    if (q == nullptr)
        throw ValidationError("quadratic closed form requested for a non-quadratic utility");
    const double rate = ctx.params->interest_rate;
    const double k = q->alpha / q->beta -
                     ((ctx.params->basic_capital + ctx.pool_ability) * ctx.wage - rate);
    return {k, k * ctx.pool_ability / rate, (ctx.pool_ability * ctx.wage - rate) / rate};
}

double expected_utility(double y, double share, const ChoiceContext& ctx) {
    const EconomyParams& params = *ctx.params;
    double acc = 0.0;
    for (int i = 0; i < ctx.noise.size(); ++i) {
        const double eps = ctx.noise.eps(i);
        const double c = consumption(y, eps, share, ctx.pool_ability, ctx.wage, params);
        if (const char* why = utility_domain_violation(params.utility, c))
            throw DomainError(std::string(why) + " at y = " + detail::num(y) +
                              ", eps = " + detail::num(eps) + ", c = " + detail::num(c));
        acc += ctx.noise.w(i) * utility(params.utility, c);
    }
    return acc;
}

double foc_derivative(double y, double share, const ChoiceContext& ctx) {
    const EconomyParams& params = *ctx.params;
    const double rate = params.interest_rate;
    double acc = 0.0;
    for (int i = 0; i < ctx.noise.size(); ++i) {
        const double eps = ctx.noise.eps(i);
        const double c = consumption(y, eps, share, ctx.pool_ability, ctx.wage, params);
        if (const char* why = utility_domain_violation(params.utility, c))
            throw DomainError(std::string(why) + " at y = " + detail::num(y) +
                              ", eps = " + detail::num(eps) + ", c = " + detail::num(c));
        acc += ctx.noise.w(i) * marginal_utility(params.utility, c) * (rate / ctx.pool_ability) *
               ((y + eps) - ctx.pool_ability);
    }
    return acc;
}

ShareResult optimal_share(double y, const ChoiceContext& ctx) {
    double share;
    const double d0 = foc_derivative(y, 0.0, ctx);
    if (d0 <= 0.0) {
        share = 0.0;
    } else {
        const double d1 = foc_derivative(y, 1.0, ctx);
        if (d1 >= 0.0) {
            share = 1.0;
        } else {
            // The objective is strictly concave in the share, so the
            // derivative decreases and [0, 1] brackets its unique root.
            double lo = 0.0;
            double hi = 1.0;
            const double scale = d0;
            share = std::numeric_limits<double>::quiet_NaN();
            for (int it = 0; it < kMaxBisect; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double f = foc_derivative(y, mid, ctx);
                if (std::abs(f) <= kFocRelTol * scale ||
                    hi - lo <= std::numeric_limits<double>::epsilon()) {
                    share = mid;
                    break;
                }
                (f > 0.0 ? lo : hi) = mid;
            }
            if (std::isnan(share))
                throw InternalError("share bisection failed to reach tolerance at y = " +
                                    detail::num(y));
        }
    }
    double raw = share;
    if (is_quadratic(ctx.params->utility))
        raw = raw_quadratic(y, ctx, quadratic_constants(ctx));
    return {share, raw};
}

ShareResult optimal_share_quadratic(double y, const ChoiceContext& ctx) {
    const QuadraticConstants qc = quadratic_constants(ctx);
    if (qc.satiation_margin <= 0.0 && y > ctx.pool_ability)
        throw AssumptionError(
            "satiation margin k = " + detail::num(qc.satiation_margin) +
            " is not positive; the closed form requires k > 0 above the pool mean (y = " +
            detail::num(y) + ")");
    const double raw = raw_quadratic(y, ctx, qc);
    return {std::clamp(raw, 0.0, 1.0), raw};
}

double binary_choice(double y, const ChoiceContext& ctx) {
    return expected_utility(y, 0.0, ctx) >= expected_utility(y, 1.0, ctx) ? 0.0 : 1.0;
}

std::vector<double> indifference_signals(const ChoiceContext& ctx) {
    const SignalGrid& grid = ctx.params->grid;
    const auto gap = [&](double y) {
        return expected_utility(y, 0.0, ctx) - expected_utility(y, 1.0, ctx);
    };
    std::vector<double> roots;
    const auto push = [&](double r) {
        if (roots.empty() || std::abs(roots.back() - r) > 1e-9) roots.push_back(r);
    };
    const double lo = grid.lower();
    const double hi = grid.upper();
    if (hi == lo) {
        if (gap(lo) == 0.0) roots.push_back(lo);
        return roots;
    }
    double a = lo;
    double fa = gap(a);
    for (int i = 1; i <= kScanIntervals; ++i) {
        const double b = lo + (hi - lo) * i / kScanIntervals;
        const double fb = gap(b);
        if (fa == 0.0) {
            push(a);
        } else if (fa * fb < 0.0) {
            double xa = a;
            double xb = b;
            double va = fa;
            while (xb - xa > kRootWidth) {
                const double m = 0.5 * (xa + xb);
                const double vm = gap(m);
                if (vm == 0.0) {
                    xa = m;
                    xb = m;
                    break;
                }
                if ((va > 0.0) == (vm > 0.0)) {
                    xa = m;
                    va = vm;
                } else {
                    xb = m;
                }
            }
            push(0.5 * (xa + xb));
        }
        a = b;
        fa = fb;
    }
    if (fa == 0.0) push(hi);
    return roots;
}

CutoffReport cutoff_signals_quadratic(const ChoiceContext& ctx) {
    const QuadraticConstants qc = quadratic_constants(ctx);
    if (qc.satiation_margin <= 0.0)
        throw AssumptionError("satiation margin k = " + detail::num(qc.satiation_margin) +
                              " is not positive; cutoff formulas require k > 0");
    if (qc.pool_premium <= 0.0)
        throw AssumptionError("pool mean times wage must exceed the gross rate (premium = " +
                              detail::num(qc.pool_premium) + ")");
    const double sigma = ctx.params->noise.sigma;
    CutoffReport rep;
    rep.peak_signal = ctx.pool_ability + sigma;

    // Roots of coef * x^2 - margin_over_rate * x + coef * sigma^2 in x = y - pool.
    const auto roots = [&](double coef) -> std::optional<std::pair<double, double>> {
        const double half = qc.margin_over_rate / (2.0 * coef);
        const double disc = half * half - sigma * sigma;
        if (disc < 0.0) return std::nullopt;
        const double s = std::sqrt(disc);
        return std::pair{ctx.pool_ability + half - s, ctx.pool_ability + half + s};
    };

    if (const auto p = roots(qc.pool_premium)) {
        rep.icl_boundary_lo = p->first;
        rep.icl_boundary_hi = p->second;
        rep.portfolio_region_exists = true;
    }
    if (const auto p = roots(qc.pool_premium + 1.0)) {
        rep.cml_boundary_lo = p->first;
        rep.cml_boundary_hi = p->second;
    }
    if (const auto p = roots(qc.pool_premium + 0.5)) {
        rep.corner_indifference.push_back(p->first);
        if (p->second != p->first) rep.corner_indifference.push_back(p->second);
    }
    return rep;
}

ShareProfile solve_profile(const ChoiceContext& ctx, Regime regime) {
    const SignalGrid& grid = ctx.params->grid;
    ShareProfile profile;
    profile.share.resize(grid.size());
    profile.raw.resize(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
        if (regime == Regime::Portfolio) {
            const ShareResult r = optimal_share(grid.y(i), ctx);
            profile.share(i) = r.share;
            profile.raw(i) = r.raw;
        } else {
            const double b = binary_choice(grid.y(i), ctx);
            profile.share(i) = b;
            profile.raw(i) = b;
        }
    }
    return profile;
}

int SetPartition::count(LoanSet s) const {
    int n = 0;
    for (const LoanSet l : label)
        if (l == s) ++n;
    return n;
}

SetPartition classify_sets(const ShareProfile& profile, const SignalGrid& grid) {
    if (profile.size() != grid.size())
        throw InternalError("profile and grid lengths differ");
    SetPartition part;
    part.label.reserve(static_cast<std::size_t>(profile.size()));
    for (int i = 0; i < profile.size(); ++i) {
        const double s = profile.share(i);
        if (s <= kSetTol)
            part.label.push_back(LoanSet::IclOnly);
        else if (s >= 1.0 - kSetTol)
            part.label.push_back(LoanSet::CmlOnly);
        else
            part.label.push_back(LoanSet::Portfolio);
    }
    return part;
}

}  // namespace loanmix
