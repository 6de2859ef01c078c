#include "loanmix/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loanmix {

namespace {

constexpr double kVerdictRelTol = 1e-12;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

double pool_mean(const ShareProfile& profile, const SignalGrid& grid) {
    if (profile.size() != grid.size()) throw InternalError("profile and grid lengths differ");
    // sequential reduction in node order, so the result is reproducible and a
    // binary profile reduces bit-for-bit to the plain mean over its pool nodes
    double total = 0.0;
    double weighted = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        const double mass = grid.w(i) * (1.0 - profile.share(i));
        total += mass;
        weighted += mass * grid.y(i);
    }
    if (!(total > 1e-12))
        throw DegeneratePoolError(
            "the income-contingent pool is empty: every signal group repays through CML only");
    return weighted / total;
}

Equilibrium solve_fixed_point_from(const EconomyParams& params, Regime regime, double start,
                                   const SolverOptions& opts) {
    params.validate();
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw ValidationError("solver.damping: must lie in (0, 1]");
    if (!(opts.tolerance > 0.0)) throw ValidationError("solver.tol: must be positive");
    if (opts.max_iterations < 1) throw ValidationError("solver.max_iter: must be at least 1");

    const double human_capital = human_capital_stock(params);
    const ProductionSolution prod =
        solve_production(params.production, params.interest_rate, human_capital);
    const double scale = params.grid.mean();

    double pool = start;
    double damping = opts.damping;
    std::vector<double> trace{pool};
    double prev_residual = nan();
    int alternations = 0;

    for (int it = 0; it < opts.max_iterations; ++it) {
        const ChoiceContext ctx = make_context(params, pool, prod.wage);
        ShareProfile profile = solve_profile(ctx, regime);

        double next;
        try {
            next = pool_mean(profile, params.grid);
        } catch (const DegeneratePoolError&) {
            if (regime != Regime::FundingDiversity) throw;
            // Every group picked the fixed-repayment corner. The pool mean is
            // undefined; report the all-CML outcome instead of failing.
            Equilibrium eq;
            eq.regime = regime;
            eq.pool_ability = nan();
            eq.wage = prod.wage;
            eq.capital = prod.capital;
            eq.human_capital = human_capital;
            eq.partition = classify_sets(profile, params.grid);
            eq.profile = std::move(profile);
            eq.fixed_point_residual = 0.0;
            eq.break_even = 0.0;  // every repayment is exactly R
            eq.iterations = it;
            eq.trace = std::move(trace);
            eq.degenerate_pool = true;
            return eq;
        }

        const double residual = next - pool;
        if (std::abs(residual) <= opts.tolerance * scale) {
            Equilibrium eq;
            eq.regime = regime;
            eq.pool_ability = pool;
            eq.wage = prod.wage;
            eq.capital = prod.capital;
            eq.human_capital = human_capital;
            eq.partition = classify_sets(profile, params.grid);
            eq.indifference = indifference_signals(ctx);
            if (is_quadratic(params.utility)) eq.cutoffs = cutoff_signals_quadratic(ctx);
            eq.profile = std::move(profile);
            eq.fixed_point_residual = std::abs(residual);
            eq.iterations = it;
            eq.trace = std::move(trace);
            eq.break_even = break_even_residual(eq, params);
            return eq;
        }

        // Halve the damping after three consecutive sign alternations of the
        // residual; the map is smooth but not provably contractive.
        if (it > 0 && std::signbit(residual) != std::signbit(prev_residual)) {
            if (++alternations >= 3) {
                damping *= 0.5;
                alternations = 0;
            }
        } else {
            alternations = 0;
        }
        prev_residual = residual;
        pool = (1.0 - damping) * pool + damping * next;
        trace.push_back(pool);
    }
    throw ConvergenceError("pool fixed point did not converge within " +
                               std::to_string(opts.max_iterations) + " iterations",
                           std::move(trace));
}

Equilibrium solve_fixed_point(const EconomyParams& params, Regime regime,
                              const SolverOptions& opts) {
    return solve_fixed_point_from(params, regime, params.grid.mean(), opts);
}

std::vector<double> probe_fixed_points(const EconomyParams& params, Regime regime,
                                       const SolverOptions& opts, int starts) {
    if (starts < 1) throw ValidationError("multistart probe needs at least one start");
    const double lo = params.grid.lower();
    const double hi = params.grid.upper();
    std::vector<double> found;
    for (int i = 0; i < starts; ++i) {
        double s = starts == 1 ? 0.5 * (lo + hi)
                               : lo + (hi - lo) * static_cast<double>(i) / (starts - 1);
        if (s <= 0.0) s = 0.5 * (lo + hi);
        const Equilibrium eq = solve_fixed_point_from(params, regime, s, opts);
        const double a = eq.pool_ability;
        const bool fresh = std::none_of(found.begin(), found.end(),
                                        [&](double v) { return std::abs(v - a) <= 1e-9; });
        if (fresh) found.push_back(a);
    }
    std::sort(found.begin(), found.end());
    return found;
}

double break_even_residual(const Equilibrium& eq, const EconomyParams& params) {
    const double rate = params.interest_rate;
    double acc = 0.0;
    for (int i = 0; i < params.grid.size(); ++i) {
        const double share = eq.profile.share(i);
        double repayment = share * rate;
        if (share != 1.0)
            repayment += (1.0 - share) * rate * params.grid.y(i) / eq.pool_ability;
        acc += params.grid.w(i) * repayment;
    }
    return acc - rate;
}

WelfareReport compare_regimes(const EconomyParams& params, const SolverOptions& opts) {
    const double start = params.grid.mean();
    return compare_regimes_from(params, start, start, opts);
}

WelfareReport compare_regimes_from(const EconomyParams& params, double portfolio_start,
                                   double binary_start, const SolverOptions& opts) {
    WelfareReport rep;
    rep.portfolio = solve_fixed_point_from(params, Regime::Portfolio, portfolio_start, opts);
    rep.binary = solve_fixed_point_from(params, Regime::FundingDiversity, binary_start, opts);

    const int n = params.grid.size();
    const ChoiceContext ctx_pr = make_context(params, rep.portfolio.pool_ability, rep.portfolio.wage);
    // In the degenerate all-CML outcome expected utility does not depend on
    // the pool mean, so any positive placeholder evaluates it exactly.
    const double binary_pool = rep.binary.degenerate_pool ? 1.0 : rep.binary.pool_ability;
    const ChoiceContext ctx_fde = make_context(params, binary_pool, rep.binary.wage);

    rep.eu_portfolio.resize(n);
    rep.eu_binary.resize(n);
    rep.verdict.resize(static_cast<std::size_t>(n));
    bool any_better = false;
    bool any_worse = false;
    for (int i = 0; i < n; ++i) {
        const double y = params.grid.y(i);
        rep.eu_portfolio(i) = expected_utility(y, rep.portfolio.profile.share(i), ctx_pr);
        rep.eu_binary(i) = expected_utility(y, rep.binary.profile.share(i), ctx_fde);
        const double diff = rep.eu_portfolio(i) - rep.eu_binary(i);
        const double tol =
            kVerdictRelTol * std::max({std::abs(rep.eu_portfolio(i)), std::abs(rep.eu_binary(i)), 1.0});
        Verdict v = Verdict::Equal;
        if (diff > tol)
            v = Verdict::Better;
        else if (diff < -tol)
            v = Verdict::Worse;
        rep.verdict[static_cast<std::size_t>(i)] = v;
        any_better = any_better || v == Verdict::Better;
        any_worse = any_worse || v == Verdict::Worse;
    }
    rep.pareto_improvement = any_better && !any_worse;
    rep.delta_pool_ability = rep.portfolio.pool_ability - rep.binary.pool_ability;

    if (rep.binary.degenerate_pool) {
        rep.theorem_scope = false;
        rep.scope_note =
            "binary regime ends with an empty income-contingent pool; the dominance "
            "result does not cover this case";
        rep.entry_exit_bound = nan();
        return rep;
    }

    // Unnormalized pool-weighted mean minus the binary pool mean; the actual
    // pool-mean change always exceeds it whenever some weight sits in CML.
    const Eigen::ArrayXd mass = params.grid.w * (1.0 - rep.portfolio.profile.share);
    rep.entry_exit_bound = (mass * params.grid.y).sum() - rep.binary.pool_ability;

    if (is_quadratic(params.utility)) {
        const CutoffReport& cut = rep.portfolio.cutoffs.value();
        if (cut.corner_indifference.size() == 2 &&
            params.grid.upper() <= cut.corner_indifference[1]) {
            rep.theorem_scope = true;
            rep.scope_note = "quadratic utility with the grid top below the upper equal-corner "
                             "signal; dominance hypotheses hold";
        } else {
            rep.theorem_scope = false;
            rep.scope_note = cut.corner_indifference.size() == 2
                                 ? "quadratic utility with the grid extending beyond the upper "
                                   "equal-corner signal " +
                                       detail::num(cut.corner_indifference[1]) +
                                       "; dominance is not guaranteed"
                                 : "quadratic utility without a pair of equal-corner signals; "
                                   "dominance is not guaranteed";
        }
    } else {
        rep.theorem_scope = true;
        rep.scope_note = std::holds_alternative<Crra>(params.utility)
                             ? "CRRA utility; dominance hypotheses hold"
                             : "CARA utility; dominance hypotheses hold";
    }
    return rep;
}

SweepTable comparative_static_sweep(SweepParam param, const std::vector<double>& values,
                                    const EconomyParams& params, const SolverOptions& opts) {
    if (values.empty()) throw ValidationError("sweep: the value list is empty");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1]))
            throw ValidationError("sweep: values must be strictly increasing");
    if (param == SweepParam::RiskSlope && !is_quadratic(params.utility))
        throw ValidationError("sweep over beta/alpha requires quadratic utility");

    SweepTable table;
    table.param = param;
    for (const double v : values) {
        EconomyParams p = params;
        switch (param) {
            case SweepParam::RiskSlope: {
                const Quadratic q = *as_quadratic(params.utility);
                p.utility = Quadratic{q.alpha, q.alpha * v};
                break;
            }
            case SweepParam::BasicCapital:
                p.basic_capital = v;
                break;
            case SweepParam::NoiseVariance:
                if (v < 0.0) throw ValidationError("sweep: sigma^2 values must be nonnegative");
                p.noise.sigma = std::sqrt(v);
                break;
        }
        SweepPoint point;
        point.value = v;
        try {
            Equilibrium eq = solve_fixed_point(p, Regime::Portfolio, opts);
            point.converged = true;
            point.pool_ability = eq.pool_ability;
            point.profile = std::move(eq.profile);
            point.partition = std::move(eq.partition);
        } catch (const std::exception& e) {
            point.converged = false;
            point.note = e.what();
        }
        table.points.push_back(std::move(point));
    }

    double worst = 0.0;
    const SweepPoint* prev = nullptr;
    for (const SweepPoint& pt : table.points) {
        if (!pt.converged) continue;
        if (prev != nullptr)
            worst = std::max(worst, (pt.profile.share - prev->profile.share).maxCoeff());
        prev = &pt;
    }
    table.max_violation = std::max(0.0, worst);
    table.share_nonincreasing = worst <= 1e-10;
    return table;
}

AssumptionReport assumption_checks(const Equilibrium& eq, const EconomyParams& params) {
    AssumptionReport rep;
    const SignalGrid& grid = params.grid;

    rep.interior_indifference.applicable = true;
    if (!eq.indifference.empty()) {
        double margin = std::numeric_limits<double>::infinity();
        for (const double r : eq.indifference)
            margin = std::min({margin, r - grid.lower(), grid.upper() - r});
        rep.interior_indifference.margin = margin;
        rep.interior_indifference.holds = margin > 0.0;
    } else {
        rep.interior_indifference.margin = nan();
        rep.interior_indifference.holds = false;
    }

    rep.profitable_investment.applicable = !eq.degenerate_pool;
    if (!eq.degenerate_pool) {
        rep.profitable_investment.margin = eq.pool_ability * eq.wage - params.interest_rate;
        rep.profitable_investment.holds = rep.profitable_investment.margin > 0.0;
    }

    if (!is_quadratic(params.utility) || eq.degenerate_pool) return rep;

    const ChoiceContext ctx = make_context(params, eq.pool_ability, eq.wage);
    const QuadraticConstants qc = quadratic_constants(ctx);
    const double sigma2 = params.noise.sigma * params.noise.sigma;

    rep.satiation_margin = {true, qc.satiation_margin > 0.0, qc.satiation_margin};

    if (qc.satiation_margin > 0.0 && qc.pool_premium > 0.0) {
        const double portfolio_bound = qc.margin_over_rate / (2.0 * qc.pool_premium);
        rep.noise_below_portfolio_bound = {true, sigma2 < portfolio_bound * portfolio_bound,
                                           portfolio_bound * portfolio_bound - sigma2};
        const double cml_bound = qc.satiation_margin / (2.0 * eq.wage);
        rep.noise_below_cml_bound = {true, sigma2 <= cml_bound * cml_bound,
                                     cml_bound * cml_bound - sigma2};
        rep.cml_boundary_reachable.applicable = true;
        if (eq.cutoffs.has_value() && eq.cutoffs->cml_boundary_lo.has_value()) {
            rep.cml_boundary_reachable.margin = grid.upper() - *eq.cutoffs->cml_boundary_lo;
            rep.cml_boundary_reachable.holds = rep.cml_boundary_reachable.margin >= 0.0;
        } else {
            rep.cml_boundary_reachable.margin = nan();
            rep.cml_boundary_reachable.holds = false;
        }
    } else {
        rep.noise_below_portfolio_bound = {true, false, nan()};
        rep.noise_below_cml_bound = {true, false, nan()};
        rep.cml_boundary_reachable = {true, false, nan()};
    }
    return rep;
}

}  // namespace loanmix
