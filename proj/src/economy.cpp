#include "loanmix/economy.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace loanmix {

namespace {

template <class... Ts>
struct Overload : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

}  // namespace

SignalGrid SignalGrid::uniform(double lo, double hi, int nodes) {
    if (nodes < 2) throw ValidationError("signals.nodes: a uniform grid needs at least 2 nodes");
    if (!(hi > lo)) throw ValidationError("signals.y2: must exceed signals.y1");
    SignalGrid g;
    g.y = Eigen::ArrayXd::LinSpaced(nodes, lo, hi);
    g.w = Eigen::ArrayXd::Constant(nodes, 1.0 / nodes);
    g.validate();
    return g;
}

SignalGrid SignalGrid::from_nodes(const std::vector<std::pair<double, double>>& nodes) {
    if (nodes.empty()) throw ValidationError("signals.list: must not be empty");
    SignalGrid g;
    g.y.resize(static_cast<Eigen::Index>(nodes.size()));
    g.w.resize(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        g.y(static_cast<Eigen::Index>(i)) = nodes[i].first;
        g.w(static_cast<Eigen::Index>(i)) = nodes[i].second;
    }
    g.validate();
    return g;
}

void SignalGrid::validate() const {
    if (y.size() == 0 || y.size() != w.size())
        throw ValidationError("signals: empty grid or mismatched value/weight lengths");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(w(i) > 0.0))
            throw ValidationError("signals: weight at index " + std::to_string(i) +
                                  " must be positive, got " + detail::num(w(i)));
        if (i > 0 && !(y(i) > y(i - 1)))
            throw ValidationError("signals: values must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
    if (y(0) < 0.0)
        throw ValidationError("signals.y1: signals must be nonnegative, got " + detail::num(y(0)));
    const double total = w.sum();
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError("signals: weights must sum to 1, got " + detail::num(total));
}

NoiseNodes noise_nodes(const NoiseSpec& spec) {
    if (spec.sigma < 0.0)
        throw ValidationError("noise.sigma: must be nonnegative, got " + detail::num(spec.sigma));
    NoiseNodes out;
    if (spec.kind == NoiseKind::TwoPoint) {
        if (spec.sigma == 0.0) {
            out.eps = Eigen::ArrayXd::Zero(1);
            out.w = Eigen::ArrayXd::Ones(1);
        } else {
            out.eps.resize(2);
            out.w.resize(2);
            out.eps << -spec.sigma, spec.sigma;
            out.w << 0.5, 0.5;
        }
        return out;
    }
    const int n = spec.gh_nodes;
    if (n < 2) throw ValidationError("noise.gh_nodes: the Gauss-Hermite rule needs at least 2 nodes");
    if (spec.sigma == 0.0) {
        out.eps = Eigen::ArrayXd::Zero(1);
        out.w = Eigen::ArrayXd::Ones(1);
        return out;
    }
    // Golub-Welsch on the Jacobi matrix of the Hermite polynomials
    // (weight e^{-x^2}): off-diagonal sqrt(i/2), eigenvalues are the nodes and
    // squared first eigenvector components the normalized weights.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = std::sqrt(i / 2.0);
        jacobi(i, i - 1) = b;
        jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw InternalError("Gauss-Hermite eigen decomposition failed");
    out.eps = std::sqrt(2.0) * spec.sigma * solver.eigenvalues().array();
    out.w = solver.eigenvectors().row(0).array().square();
    out.w /= out.w.sum();
    return out;
}

double utility(const UtilitySpec& u, double c) {
    return std::visit(
        Overload{
            [&](const Crra& f) {
                if (c <= 0.0)
                    throw DomainError("consumption outside the CRRA domain (c <= 0): c = " +
                                      detail::num(c));
                return f.scale * std::pow(c, 1.0 - f.gamma) / (1.0 - f.gamma);
            },
            [&](const Cara& f) { return 1.0 - std::exp(-f.lambda * c); },
            [&](const Quadratic& f) {
                if (c >= f.alpha / f.beta)
                    throw DomainError("quadratic utility saturated: c = " + detail::num(c) +
                                      " >= alpha/beta = " + detail::num(f.alpha / f.beta));
                return (f.alpha - 0.5 * f.beta * c) * c;
            }},
        u);
}

double marginal_utility(const UtilitySpec& u, double c) {
    return std::visit(
        Overload{
            [&](const Crra& f) {
                if (c <= 0.0)
                    throw DomainError("consumption outside the CRRA domain (c <= 0): c = " +
                                      detail::num(c));
                return f.scale * std::pow(c, -f.gamma);
            },
            [&](const Cara& f) { return f.lambda * std::exp(-f.lambda * c); },
            [&](const Quadratic& f) {
                if (c >= f.alpha / f.beta)
                    throw DomainError("quadratic utility saturated: c = " + detail::num(c) +
                                      " >= alpha/beta = " + detail::num(f.alpha / f.beta));
                return f.alpha - f.beta * c;
            }},
        u);
}

double ara(const UtilitySpec& u, double c) {
    return std::visit(
        Overload{
            [&](const Crra& f) {
                if (c <= 0.0)
                    throw DomainError("consumption outside the CRRA domain (c <= 0): c = " +
                                      detail::num(c));
                return f.gamma / c;
            },
            [&](const Cara& f) { return f.lambda; },
            [&](const Quadratic& f) {
                if (c >= f.alpha / f.beta)
                    throw DomainError("quadratic utility saturated: c = " + detail::num(c) +
                                      " >= alpha/beta = " + detail::num(f.alpha / f.beta));
                return f.beta / (f.alpha - f.beta * c);
            }},
        u);
}

const char* utility_domain_violation(const UtilitySpec& u, double c) {
    return std::visit(
        Overload{
            [&](const Crra&) -> const char* {
                return c <= 0.0 ? "consumption outside the CRRA domain (c <= 0)" : nullptr;
            },
            [&](const Cara&) -> const char* { return nullptr; },
            [&](const Quadratic& f) -> const char* {
                return c >= f.alpha / f.beta ? "quadratic utility saturated (c >= alpha/beta)"
                                             : nullptr;
            }},
        u);
}

bool is_quadratic(const UtilitySpec& u) { return std::holds_alternative<Quadratic>(u); }

const Quadratic* as_quadratic(const UtilitySpec& u) { return std::get_if<Quadratic>(&u); }

ProductionSolution solve_production(const ProductionSpec& prod, double gross_rate,
                                    double human_capital) {
    if (!(gross_rate > 0.0)) throw ValidationError("economy.R: gross rate must be positive");
    if (!(human_capital > 0.0))
        throw ValidationError("production: human capital stock must be positive");
    return std::visit(
        Overload{
            [&](const DirectWage& d) { return ProductionSolution{0.0, d.wage}; },
            [&](const CobbDouglas& cd) {
                const double ratio = std::pow(cd.delta / gross_rate, 1.0 / (1.0 - cd.delta));
                return ProductionSolution{ratio * human_capital,
                                          (1.0 - cd.delta) * std::pow(ratio, cd.delta)};
            }},
        prod);
}

void EconomyParams::validate() const {
    if (!(interest_rate > 0.0))
        throw ValidationError("economy.R: gross interest rate must be positive, got " +
                              detail::num(interest_rate));
    if (basic_capital < 0.0)
        throw ValidationError("economy.A: basic human capital must be nonnegative, got " +
                              detail::num(basic_capital));
    grid.validate();

    const NoiseNodes nn = noise_nodes(noise);  // also validates sigma and gh_nodes
    const double eps_min = nn.eps.minCoeff();
    if (grid.lower() + eps_min < 0.0) {
        if (noise.kind == NoiseKind::TwoPoint)
            throw ValidationError("noise.sigma: sigma = " + detail::num(noise.sigma) +
                                  " exceeds y1 = " + detail::num(grid.lower()) +
                                  ", so realized ability can be negative");
        throw ValidationError("noise: Gauss-Hermite node " + detail::num(eps_min) +
                              " puts realized ability below zero at y1 = " +
                              detail::num(grid.lower()) + "; reduce sigma or gh_nodes");
    }

    std::visit(Overload{[](const Crra& f) {
                            if (!(f.gamma > 0.0))
                                throw ValidationError("utility.gamma: must be positive");
                            if (f.gamma == 1.0)
                                throw ValidationError("utility.gamma: must differ from 1");
                            if (!(f.scale > 0.0))
                                throw ValidationError("utility scale: must be positive");
                        },
                        [](const Cara& f) {
                            if (!(f.lambda > 0.0))
                                throw ValidationError("utility.lambda: must be positive");
                        },
                        [](const Quadratic& f) {
                            if (!(f.alpha > 0.0))
                                throw ValidationError("utility.alpha: must be positive");
                            if (!(f.beta > 0.0))
                                throw ValidationError("utility.beta: must be positive");
                        }},
               utility);

    std::visit(Overload{[](const DirectWage& d) {
                            if (!(d.wage > 0.0))
                                throw ValidationError("production.omega: must be positive");
                        },
                        [](const CobbDouglas& cd) {
                            if (!(cd.delta > 0.0 && cd.delta < 1.0))
                                throw ValidationError("production.delta: must lie in (0, 1)");
                        }},
               production);
}

double human_capital_stock(const EconomyParams& params) {
    return params.basic_capital + params.grid.mean();
}

double consumption(double y, double eps, double share, double pool_ability, double wage,
                   const EconomyParams& params) {
    const double ability = y + eps;
    // share == 1 repays exactly R; skipping the pool term keeps that exact
    double repayment = share * params.interest_rate;
    if (share != 1.0)
        repayment += (1.0 - share) * params.interest_rate * ability / pool_ability;
    return (params.basic_capital + ability) * wage - repayment;
}

double consumption_unschooled(const EconomyParams& params, double wage) {
    return params.basic_capital * wage;
}

}  // namespace loanmix
