#pragma once

#include <Eigen/Dense>

#include <utility>
#include <variant>
#include <vector>

#include "loanmix/errors.hpp"

namespace loanmix {

/// Discretized signal distribution: strictly increasing signal values with
/// positive probability weights summing to one. Under the additive-noise
/// ability model, a group's signal equals its mean ability.
struct SignalGrid {
    Eigen::ArrayXd y;  // signal values, strictly increasing, nonnegative
    Eigen::ArrayXd w;  // probability weights

    static SignalGrid uniform(double lo, double hi, int nodes);
    static SignalGrid from_nodes(const std::vector<std::pair<double, double>>& nodes);

    int size() const { return static_cast<int>(y.size()); }
    double lower() const { return y(0); }
    double upper() const { return y(y.size() - 1); }
    double mean() const { return (w * y).sum(); }

    void validate() const;
};

enum class NoiseKind { TwoPoint, GaussHermite };

/// Ability noise around the signal: mean zero, standard deviation sigma.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::TwoPoint;
    double sigma = 0.0;
    int gh_nodes = 21;  // Gauss-Hermite rule size, ignored for TwoPoint
};

struct NoiseNodes {
    Eigen::ArrayXd eps;
    Eigen::ArrayXd w;
    int size() const { return static_cast<int>(eps.size()); }
};

/// Discretize the noise law. TwoPoint gives +-sigma with weight 1/2 each, so
/// mean and variance are exact. GaussHermite maps the n-point Hermite rule to
/// N(0, sigma^2); its first two moments hold to within 1e-12.
NoiseNodes noise_nodes(const NoiseSpec& spec);

struct Crra {
    double gamma;        // relative risk aversion, > 0 and != 1
    double scale = 1.0;  // positive affine factor; choices are invariant to it
};

struct Cara {
    double lambda;  // absolute risk aversion, > 0
};

struct Quadratic {
    double alpha;  // > 0
    double beta;   // > 0; utility is valid only for c < alpha/beta
};

using UtilitySpec = std::variant<Crra, Cara, Quadratic>;

double utility(const UtilitySpec& u, double c);
double marginal_utility(const UtilitySpec& u, double c);

/// Absolute risk aversion -u''/u' evaluated analytically.
double ara(const UtilitySpec& u, double c);

/// Reason why c is outside the domain of u, or nullptr if it is inside.
const char* utility_domain_violation(const UtilitySpec& u, double c);

bool is_quadratic(const UtilitySpec& u);
const Quadratic* as_quadratic(const UtilitySpec& u);

struct DirectWage {
    double wage;  // > 0
};

struct CobbDouglas {
    double delta;  // capital share, in (0, 1)
};

using ProductionSpec = std::variant<DirectWage, CobbDouglas>;

struct ProductionSolution {
    double capital;  // 0 sentinel under DirectWage
    double wage;
};

/// Firms hire inputs until marginal products equal the gross rate and the
/// wage. Cobb-Douglas: K/H = (delta/R)^(1/(1-delta)), wage = (1-delta)(K/H)^delta.
ProductionSolution solve_production(const ProductionSpec& prod, double gross_rate,
                                    double human_capital);

/// Full scenario. The cost of education is normalized to one unit.
struct EconomyParams {
    double interest_rate = 1.0;  // gross rate R, > 0
    double basic_capital = 0.0;  // baseline human capital A, >= 0
    SignalGrid grid;
    NoiseSpec noise;
    UtilitySpec utility = Cara{1.0};
    ProductionSpec production = DirectWage{1.0};

    void validate() const;
};

/// Aggregate human capital under universal enrollment: A + E[signal].
double human_capital_stock(const EconomyParams& params);

/// Adult consumption of an enrolled student: labor income minus the repayment
/// obligation of a portfolio with the given CML share.
double consumption(double y, double eps, double share, double pool_ability, double wage,
                   const EconomyParams& params);

/// Consumption without enrollment: basic human capital only.
double consumption_unschooled(const EconomyParams& params, double wage);

}  // namespace loanmix
