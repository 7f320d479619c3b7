/**
 * @file problems.hpp
 * @brief The four loan-portfolio decision problems as objective/constraint bundles.
 *
 * Variable layout is z = (x_0 .. x_{n-1}, k [, aux_0 .. aux_{S-1}]). Every problem
 * is posed as a maximization; the min-risk problems maximize -rho(x).
 *
 *   P1  max E[X_x] - (1-k) - delta k                s.t. rho(x) <= theta
 *   P2  min rho(x)                                  s.t. E[X_x] - (1-k) - delta k >= mu
 *   P3  max E[max(X_x - (1-k), 0)] - delta k        s.t. rho(x) <= theta
 *   P4  min rho(x)                                  s.t. E[max(X_x - (1-k), 0)] - delta k >= mu
 *
 * All four share sum(x) = 1, x >= 0, k >= k_lev, k >= K(x) and 0 <= k <= 1.
 * Inequality constraints are stored as g(z) >= 0, equalities as h(z) = 0.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llport/errors.hpp"
#include "llport/numerics.hpp"
#include "llport/portfolio.hpp"

namespace llport {

enum class ProblemKind { P1_MAX_RETURN, P2_MIN_RISK, P3_MAX_RETURN_LL, P4_MIN_RISK_LL };
enum class RiskMeasure { EL, UL };

inline bool is_min_risk(ProblemKind k) { return k == ProblemKind::P2_MIN_RISK || k == ProblemKind::P4_MIN_RISK_LL; }
inline bool is_limited_liability(ProblemKind k) {
    return k == ProblemKind::P3_MAX_RETURN_LL || k == ProblemKind::P4_MIN_RISK_LL;
}

inline const char* to_string(ProblemKind k) {
    switch (k) {
    case ProblemKind::P1_MAX_RETURN: return "P1";
    case ProblemKind::P2_MIN_RISK: return "P2";
    case ProblemKind::P3_MAX_RETURN_LL: return "P3";
    case ProblemKind::P4_MIN_RISK_LL: return "P4";
    }
    return "?";
}

inline const char* to_string(RiskMeasure r) { return r == RiskMeasure::EL ? "EL" : "UL"; }

inline std::optional<ProblemKind> parse_problem_kind(const std::string& s) {
    if (s == "P1" || s == "P1_MAX_RETURN") return ProblemKind::P1_MAX_RETURN;
    if (s == "P2" || s == "P2_MIN_RISK") return ProblemKind::P2_MIN_RISK;
    if (s == "P3" || s == "P3_MAX_RETURN_LL") return ProblemKind::P3_MAX_RETURN_LL;
    if (s == "P4" || s == "P4_MIN_RISK_LL") return ProblemKind::P4_MIN_RISK_LL;
    return std::nullopt;
}

inline std::optional<RiskMeasure> parse_risk_measure(const std::string& s) {
    if (s == "EL") return RiskMeasure::EL;
    if (s == "UL") return RiskMeasure::UL;
    return std::nullopt;
}

struct ProblemSpec {
    ProblemKind kind = ProblemKind::P2_MIN_RISK;
    LoanUniverse universe;
    double delta = 1.04;
    double k_lev = 0.04;
    RiskMeasure risk_measure = RiskMeasure::EL;
    std::optional<double> theta; ///< risk ceiling, P1/P3
    std::optional<double> mu;    ///< return floor, P2/P4
    IrbParams irb;
    std::optional<CorrelationMatrix> default_corr; ///< UL only; identity when absent

    void validate() const {
        if (universe.size() == 0) throw ConfigError("loan universe is empty", "universe");
        if (!(delta > 1.0)) throw ConfigError("opportunity cost of capital must exceed 1", "delta");
        if (!(k_lev > 0.0 && k_lev < 1.0)) throw ConfigError("leverage ratio must lie in (0, 1)", "k_lev");
        if (is_min_risk(kind)) {
            if (!mu) throw ConfigError(std::string(to_string(kind)) + " requires a return floor", "mu");
            if (theta) throw ConfigError(std::string(to_string(kind)) + " takes no risk ceiling", "theta");
        } else {
            if (!theta) throw ConfigError(std::string(to_string(kind)) + " requires a risk ceiling", "theta");
            if (mu) throw ConfigError(std::string(to_string(kind)) + " takes no return floor", "mu");
        }
        for (const auto& l : universe.loans())
            if (l.pd >= max_admissible_pd)
                throw ConfigError("loan '" + l.id + "' has pd >= 0.2 and is not admissible", "universe");
        if (default_corr && default_corr->size() != universe.size())
            throw ConfigError("default correlation matrix does not match the universe", "default_corr");
    }
};

/// A scalar function of z with an optional analytic gradient.
struct ScalarFunction {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient; ///< may be empty

    double operator()(std::span<const double> z) const { return value(z); }
    bool has_gradient() const noexcept { return static_cast<bool>(gradient); }
};

enum class ConstraintType { Equality, Inequality };
enum class ConstraintRole { Simplex, LeverageFloor, IrbCapital, RiskCeiling, ReturnFloor, Complementarity, Other };

struct Constraint {
    std::string name;        ///< stable identifier, e.g. "return_floor"
    std::string description; ///< human-readable, e.g. "Expected Loss <= 0.012"
    ConstraintType type = ConstraintType::Inequality;
    ConstraintRole role = ConstraintRole::Other;
    ScalarFunction fn;
};

namespace detail {

/// Shared, immutable state captured by the problem closures.
struct ProblemContext {
    ProblemSpec spec;
    std::unique_ptr<ScenarioEvaluator> scenarios;
    CorrelationMatrix corr;
    std::vector<double> capital;

    explicit ProblemContext(ProblemSpec s) : spec(std::move(s)) {
        scenarios = std::make_unique<ScenarioEvaluator>(spec.universe);
        corr = spec.default_corr ? *spec.default_corr : CorrelationMatrix::identity(spec.universe.size());
        capital = spec.universe.capital_requirements();
    }

    std::size_t n() const { return spec.universe.size(); }

    double risk(std::span<const double> x) const {
        return spec.risk_measure == RiskMeasure::EL ? expected_loss(spec.universe, x)
                                                    : unexpected_loss(spec.universe, x, corr);
    }

    void risk_gradient(std::span<const double> x, std::span<double> g) const {
        if (spec.risk_measure == RiskMeasure::EL) {
            for (std::size_t i = 0; i < n(); ++i) g[i] = spec.universe[i].expected_loss_rate();
        } else {
            unexpected_loss_gradient(spec.universe, x, corr, g);
        }
    }

    double return_functional(std::span<const double> x, double k) const {
        return is_limited_liability(spec.kind) ? scenarios->limited(x, k, spec.delta)
                                               : scenarios->plain(x, k, spec.delta);
    }

    void return_gradient(std::span<const double> x, double k, std::span<double> g) const {
        if (is_limited_liability(spec.kind))
            scenarios->limited_gradient(x, k, spec.delta, g);
        else
            scenarios->plain_gradient(spec.delta, g);
    }
};

inline std::string format_bound(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

/// Objective and constraints over z, plus the box bounds on every variable.
struct EvaluatedProblem {
    ProblemKind kind = ProblemKind::P2_MIN_RISK;
    std::size_t num_weights = 0; ///< n; z[n] is the capital level
    ScalarFunction objective;    ///< maximized
    std::vector<Constraint> constraints;
    std::vector<double> lower;
    std::vector<double> upper;
    std::shared_ptr<const detail::ProblemContext> context;

    /// Fills the non-weight entries of a start point from its weights (k, and aux when reformulated).
    std::function<void(std::span<double>)> complete_start;

    std::size_t num_variables() const noexcept { return lower.size(); }
    std::size_t capital_index() const noexcept { return num_weights; }
    const ProblemSpec& spec() const { return context->spec; }

    double risk(std::span<const double> x) const { return context->risk(x.first(num_weights)); }
    double capital_envelope(std::span<const double> x) const {
        return std::max(context->spec.k_lev, portfolio_capital(context->spec.universe, x.first(num_weights)));
    }
};

/// Model 1-L-NM: P3 with one auxiliary variable per scenario standing in for max(R_s, 0).
struct ReformulatedProblem {
    EvaluatedProblem base;   ///< the original nonsmooth P3
    EvaluatedProblem smooth; ///< over (x, k, aux)
    std::size_t aux_offset = 0;
    std::size_t num_aux = 0;

    /// Optimal closure aux_s = max(R_s(x, k), 0).
    std::vector<double> closure(std::span<const double> x, double k) const {
        auto r = base.context->scenarios->realizations(x, k);
        for (double& v : r) v = std::max(v, 0.0);
        return r;
    }

    /// (x, k) extended by the closure.
    std::vector<double> lift(std::span<const double> x, double k) const {
        std::vector<double> z(x.begin(), x.end());
        z.push_back(k);
        const auto aux = closure(x, k);
        z.insert(z.end(), aux.begin(), aux.end());
        return z;
    }
};

/**
 * Builds the objective/constraint bundle for P1-P4. The max(k_lev, K(x)) floor on k
 * is split into two smooth inequalities k - k_lev >= 0 and k - K(x) >= 0.
 */
inline EvaluatedProblem build_problem(const ProblemSpec& spec) {
    spec.validate();
    auto ctx = std::make_shared<const detail::ProblemContext>(spec);
    const std::size_t n = ctx->n();

    EvaluatedProblem p;
    p.kind = spec.kind;
    p.num_weights = n;
    p.context = ctx;
    p.lower.assign(n + 1, 0.0);
    p.upper.assign(n + 1, 1.0);

    const detail::ProblemContext* c = ctx.get();
    if (is_min_risk(spec.kind)) {
        p.objective.value = [c, n](std::span<const double> z) { return -c->risk(z.first(n)); };
        p.objective.gradient = [c, n](std::span<const double> z, std::span<double> g) {
            std::fill(g.begin(), g.end(), 0.0);
            c->risk_gradient(z.first(n), g);
            for (std::size_t i = 0; i < n; ++i) g[i] = -g[i];
        };
    } else {
        p.objective.value = [c, n](std::span<const double> z) { return c->return_functional(z.first(n), z[n]); };
        p.objective.gradient = [c, n](std::span<const double> z, std::span<double> g) {
            std::fill(g.begin(), g.end(), 0.0);
            c->return_gradient(z.first(n), z[n], g);
        };
    }

    Constraint simplex;
    simplex.name = "simplex";
    simplex.description = "sum of weights = 1";
    simplex.type = ConstraintType::Equality;
    simplex.role = ConstraintRole::Simplex;
    simplex.fn.value = [n](std::span<const double> z) {
        CompensatedSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(z[i]);
        return s.value() - 1.0;
    };
    simplex.fn.gradient = [n](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) g[i] = 1.0;
    };
    p.constraints.push_back(std::move(simplex));

    Constraint lev;
    lev.name = "leverage_floor";
    lev.description = "k >= k_lev = " + detail::format_bound(spec.k_lev);
    lev.role = ConstraintRole::LeverageFloor;
    lev.fn.value = [n, k_lev = spec.k_lev](std::span<const double> z) { return z[n] - k_lev; };
    lev.fn.gradient = [n](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        g[n] = 1.0;
    };
    p.constraints.push_back(std::move(lev));

    Constraint irb;
    irb.name = "irb_capital";
    irb.description = "k >= K(x)";
    irb.role = ConstraintRole::IrbCapital;
    irb.fn.value = [c, n](std::span<const double> z) {
        CompensatedSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(z[i] * c->capital[i]);
        return z[n] - s.value();
    };
    irb.fn.gradient = [c, n](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) g[i] = -c->capital[i];
        g[n] = 1.0;
    };
    p.constraints.push_back(std::move(irb));

    const std::string risk_name = spec.risk_measure == RiskMeasure::EL ? "Expected Loss" : "Unexpected Loss";
    if (is_min_risk(spec.kind)) {
        Constraint floor;
        floor.name = "return_floor";
        floor.description = (is_limited_liability(spec.kind) ? "E[max(X - (1-k), 0)] - delta k >= "
                                                              : "E[X] - (1-k) - delta k >= ") +
                            detail::format_bound(*spec.mu);
        floor.role = ConstraintRole::ReturnFloor;
        floor.fn.value = [c, n, mu = *spec.mu](std::span<const double> z) {
            return c->return_functional(z.first(n), z[n]) - mu;
        };
        floor.fn.gradient = [c, n](std::span<const double> z, std::span<double> g) {
            std::fill(g.begin(), g.end(), 0.0);
            c->return_gradient(z.first(n), z[n], g);
        };
        p.constraints.push_back(std::move(floor));
    } else {
        Constraint ceiling;
        ceiling.name = "risk_ceiling";
        ceiling.description = risk_name + " <= " + detail::format_bound(*spec.theta);
        ceiling.role = ConstraintRole::RiskCeiling;
        ceiling.fn.value = [c, n, theta = *spec.theta](std::span<const double> z) {
            return theta - c->risk(z.first(n));
        };
        ceiling.fn.gradient = [c, n](std::span<const double> z, std::span<double> g) {
            std::fill(g.begin(), g.end(), 0.0);
            c->risk_gradient(z.first(n), g);
            for (std::size_t i = 0; i < n; ++i) g[i] = -g[i];
        };
        p.constraints.push_back(std::move(ceiling));
    }

    p.complete_start = [c, n](std::span<double> z) {
        CompensatedSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(z[i] * c->capital[i]);
        z[n] = std::clamp(std::max(c->spec.k_lev, s.value()), 0.0, 1.0);
    };
    return p;
}

/**
 * Model 1-L-NM. Adds aux_s in [0, B] for each of the S = 2^m scenarios, the
 * complementarity equalities aux_s (aux_s - R_s(x, k)) = 0, and replaces the
 * objective by sum_s P(s) aux_s - delta k. B bounds every R_s from above.
 */
inline ReformulatedProblem reformulate_ll(const EvaluatedProblem& problem) {
    if (problem.kind != ProblemKind::P3_MAX_RETURN_LL)
        throw ConfigError("the complementarity reformulation applies to P3 only", "model");
    const auto ctx = problem.context;
    const detail::ProblemContext* c = ctx.get();
    const LoanUniverse& u = c->spec.universe;
    const ScenarioTable& table = c->scenarios->table();
    const std::size_t n = problem.num_weights;
    const std::size_t S = table.size();
    const std::size_t off = n + 1;

    ReformulatedProblem r;
    r.base = problem;
    r.aux_offset = off;
    r.num_aux = S;

    double bound = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Loan& l = u[i];
        bound = std::max(bound, l.is_safe() ? u.safe_payoff(i) : std::max(1.0 + l.rate, 1.0 - l.lgd));
    }

    EvaluatedProblem& sm = r.smooth;
    sm.kind = problem.kind;
    sm.num_weights = n;
    sm.context = ctx;
    sm.lower = problem.lower;
    sm.upper = problem.upper;
    sm.lower.resize(off + S, 0.0);
    sm.upper.resize(off + S, bound);

    sm.objective.value = [c, off, S](std::span<const double> z) {
        CompensatedSum acc;
        for (std::size_t s = 0; s < S; ++s) acc.add(c->scenarios->table().probability(s) * z[off + s]);
        return acc.value() - c->spec.delta * z[off - 1];
    };
    sm.objective.gradient = [c, off, S](std::span<const double>, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) g[off + s] = c->scenarios->table().probability(s);
        g[off - 1] = -c->spec.delta;
    };

    // Base constraints only read (x, k); their gradients are widened with zeros.
    for (const Constraint& base : problem.constraints) {
        Constraint lifted = base;
        if (base.fn.gradient) {
            lifted.fn.gradient = [inner = base.fn.gradient, off](std::span<const double> z, std::span<double> g) {
                std::fill(g.begin(), g.end(), 0.0);
                inner(z.first(off), g.first(off));
            };
        }
        sm.constraints.push_back(std::move(lifted));
    }

    for (std::size_t s = 0; s < S; ++s) {
        Constraint comp;
        comp.name = "complementarity[" + std::to_string(s) + "]";
        comp.description = "aux_" + std::to_string(s) + " * (aux_" + std::to_string(s) + " - R_" + std::to_string(s) +
                           ") = 0";
        comp.type = ConstraintType::Equality;
        comp.role = ConstraintRole::Complementarity;
        comp.fn.value = [c, n, off, s](std::span<const double> z) {
            const double a = z[off + s];
            return a * (a - c->scenarios->realization(z.first(n), z[n], s));
        };
        comp.fn.gradient = [c, n, off, s](std::span<const double> z, std::span<double> g) {
            std::fill(g.begin(), g.end(), 0.0);
            const double a = z[off + s];
            const double rs = c->scenarios->realization(z.first(n), z[n], s);
            const ScenarioTable& t = c->scenarios->table();
            std::size_t j = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const Loan& l = c->spec.universe[i];
                double pay;
                if (l.is_safe()) {
                    pay = c->spec.universe.safe_payoff(i);
                } else {
                    pay = t.defaulted(s, j) ? 1.0 - l.lgd : 1.0 + l.rate;
                    ++j;
                }
                g[i] = -a * pay;
            }
            g[n] = -a;
            g[off + s] = 2.0 * a - rs;
        };
        sm.constraints.push_back(std::move(comp));
    }

    sm.complete_start = [base_complete = problem.complete_start, c, n, off, S](std::span<double> z) {
        base_complete(z.first(off));
        for (std::size_t s = 0; s < S; ++s)
            z[off + s] = std::max(c->scenarios->realization(z.first(n), z[n], s), 0.0);
    };
    return r;
}

// ---- feasibility -------------------------------------------------------------

struct Residual {
    std::string name;
    double violation = 0.0; ///< >= 0; zero when satisfied
};

struct FeasibilityReport {
    bool feasible = false;
    double max_violation = 0.0;
    std::vector<Residual> residuals; ///< "no_short", "bounds", then one entry per constraint
};

/// Box and constraint violations at z (full variable vector).
inline FeasibilityReport is_feasible(const EvaluatedProblem& problem, std::span<const double> z, double tol) {
    if (z.size() != problem.num_variables())
        throw StructuralError("point has " + std::to_string(z.size()) + " variables, problem has " +
                              std::to_string(problem.num_variables()));
    FeasibilityReport rep;
    double no_short = 0.0;
    for (std::size_t i = 0; i < problem.num_weights; ++i) no_short = std::max(no_short, -z[i]);
    rep.residuals.push_back({"no_short", no_short});
    double box = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        box = std::max({box, problem.lower[i] - z[i], z[i] - problem.upper[i]});
    rep.residuals.push_back({"bounds", box});
    for (const Constraint& c : problem.constraints) {
        const double v = c.fn(z);
        rep.residuals.push_back({c.name, c.type == ConstraintType::Equality ? std::abs(v) : std::max(0.0, -v)});
    }
    for (const auto& r : rep.residuals) rep.max_violation = std::max(rep.max_violation, r.violation);
    rep.feasible = rep.max_violation <= tol;
    return rep;
}

/// Convenience overload for base problems over (x, k).
inline FeasibilityReport is_feasible(const EvaluatedProblem& problem, std::span<const double> x, double k,
                                     double tol) {
    if (x.size() != problem.num_weights)
        throw StructuralError("weight vector has length " + std::to_string(x.size()) + ", problem has " +
                              std::to_string(problem.num_weights) + " loans");
    if (problem.num_variables() != problem.num_weights + 1)
        throw StructuralError("problem has auxiliary variables; pass the full point");
    std::vector<double> z(x.begin(), x.end());
    z.push_back(k);
    return is_feasible(problem, z, tol);
}

} // namespace llport
