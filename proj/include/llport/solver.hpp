/**
 * @file solver.hpp
 * @brief Multistart augmented-Lagrangian solver, grid-search oracle and
 *        the with/without limited-liability model comparison.
 *
 * The weights are kept on the unit simplex by Euclidean projection and every
 * other variable by clipping to its box, so the simplex equality never enters
 * the Lagrangian. All remaining constraints are handled by the classical
 * (Powell-Hestenes-Rockafellar) augmented Lagrangian:
 *
 *   L(z) = -f(z) + sum_eq [ -lambda_j h_j + rho/2 h_j^2 ]
 *                + sum_ineq 1/(2 rho) [ max(0, lambda_j - rho g_j)^2 - lambda_j^2 ]
 *
 * Each subproblem min L over the box/simplex is solved by projected gradient
 * with Barzilai-Borwein steps and Armijo backtracking along the projection arc.
 * Backtracking only ever accepts a decrease, so kinks in piecewise-linear
 * objectives (the limited-liability payoff) stall the inner loop instead of
 * sending it off.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "llport/errors.hpp"
#include "llport/portfolio.hpp"
#include "llport/problems.hpp"

namespace llport {

struct SolverOptions {
    double tol_feas = 1e-8;
    double tol_opt = 1e-8;
    int max_outer = 50;
    int max_inner = 500;
    double penalty_init = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e8;
    int n_starts = 32;
    std::uint64_t seed = 20240607;
    unsigned threads = 1; ///< 0 or 1 runs the starts serially

    void validate() const {
        if (!(tol_feas > 0.0)) throw ConfigError("must be positive", "solver.tol_feas");
        if (!(tol_opt > 0.0)) throw ConfigError("must be positive", "solver.tol_opt");
        if (max_outer < 1) throw ConfigError("must be at least 1", "solver.max_outer");
        if (max_inner < 1) throw ConfigError("must be at least 1", "solver.max_inner");
        if (!(penalty_init > 0.0)) throw ConfigError("must be positive", "solver.penalty_init");
        if (!(penalty_growth > 1.0)) throw ConfigError("must exceed 1", "solver.penalty_growth");
        if (n_starts < 1) throw ConfigError("must be at least 1", "solver.n_starts");
    }
};

enum class SolveStatus { CONVERGED, MAX_ITER, INFEASIBLE_DETECTED };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::CONVERGED: return "CONVERGED";
    case SolveStatus::MAX_ITER: return "MAX_ITER";
    case SolveStatus::INFEASIBLE_DETECTED: return "INFEASIBLE_DETECTED";
    }
    return "?";
}

struct SolveResult {
    std::vector<double> x_star;
    double k_star = 0.0;
    std::vector<double> aux; ///< reformulated problems only
    double objective = -std::numeric_limits<double>::infinity();
    double feasibility_residual = std::numeric_limits<double>::infinity();
    SolveStatus status = SolveStatus::INFEASIBLE_DETECTED;
    std::size_t starts_used = 0;
    std::size_t best_start_index = 0;

    /// (x*, k*, aux) as one vector in problem layout.
    std::vector<double> point() const {
        std::vector<double> z = x_star;
        z.push_back(k_star);
        z.insert(z.end(), aux.begin(), aux.end());
        return z;
    }
};

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-based, O(n log n)).
inline void project_onto_simplex(std::span<double> x) {
    const std::size_t n = x.size();
    if (n == 0) return;
    std::vector<double> u(x.begin(), x.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) tau = t;
    }
    CompensatedSum s;
    for (double& v : x) {
        v = std::max(v - tau, 0.0);
        s.add(v);
    }
    // Absorb the rounding left by the subtraction into the largest weight.
    const double drift = s.value() - 1.0;
    if (drift != 0.0) {
        auto it = std::max_element(x.begin(), x.end());
        *it = std::max(*it - drift, 0.0);
    }
}

/// Central finite-difference gradient, relative step 1e-7, clamped to the box.
inline void finite_difference_gradient(const ScalarFunction& f, std::span<const double> z,
                                       std::span<const double> lower, std::span<const double> upper,
                                       std::span<double> grad) {
    std::vector<double> work(z.begin(), z.end());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double h = 1e-7 * std::max(1.0, std::abs(z[i]));
        const double hi = std::min(z[i] + h, upper[i]);
        const double lo = std::max(z[i] - h, lower[i]);
        if (hi <= lo) {
            grad[i] = 0.0;
            continue;
        }
        work[i] = hi;
        const double fp = f(work);
        work[i] = lo;
        const double fm = f(work);
        work[i] = z[i];
        grad[i] = (fp - fm) / (hi - lo);
    }
}

namespace detail {

class AugmentedLagrangian {
public:
    AugmentedLagrangian(const EvaluatedProblem& p, const SolverOptions& o) : p_(p), opts_(o) {
        for (std::size_t j = 0; j < p.constraints.size(); ++j)
            if (p.constraints[j].role != ConstraintRole::Simplex) active_.push_back(j);
        multipliers_.assign(active_.size(), 0.0);
        values_.resize(active_.size());
        scratch_.resize(p.num_variables());
    }

    struct Outcome {
        std::vector<double> z;
        double objective = 0.0;
        double infeasibility = 0.0;
        bool converged = false;
    };

    Outcome run(std::vector<double> z) {
        project(z);
        double rho = opts_.penalty_init;
        double prev_infeas = infeasibility(z);
        bool converged = false;
        double inner_tol = 1e-3;
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            const std::vector<double> before = z;
            const double inner_stat = minimize_inner(z, rho, inner_tol);
            const double infeas = infeasibility(z);

            // Multiplier update from the constraint values at the subproblem solution.
            for (std::size_t a = 0; a < active_.size(); ++a) {
                const Constraint& c = p_.constraints[active_[a]];
                const double v = c.fn(z);
                if (c.type == ConstraintType::Equality)
                    multipliers_[a] -= rho * v;
                else
                    multipliers_[a] = std::max(0.0, multipliers_[a] - rho * v);
            }

            double step = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) step = std::max(step, std::abs(z[i] - before[i]));

            if (infeas <= opts_.tol_feas && (inner_stat <= opts_.tol_opt || step <= opts_.tol_opt) &&
                inner_tol <= opts_.tol_opt * 10.0) {
                converged = true;
                break;
            }
            if (infeas > 0.25 * prev_infeas && infeas > opts_.tol_feas)
                rho = std::min(rho * opts_.penalty_growth, opts_.penalty_max);
            prev_infeas = infeas;
            inner_tol = std::max(inner_tol * 0.1, opts_.tol_opt);
        }
        Outcome out;
        out.objective = p_.objective(z);
        out.infeasibility = infeasibility(z);
        out.converged = converged;
        out.z = std::move(z);
        return out;
    }

    double infeasibility(std::span<const double> z) const {
        double v = 0.0;
        for (std::size_t j : active_) {
            const Constraint& c = p_.constraints[j];
            const double g = c.fn(z);
            v = std::max(v, c.type == ConstraintType::Equality ? std::abs(g) : std::max(0.0, -g));
        }
        return v;
    }

    void project(std::span<double> z) const {
        project_onto_simplex(z.first(p_.num_weights));
        for (std::size_t i = p_.num_weights; i < z.size(); ++i) z[i] = std::clamp(z[i], p_.lower[i], p_.upper[i]);
    }

private:
    void gradient_of(const ScalarFunction& f, std::span<const double> z, std::span<double> g) const {
        if (f.has_gradient())
            f.gradient(z, g);
        else
            finite_difference_gradient(f, z, p_.lower, p_.upper, g);
    }

    double lagrangian(std::span<const double> z, double rho) {
        double L = -p_.objective(z);
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const Constraint& c = p_.constraints[active_[a]];
            const double v = c.fn(z);
            values_[a] = v;
            const double lam = multipliers_[a];
            if (c.type == ConstraintType::Equality) {
                L += -lam * v + 0.5 * rho * v * v;
            } else {
                const double t = std::max(0.0, lam - rho * v);
                L += (t * t - lam * lam) / (2.0 * rho);
            }
        }
        return L;
    }

    // Assumes values_ holds the constraint values at z (set by lagrangian()).
    void lagrangian_gradient(std::span<const double> z, double rho, std::span<double> g) {
        gradient_of(p_.objective, z, g);
        for (double& v : g) v = -v;
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const Constraint& c = p_.constraints[active_[a]];
            const double v = values_[a];
            const double lam = multipliers_[a];
            const double weight = c.type == ConstraintType::Equality ? (-lam + rho * v) : -std::max(0.0, lam - rho * v);
            if (weight == 0.0) continue;
            gradient_of(c.fn, z, scratch_);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += weight * scratch_[i];
        }
    }

    double projected_gradient_norm(std::span<const double> z, std::span<const double> g) const {
        std::vector<double> t(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) t[i] = z[i] - g[i];
        project(t);
        double norm = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) norm = std::max(norm, std::abs(t[i] - z[i]));
        return norm;
    }

    // Projected gradient with BB steps; returns the final projected-gradient norm
    // (0 when the line search stalls, i.e. no descent is available at machine precision).
    double minimize_inner(std::vector<double>& z, double rho, double tol) {
        const std::size_t N = z.size();
        std::vector<double> g(N), g_new(N), trial(N), z_prev, g_prev;
        double L = lagrangian(z, rho);
        lagrangian_gradient(z, rho, g);
        double alpha = 1.0;
        double stat = projected_gradient_norm(z, g);
        for (int it = 0; it < opts_.max_inner && stat > tol; ++it) {
            if (!z_prev.empty()) {
                double ss = 0.0, sy = 0.0;
                for (std::size_t i = 0; i < N; ++i) {
                    const double s = z[i] - z_prev[i];
                    const double y = g[i] - g_prev[i];
                    ss += s * s;
                    sy += s * y;
                }
                alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e12) : std::clamp(alpha * 4.0, 1e-12, 1e12);
            }
            bool accepted = false;
            double L_new = L;
            for (int bt = 0; bt < 60; ++bt) {
                for (std::size_t i = 0; i < N; ++i) trial[i] = z[i] - alpha * g[i];
                project(trial);
                double decrease = 0.0;
                for (std::size_t i = 0; i < N; ++i) decrease += g[i] * (trial[i] - z[i]);
                L_new = lagrangian(trial, rho);
                if (L_new <= L + 1e-4 * decrease && decrease < 0.0) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                lagrangian(z, rho); // restore values_
                return 0.0;
            }
            z_prev = z;
            g_prev = g;
            z = trial;
            L = L_new;
            lagrangian_gradient(z, rho, g_new);
            g.swap(g_new);
            stat = projected_gradient_norm(z, g);
        }
        return stat;
    }

    const EvaluatedProblem& p_;
    const SolverOptions& opts_;
    std::vector<std::size_t> active_;
    std::vector<double> multipliers_;
    std::vector<double> values_;
    std::vector<double> scratch_;
};

/// Start points: the simplex vertices first, then Dirichlet(1, ..., 1) samples.
inline std::vector<std::vector<double>> make_starts(const EvaluatedProblem& p, const SolverOptions& opts) {
    const std::size_t n = p.num_weights;
    const std::size_t N = p.num_variables();
    std::mt19937_64 rng(opts.seed);
    std::vector<std::vector<double>> starts;
    for (int s = 0; s < opts.n_starts; ++s) {
        std::vector<double> z(N, 0.0);
        if (static_cast<std::size_t>(s) < n) {
            z[static_cast<std::size_t>(s)] = 1.0;
        } else {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                // Exponential(1) draws from a 53-bit uniform in (0, 1].
                const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
                z[i] = -std::log(u);
                total += z[i];
            }
            for (std::size_t i = 0; i < n; ++i) z[i] /= total;
            project_onto_simplex(std::span<double>(z).first(n));
        }
        for (std::size_t i = n; i < N; ++i) z[i] = std::clamp(0.0, p.lower[i], p.upper[i]);
        if (p.complete_start) p.complete_start(z);
        starts.push_back(std::move(z));
    }
    return starts;
}

inline SolveResult to_result(const EvaluatedProblem& p, std::span<const double> z, double objective, double residual) {
    SolveResult r;
    const std::size_t n = p.num_weights;
    r.x_star.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    r.k_star = z[n];
    r.aux.assign(z.begin() + static_cast<std::ptrdiff_t>(n + 1), z.end());
    r.objective = objective;
    r.feasibility_residual = residual;
    return r;
}


/// Resets auxiliary variables to their best feasible values for the current (x, k).
using AuxRestore = std::function<void(std::span<double>)>;

inline SolveResult solve_multistart(const EvaluatedProblem& problem, const SolverOptions& opts,
                                    const AuxRestore& restore) {
    opts.validate();
    bool has_simplex = false;
    for (const auto& c : problem.constraints) has_simplex |= c.role == ConstraintRole::Simplex;
    if (!has_simplex) throw ConfigError("problem bundle lacks the simplex constraint", "problem");

    const auto starts = detail::make_starts(problem, opts);
    std::vector<detail::AugmentedLagrangian::Outcome> outcomes(starts.size());

    auto run_one = [&](std::size_t s) {
        auto o = detail::AugmentedLagrangian(problem, opts).run(starts[s]);
        // Runs launched from a feasible point use a stiff penalty so they stay in its basin.
        SolverOptions stiff = opts;
        stiff.penalty_init = std::max(opts.penalty_init, std::sqrt(opts.penalty_max));
        // A weak initial penalty can carry the iterate out of the basin of a feasible start;
        // retry with a stiff penalty, and never return anything worse than the start itself.
        detail::AugmentedLagrangian probe(problem, opts);
        const double start_value = problem.objective(starts[s]);
        if (probe.infeasibility(starts[s]) <= opts.tol_feas &&
            (o.infeasibility > opts.tol_feas || o.objective < start_value - 1e-12)) {
            auto retry = detail::AugmentedLagrangian(problem, stiff).run(starts[s]);
            if (retry.infeasibility <= opts.tol_feas && retry.objective >= start_value - 1e-12) {
                o = std::move(retry);
            } else {
                o.z = starts[s];
                o.objective = start_value;
                o.infeasibility = probe.infeasibility(starts[s]);
                o.converged = false;
            }
        }
        if (restore) {
            // The penalty method can settle on the aux_s = 0 branch while R_s > 0; restoring the
            // closure is an exact improvement, after which the method resumes from the new point.
            constexpr int kMaxRestarts = 8;
            for (int round = 0; round <= kMaxRestarts; ++round) {
                std::vector<double> z = o.z;
                restore(z);
                const double value = problem.objective(z);
                const bool improved = value > o.objective + 1e-12;
                o.objective = value;
                o.infeasibility = detail::AugmentedLagrangian(problem, opts).infeasibility(z);
                o.z = std::move(z);
                if (!improved || round == kMaxRestarts) break;
                const bool converged = o.converged;
                auto next = detail::AugmentedLagrangian(problem, stiff).run(o.z);
                if (next.infeasibility > opts.tol_feas) {
                    o.converged = converged;
                    break;
                }
                o = std::move(next);
            }
        }
        outcomes[s] = std::move(o);
    };
    const unsigned threads = std::min<unsigned>(std::max(opts.threads, 1u), static_cast<unsigned>(starts.size()));
    if (threads <= 1) {
        for (std::size_t s = 0; s < starts.size(); ++s) run_one(s);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t s = t; s < starts.size(); s += threads) run_one(s);
            });
    }

    std::optional<std::size_t> best;
    std::size_t least_infeasible = 0;
    for (std::size_t s = 0; s < outcomes.size(); ++s) {
        const auto& o = outcomes[s];
        if (o.infeasibility < outcomes[least_infeasible].infeasibility) least_infeasible = s;
        if (o.infeasibility > opts.tol_feas) continue;
        if (!best || o.objective > outcomes[*best].objective + 1e-12) best = s;
    }

    SolveResult r;
    if (best) {
        const auto& o = outcomes[*best];
        r = detail::to_result(problem, o.z, o.objective, o.infeasibility);
        r.status = o.converged ? SolveStatus::CONVERGED : SolveStatus::MAX_ITER;
        r.best_start_index = *best;
    } else {
        const auto& o = outcomes[least_infeasible];
        r = detail::to_result(problem, o.z, o.objective, o.infeasibility);
        r.status = SolveStatus::INFEASIBLE_DETECTED;
        r.best_start_index = least_infeasible;
    }
    r.starts_used = starts.size();
    return r;
}

} // namespace detail

/**
 * Multistart augmented Lagrangian. Deterministic in (problem, opts.seed): each
 * start is independent, and the reduction keeps the best feasible objective with
 * ties (within 1e-12) going to the lowest start index, so parallel and serial runs
 * return identical results. If no start reaches `tol_feas`, the least infeasible
 * point is returned with status INFEASIBLE_DETECTED.
 */
inline SolveResult solve(const EvaluatedProblem& problem, const SolverOptions& opts = {}) {
    return detail::solve_multistart(problem, opts, nullptr);
}

/**
 * Model 1-L-NM. Every start initializes its auxiliary variables at max(R_s, 0).
 * After each run, k drops to max(k_lev, K(x)) and the aux are reset to that closure;
 * the run resumes while this improves the objective, so the returned aux satisfy
 * complementarity exactly. Both moves are exact: the objective falls in k with
 * slope P(solvent) - delta < 0, k only has lower bounds, and for fixed (x, k) the
 * closure is the largest feasible aux.
 */
inline SolveResult solve(const ReformulatedProblem& problem, const SolverOptions& opts = {}) {
    const std::size_t off = problem.aux_offset;
    return detail::solve_multistart(problem.smooth, opts, [&problem, off](std::span<double> z) {
        problem.base.complete_start(z.first(off));
        const auto aux = problem.closure(z.first(off - 1), z[off - 1]);
        std::copy(aux.begin(), aux.end(), z.begin() + static_cast<std::ptrdiff_t>(off));
    });
}

// ---- grid oracle ---------------------------------------------------------------

/**
 * Exhaustive scan of the weight simplex at step `resolution` (n <= 4).
 *
 * Every grid point takes k = max(k_lev, K(x)). Min-risk problems additionally
 * walk k upward in steps of `resolution` while the violation keeps shrinking,
 * until the return floor holds or k exceeds 1. For the reformulated problem the aux variables take their optimal
 * closure max(R_s, 0). Feasibility is checked with `is_feasible` at 1e-12.
 */
inline SolveResult grid_oracle(const EvaluatedProblem& problem, double resolution,
                               const ReformulatedProblem* reformulated = nullptr) {
    const std::size_t n = problem.num_weights;
    if (n > 4) throw ConfigError("grid oracle supports at most 4 loans", "universe");
    if (!(resolution > 0.0 && resolution <= 1.0)) throw ConfigError("resolution must lie in (0, 1]", "resolution");
    const double steps_f = 1.0 / resolution;
    const auto steps = static_cast<long>(std::llround(steps_f));
    if (std::abs(steps_f - static_cast<double>(steps)) > 1e-9 * steps_f)
        throw ConfigError("resolution must divide 1 evenly", "resolution");

    const EvaluatedProblem& target = reformulated ? reformulated->smooth : problem;
    const bool scan_k = is_min_risk(problem.kind);
    const double k_lev = problem.spec().k_lev;

    SolveResult best;
    std::size_t visited = 0;
    std::vector<long> counts(n, 0);
    std::vector<double> x(n);

    auto evaluate = [&](std::size_t index) {
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
        const double envelope = std::max(k_lev, portfolio_capital(problem.spec().universe, x));
        double prev_violation = std::numeric_limits<double>::infinity();
        for (long j = 0;; ++j) {
            const double k = envelope + static_cast<double>(j) * resolution;
            if (k > 1.0) break;
            std::vector<double> z = reformulated ? reformulated->lift(x, k) : [&] {
                std::vector<double> v(x);
                v.push_back(k);
                return v;
            }();
            const auto feas = is_feasible(target, z, 1e-12);
            if (feas.feasible) {
                const double obj = target.objective(z);
                if (best.status == SolveStatus::INFEASIBLE_DETECTED || obj > best.objective + 1e-12) {
                    best = detail::to_result(target, z, obj, feas.max_violation);
                    best.status = SolveStatus::CONVERGED;
                    best.best_start_index = index;
                }
                break;
            }
            // Stop once raising k no longer helps. With delta > 1 both return
            // functionals fall in k, so this ends the walk after one extra step.
            if (!scan_k || feas.max_violation >= prev_violation) break;
            prev_violation = feas.max_violation;
        }
    };

    // Enumerate compositions of `steps` into n nonnegative parts in lexicographic order.
    std::function<void(std::size_t, long)> walk = [&](std::size_t i, long remaining) {
        if (i + 1 == n) {
            counts[i] = remaining;
            evaluate(visited++);
            return;
        }
        for (long c = 0; c <= remaining; ++c) {
            counts[i] = c;
            walk(i + 1, remaining - c);
        }
    };
    walk(0, steps);

    best.starts_used = visited;
    return best;
}

inline SolveResult grid_oracle(const ReformulatedProblem& problem, double resolution) {
    return grid_oracle(problem.base, resolution, &problem);
}

// ---- model comparison ------------------------------------------------------------

struct ComparisonParams {
    double delta = 1.04;
    double k_lev = 0.04;
    RiskMeasure risk_measure = RiskMeasure::EL;
    std::optional<double> mu;
    std::optional<double> theta;
    IrbParams irb;
    std::optional<CorrelationMatrix> default_corr;
    SolverOptions solver;
};

struct PairComparison {
    ProblemKind without_kind{};
    ProblemKind with_kind{};
    SolveResult without_ll;
    SolveResult with_ll;
    double risk_without = 0.0;
    double risk_with = 0.0;
    double decrease_pct = 0.0; ///< 100 (rho_without - rho_with) / rho_without; 0 when rho_without = 0
    std::size_t truncated_without = 0; ///< scenarios with R_s < 0 at the solution
    std::size_t truncated_with = 0;
};

struct ComparisonReport {
    RiskMeasure risk_measure = RiskMeasure::EL;
    std::optional<PairComparison> min_risk;   ///< P2 vs P4
    std::optional<PairComparison> max_return; ///< P1 vs P3
};

inline ProblemSpec make_spec(ProblemKind kind, const LoanUniverse& u, const ComparisonParams& params) {
    ProblemSpec spec;
    spec.kind = kind;
    spec.universe = u;
    spec.delta = params.delta;
    spec.k_lev = params.k_lev;
    spec.risk_measure = params.risk_measure;
    spec.irb = params.irb;
    spec.default_corr = params.default_corr;
    if (is_min_risk(kind))
        spec.mu = params.mu;
    else
        spec.theta = params.theta;
    return spec;
}

/// Limited-liability maximization through the complementarity reformulation.
inline SolveResult solve_p3(const EvaluatedProblem& p3, const SolverOptions& opts) {
    return solve(reformulate_ll(p3), opts);
}

inline std::size_t count_truncated(const LoanUniverse& u, const SolveResult& r) {
    const ScenarioEvaluator ev(u);
    std::size_t count = 0;
    for (std::size_t s = 0; s < ev.table().size(); ++s)
        if (ev.realization(r.x_star, r.k_star, s) < 0.0) ++count;
    return count;
}

/// Thrown by compare_models when either side of a pair is infeasible.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what, SolveResult result)
        : std::runtime_error(what), result_(std::move(result)) {}
    const SolveResult& result() const noexcept { return result_; }

private:
    SolveResult result_;
};

inline PairComparison compare_pair(ProblemKind without, ProblemKind with, const LoanUniverse& u,
                                   const ComparisonParams& params) {
    PairComparison out;
    out.without_kind = without;
    out.with_kind = with;
    const auto p_without = build_problem(make_spec(without, u, params));
    const auto p_with = build_problem(make_spec(with, u, params));
    out.without_ll = solve(p_without, params.solver);
    out.with_ll = with == ProblemKind::P3_MAX_RETURN_LL ? solve_p3(p_with, params.solver) : solve(p_with, params.solver);
    if (out.without_ll.status == SolveStatus::INFEASIBLE_DETECTED)
        throw InfeasibleError(std::string(to_string(without)) + " is infeasible", out.without_ll);
    if (out.with_ll.status == SolveStatus::INFEASIBLE_DETECTED)
        throw InfeasibleError(std::string(to_string(with)) + " is infeasible", out.with_ll);
    out.risk_without = p_without.risk(out.without_ll.x_star);
    out.risk_with = p_with.risk(out.with_ll.x_star);
    out.decrease_pct = out.risk_without > 0.0 ? 100.0 * (out.risk_without - out.risk_with) / out.risk_without : 0.0;
    out.truncated_without = count_truncated(u, out.without_ll);
    out.truncated_with = count_truncated(u, out.with_ll);
    return out;
}

/// Solves the (P2, P4) pair when mu is set and the (P1, P3) pair when theta is set.
inline ComparisonReport compare_models(const LoanUniverse& u, const ComparisonParams& params) {
    if (!params.mu && !params.theta) throw ConfigError("comparison needs mu and/or theta", "params");
    ComparisonReport rep;
    rep.risk_measure = params.risk_measure;
    if (params.mu) rep.min_risk = compare_pair(ProblemKind::P2_MIN_RISK, ProblemKind::P4_MIN_RISK_LL, u, params);
    if (params.theta)
        rep.max_return = compare_pair(ProblemKind::P1_MAX_RETURN, ProblemKind::P3_MAX_RETURN_LL, u, params);
    return rep;
}

} // namespace llport
