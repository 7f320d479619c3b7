/**
 * @file portfolio.hpp
 * @brief Loan universe, EL/UL risk measures, default scenarios and the
 *        plain / limited-liability return functionals.
 *
 * A portfolio is a weight vector x over n loans (fractions of unit wealth)
 * together with a capital level k; liabilities are 1 - k. Loans with pd == 0
 * are "safe", the rest are "risky" and take part in default enumeration.
 *
 * Scenario payoffs per unit weight:
 *   safe loan                 r        (or 1 + r with gross_safe_leg)
 *   risky loan, repaid        1 + r
 *   risky loan, defaulted     1 - lgd
 * and the net realization of a scenario is the weighted payoff minus (1 - k).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "llport/errors.hpp"
#include "llport/numerics.hpp"

namespace llport {

/// Largest number of risky loans whose 2^m default patterns are enumerated exactly.
inline constexpr std::size_t scenario_cap = 20;

/// Assumption (A): banks do not lend at a default probability of 0.2 or more.
inline constexpr double max_admissible_pd = 0.2;

/// Neumaier compensated summation; result is insensitive to term order up to O(eps * sum|x|).
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct Loan {
    std::string id;
    double rate = 0.0;
    double pd = 0.0;
    double lgd = 0.0;
    double capital_req = 0.0; ///< K_i, fraction of exposure

    bool is_safe() const noexcept { return pd == 0.0; }
    double expected_loss_rate() const noexcept { return pd * lgd; }
    double unexpected_loss_rate() const noexcept { return lgd * std::sqrt(pd * (1.0 - pd)); }
};

/// Builds a loan whose capital requirement comes from the IRB curve.
inline Loan make_loan(std::string id, double rate, double pd, double lgd, const IrbParams& irb = {}) {
    Loan loan{std::move(id), rate, pd, lgd, 0.0};
    loan.capital_req = irb_capital(pd, lgd, irb);
    return loan;
}

class LoanUniverse {
public:
    LoanUniverse() = default;

    explicit LoanUniverse(std::vector<Loan> loans, bool gross_safe_leg = false)
        : loans_(std::move(loans)), gross_safe_leg_(gross_safe_leg) {
        if (loans_.empty()) throw StructuralError("loan universe is empty");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < loans_.size(); ++i) {
            const Loan& l = loans_[i];
            if (!ids.insert(l.id).second) throw StructuralError("duplicate loan id '" + l.id + "'");
            if (!(l.pd >= 0.0 && l.pd < 1.0)) throw DomainError("loan '" + l.id + "': pd must lie in [0, 1)");
            if (!(l.lgd >= 0.0 && l.lgd <= 1.0)) throw DomainError("loan '" + l.id + "': lgd must lie in [0, 1]");
            if (!(l.rate > -1.0) || !std::isfinite(l.rate))
                throw DomainError("loan '" + l.id + "': rate must be finite and > -1");
            if (!(l.capital_req >= 0.0 && l.capital_req <= 1.0))
                throw DomainError("loan '" + l.id + "': capital_req must lie in [0, 1]");
            if (l.is_safe() && l.capital_req != 0.0)
                throw DomainError("loan '" + l.id + "': a loan with pd = 0 carries no capital requirement");
            if (!l.is_safe()) risky_.push_back(i);
        }
    }

    std::size_t size() const noexcept { return loans_.size(); }
    const std::vector<Loan>& loans() const noexcept { return loans_; }
    const Loan& operator[](std::size_t i) const { return loans_.at(i); }
    const std::vector<std::size_t>& risky_indices() const noexcept { return risky_; }
    std::size_t risky_count() const noexcept { return risky_.size(); }
    bool gross_safe_leg() const noexcept { return gross_safe_leg_; }

    std::vector<double> capital_requirements() const {
        std::vector<double> out;
        out.reserve(loans_.size());
        for (const auto& l : loans_) out.push_back(l.capital_req);
        return out;
    }

    /// Per-unit payoff of a safe loan under the configured convention.
    double safe_payoff(std::size_t i) const { return loans_[i].rate + (gross_safe_leg_ ? 1.0 : 0.0); }

    /// Expected per-unit payoff of loan i over its own default event.
    double expected_payoff(std::size_t i) const {
        const Loan& l = loans_[i];
        if (l.is_safe()) return safe_payoff(i);
        return (1.0 - l.pd) * (1.0 + l.rate) + l.pd * (1.0 - l.lgd);
    }

private:
    std::vector<Loan> loans_;
    std::vector<std::size_t> risky_;
    bool gross_safe_leg_ = false;
};

struct Allocation {
    std::vector<double> weights;
    double capital = 0.0;

    /// Throws DomainError unless x is on the simplex (to `tol`) and k is in [0, 1].
    void validate(std::size_t n, double tol = 1e-9) const {
        if (weights.size() != n)
            throw StructuralError("allocation has " + std::to_string(weights.size()) + " weights, universe has " +
                                  std::to_string(n) + " loans");
        CompensatedSum s;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("allocation weights must be nonnegative");
            s.add(w);
        }
        if (std::abs(s.value() - 1.0) > tol) throw DomainError("allocation weights must sum to 1");
        if (!(capital >= 0.0 && capital <= 1.0)) throw DomainError("capital must lie in [0, 1]");
    }
};

inline void require_dimension(const LoanUniverse& u, std::span<const double> x) {
    if (x.size() != u.size())
        throw StructuralError("weight vector has length " + std::to_string(x.size()) + ", universe has " +
                              std::to_string(u.size()) + " loans");
}

/**
 * The 2^m default patterns over the risky loans in binary-counting order.
 * Bit j of the scenario index is set when risky loan j (in universe order) defaults,
 * so index 0 is "no defaults" and index 2^m - 1 is "all default".
 */
class ScenarioTable {
public:
    ScenarioTable() = default;
    ScenarioTable(std::vector<std::size_t> risky, std::vector<double> probabilities)
        : risky_(std::move(risky)), probabilities_(std::move(probabilities)) {}

    std::size_t size() const noexcept { return probabilities_.size(); }
    std::size_t risky_count() const noexcept { return risky_.size(); }
    const std::vector<std::size_t>& risky_indices() const noexcept { return risky_; }
    const std::vector<double>& probabilities() const noexcept { return probabilities_; }
    double probability(std::size_t s) const { return probabilities_.at(s); }

    bool defaulted(std::size_t s, std::size_t j) const noexcept { return ((s >> j) & 1u) != 0; }

    std::vector<bool> pattern(std::size_t s) const {
        std::vector<bool> out(risky_.size());
        for (std::size_t j = 0; j < risky_.size(); ++j) out[j] = defaulted(s, j);
        return out;
    }

private:
    std::vector<std::size_t> risky_;
    std::vector<double> probabilities_;
};

/// Independent-default scenario table. Throws CapacityError above `scenario_cap` risky loans.
inline ScenarioTable enumerate_scenarios(const LoanUniverse& u) {
    const std::size_t m = u.risky_count();
    if (m > scenario_cap)
        throw CapacityError("universe has " + std::to_string(m) + " risky loans; exact enumeration is capped at " +
                            std::to_string(scenario_cap));
    const std::size_t count = std::size_t{1} << m;
    std::vector<double> probs(count);
    for (std::size_t s = 0; s < count; ++s) {
        double p = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double pd = u[u.risky_indices()[j]].pd;
            p *= ((s >> j) & 1u) ? pd : 1.0 - pd;
        }
        probs[s] = p;
    }
    return ScenarioTable(u.risky_indices(), std::move(probs));
}

/// Weighted payoff of scenario `s` before liabilities.
inline double gross_value(const LoanUniverse& u, std::span<const double> x, std::size_t s) {
    CompensatedSum acc;
    std::size_t j = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Loan& l = u[i];
        if (l.is_safe()) {
            acc.add(u.safe_payoff(i) * x[i]);
        } else {
            const bool d = ((s >> j) & 1u) != 0;
            acc.add((d ? 1.0 - l.lgd : 1.0 + l.rate) * x[i]);
            ++j;
        }
    }
    return acc.value();
}

/**
 * Evaluates the scenario functionals on raw (x, k) without re-enumerating scenarios.
 * Holds references; the universe must outlive it.
 */
class ScenarioEvaluator {
public:
    explicit ScenarioEvaluator(const LoanUniverse& u) : universe_(&u), table_(enumerate_scenarios(u)) {}

    const LoanUniverse& universe() const noexcept { return *universe_; }
    const ScenarioTable& table() const noexcept { return table_; }

    double realization(std::span<const double> x, double k, std::size_t s) const {
        return gross_value(*universe_, x, s) - (1.0 - k);
    }

    std::vector<double> realizations(std::span<const double> x, double k) const {
        std::vector<double> out(table_.size());
        for (std::size_t s = 0; s < out.size(); ++s) out[s] = realization(x, k, s);
        return out;
    }

    /// E[X_x] - (1 - k) - delta * k, with the expectation taken over scenarios.
    double plain(std::span<const double> x, double k, double delta) const {
        CompensatedSum acc;
        for (std::size_t s = 0; s < table_.size(); ++s) acc.add(table_.probability(s) * gross_value(*universe_, x, s));
        return acc.value() - (1.0 - k) - delta * k;
    }

    /// E[max(X_x - (1 - k), 0)] - delta * k.
    double limited(std::span<const double> x, double k, double delta) const {
        CompensatedSum acc;
        for (std::size_t s = 0; s < table_.size(); ++s) {
            const double r = realization(x, k, s);
            if (r > 0.0) acc.add(table_.probability(s) * r);
        }
        return acc.value() - delta * k;
    }

    /// Gradient of `plain` with respect to (x, k); `grad` has n + 1 entries.
    void plain_gradient(double delta, std::span<double> grad) const {
        const std::size_t n = universe_->size();
        for (std::size_t i = 0; i < n; ++i) grad[i] = universe_->expected_payoff(i);
        grad[n] = 1.0 - delta;
    }

    /// A (sub)gradient of `limited`: scenarios with R_s > 0 contribute, R_s <= 0 are truncated.
    void limited_gradient(std::span<const double> x, double k, double delta, std::span<double> grad) const {
        const std::size_t n = universe_->size();
        std::vector<CompensatedSum> gx(n);
        CompensatedSum gk;
        for (std::size_t s = 0; s < table_.size(); ++s) {
            if (realization(x, k, s) <= 0.0) continue;
            const double p = table_.probability(s);
            std::size_t j = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const Loan& l = (*universe_)[i];
                double pay;
                if (l.is_safe()) {
                    pay = universe_->safe_payoff(i);
                } else {
                    pay = table_.defaulted(s, j) ? 1.0 - l.lgd : 1.0 + l.rate;
                    ++j;
                }
                gx[i].add(p * pay);
            }
            gk.add(p);
        }
        for (std::size_t i = 0; i < n; ++i) grad[i] = gx[i].value();
        grad[n] = gk.value() - delta;
    }

    double worst_case(std::span<const double> x, double k) const {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < table_.size(); ++s) worst = std::min(worst, realization(x, k, s));
        return worst;
    }

private:
    const LoanUniverse* universe_;
    ScenarioTable table_;
};

/// Symmetric default-correlation matrix with unit diagonal (row-major).
class CorrelationMatrix {
public:
    CorrelationMatrix() = default;

    static CorrelationMatrix identity(std::size_t n) {
        CorrelationMatrix c;
        c.n_ = n;
        c.values_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) c.values_[i * n + i] = 1.0;
        return c;
    }

    explicit CorrelationMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
        values_.reserve(n_ * n_);
        for (const auto& row : rows) {
            if (row.size() != n_) throw StructuralError("correlation matrix must be square");
            values_.insert(values_.end(), row.begin(), row.end());
        }
        for (std::size_t i = 0; i < n_; ++i) {
            if (std::abs((*this)(i, i) - 1.0) > 1e-12) throw DomainError("correlation matrix must have unit diagonal");
            for (std::size_t j = 0; j < i; ++j) {
                if (std::abs((*this)(i, j) - (*this)(j, i)) > 1e-12)
                    throw DomainError("correlation matrix must be symmetric");
                if (std::abs((*this)(i, j)) > 1.0) throw DomainError("correlations must lie in [-1, 1]");
            }
        }
    }

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    bool is_identity() const {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if ((*this)(i, j) != (i == j ? 1.0 : 0.0)) return false;
        return true;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

// ---- risk measures -------------------------------------------------------

inline double expected_loss(const LoanUniverse& u, std::span<const double> x) {
    require_dimension(u, x);
    CompensatedSum acc;
    for (std::size_t i = 0; i < u.size(); ++i) acc.add(x[i] * u[i].expected_loss_rate());
    return acc.value();
}

inline double expected_loss(const LoanUniverse& u, const Allocation& a) { return expected_loss(u, a.weights); }

/// sqrt(x' D C D x) with D = diag(UL_i). Throws DomainError on a negative quadratic form.
inline double unexpected_loss(const LoanUniverse& u, std::span<const double> x, const CorrelationMatrix& corr) {
    require_dimension(u, x);
    if (corr.size() != u.size())
        throw StructuralError("correlation matrix size " + std::to_string(corr.size()) + " does not match universe");
    CompensatedSum q;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ai = x[i] * u[i].unexpected_loss_rate();
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < u.size(); ++j) q.add(ai * corr(i, j) * x[j] * u[j].unexpected_loss_rate());
    }
    const double v = q.value();
    if (v < 0.0) {
        if (v < -1e-14) throw DomainError("correlation matrix is not positive semidefinite (negative quadratic form)");
        return 0.0;
    }
    return std::sqrt(v);
}

inline double unexpected_loss(const LoanUniverse& u, std::span<const double> x) {
    return unexpected_loss(u, x, CorrelationMatrix::identity(u.size()));
}

inline double unexpected_loss(const LoanUniverse& u, const Allocation& a,
                              const std::optional<CorrelationMatrix>& corr = std::nullopt) {
    return corr ? unexpected_loss(u, a.weights, *corr) : unexpected_loss(u, a.weights);
}

/// Gradient of UL; the zero vector where UL vanishes.
inline void unexpected_loss_gradient(const LoanUniverse& u, std::span<const double> x, const CorrelationMatrix& corr,
                                     std::span<double> grad) {
    const double ul = unexpected_loss(u, x, corr);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (ul == 0.0) {
            grad[i] = 0.0;
            continue;
        }
        CompensatedSum acc;
        for (std::size_t j = 0; j < u.size(); ++j) acc.add(corr(i, j) * x[j] * u[j].unexpected_loss_rate());
        grad[i] = u[i].unexpected_loss_rate() * acc.value() / ul;
    }
}

/// IRB capital of the portfolio, K(x) = sum_i x_i K_i.
inline double portfolio_capital(const LoanUniverse& u, std::span<const double> x) {
    require_dimension(u, x);
    CompensatedSum acc;
    for (std::size_t i = 0; i < u.size(); ++i) acc.add(x[i] * u[i].capital_req);
    return acc.value();
}

// ---- scenario functionals ------------------------------------------------

/// Net value R_s of the portfolio in one default pattern (one flag per risky loan).
inline double realization_value(const LoanUniverse& u, const Allocation& a, const std::vector<bool>& pattern) {
    require_dimension(u, a.weights);
    if (pattern.size() != u.risky_count())
        throw StructuralError("default pattern has " + std::to_string(pattern.size()) + " entries, universe has " +
                              std::to_string(u.risky_count()) + " risky loans");
    std::size_t s = 0;
    for (std::size_t j = 0; j < pattern.size(); ++j)
        if (pattern[j]) s |= std::size_t{1} << j;
    return gross_value(u, a.weights, s) - (1.0 - a.capital);
}

inline double expected_return_plain(const LoanUniverse& u, const Allocation& a, double delta) {
    require_dimension(u, a.weights);
    return ScenarioEvaluator(u).plain(a.weights, a.capital, delta);
}

inline double expected_return_limited_liability(const LoanUniverse& u, const Allocation& a, double delta) {
    require_dimension(u, a.weights);
    return ScenarioEvaluator(u).limited(a.weights, a.capital, delta);
}

/// Smallest scenario net value; the bank meets its liabilities in every scenario iff this is >= 0.
inline double worst_case_net_value(const LoanUniverse& u, const Allocation& a) {
    require_dimension(u, a.weights);
    return ScenarioEvaluator(u).worst_case(a.weights, a.capital);
}

// ---- screening -------------------------------------------------------------

struct LoanScreen {
    std::string id;
    bool pd_violation = false;     ///< pd >= 0.2
    double capital_holding = 0.0;  ///< max(K_i, k_lev)
    double score = 0.0;            ///< single-loan profitability R_i - (1 - k') - delta k'
};

struct LoanDominance {
    std::string riskier_id;
    std::string safer_id;
    bool dominates = false; ///< riskier score strictly above the safer one
};

struct ScreeningReport {
    std::vector<LoanScreen> loans;
    std::vector<std::string> violations;
    std::vector<LoanDominance> pairs;
};

/**
 * Flags loans breaching the pd ceiling and scores each loan as if the whole
 * wealth were lent to it, holding max(K_i, k_lev) of capital. "Riskier" orders
 * loans by expected-loss rate pd * lgd; ties are not paired.
 */
inline ScreeningReport screen_loans(const LoanUniverse& u, double delta, double k_lev) {
    ScreeningReport report;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Loan& l = u[i];
        LoanScreen s;
        s.id = l.id;
        s.pd_violation = l.pd >= max_admissible_pd;
        s.capital_holding = std::max(l.capital_req, k_lev);
        s.score = u.expected_payoff(i) - (1.0 - s.capital_holding) - delta * s.capital_holding;
        if (s.pd_violation) report.violations.push_back(l.id);
        report.loans.push_back(std::move(s));
    }
    for (std::size_t h = 0; h < u.size(); ++h)
        for (std::size_t l = 0; l < u.size(); ++l)
            if (u[h].expected_loss_rate() > u[l].expected_loss_rate())
                report.pairs.push_back({u[h].id, u[l].id, report.loans[h].score > report.loans[l].score});
    return report;
}

} // namespace llport
