// Shared fixtures and independent oracles for the test suites.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "llport/portfolio.hpp"
#include "llport/problems.hpp"

namespace llport::testing {

inline constexpr double kRf = 0.03;
inline constexpr double kPdS = 0.061, kLgdS = 0.10, kRateS = 0.09;
inline constexpr double kPdR = 0.122, kLgdR = 0.09, kRateR = 0.132;
inline constexpr double kDelta = 1.04;
inline constexpr double kLev = 0.04;

// Golden IRB charges for the two risky loans at rho = 0.15, 99.9%.
inline constexpr double kCapS = 0.02912752448063909;
inline constexpr double kCapR = 0.03525798261126232;

inline LoanUniverse three_loans(bool gross_safe_leg = false) {
    return LoanUniverse({make_loan("safe", kRf, 0.0, 0.0), make_loan("L_s", kRateS, kPdS, kLgdS),
                         make_loan("L_r", kRateR, kPdR, kLgdR)},
                        gross_safe_leg);
}

inline LoanUniverse safe_only(double rate = kRf) { return LoanUniverse({make_loan("safe", rate, 0.0, 0.0)}); }

inline ProblemSpec spec_for(ProblemKind kind, const LoanUniverse& u, double bound,
                            RiskMeasure measure = RiskMeasure::EL) {
    ProblemSpec s;
    s.kind = kind;
    s.universe = u;
    s.delta = kDelta;
    s.k_lev = kLev;
    s.risk_measure = measure;
    if (is_min_risk(kind))
        s.mu = bound;
    else
        s.theta = bound;
    return s;
}

// ---- normal distribution oracles ---------------------------------------------

/// Phi(z) by composite Simpson integration of the density from 0 to z.
inline double cdf_by_integration(double z, int intervals = 20000) {
    const double a = 0.0, b = std::abs(z);
    if (b == 0.0) return 0.5;
    const double h = (b - a) / intervals;
    auto f = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    double acc = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    const double area = acc * h / 3.0;
    return z > 0 ? 0.5 + area : 0.5 - area;
}

/// Mills-ratio bracket for the upper tail 1 - Phi(t), t > 0.
inline std::pair<double, double> mills_bracket(double t) {
    const double phi = std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
    return {phi * t / (1.0 + t * t), phi / t};
}

/// Inverse of a monotone cdf by bisection on [-40, 40].
template <class Cdf>
double quantile_by_bisection(Cdf cdf, double p, int iterations = 200) {
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- random instances ----------------------------------------------------------

/// One safe loan plus `risky` random loans with rates in [0.02, 0.2], pd in [0, 0.19], lgd in [0.05, 0.6].
inline LoanUniverse random_universe(std::mt19937_64& rng, std::size_t risky = 2, bool gross = false) {
    std::uniform_real_distribution<double> rate(0.02, 0.20), pd(0.0, 0.19), lgd(0.05, 0.60);
    std::vector<Loan> loans{make_loan("safe", rate(rng), 0.0, 0.0)};
    for (std::size_t j = 0; j < risky; ++j) {
        double p = pd(rng);
        if (p < 1e-3) p = 1e-3; // keep the loan risky
        loans.push_back(make_loan("L" + std::to_string(j + 1), rate(rng), p, lgd(rng)));
    }
    return LoanUniverse(std::move(loans), gross);
}

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> x(n);
    double s = 0.0;
    for (double& v : x) s += (v = e(rng));
    for (double& v : x) v /= s;
    return x;
}

/// Random point on the grid {i * step} of the simplex.
inline std::vector<double> random_grid_weights(std::mt19937_64& rng, std::size_t n, int steps) {
    std::vector<double> x(n, 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<int> counts(n, 0);
    for (int i = 0; i < steps; ++i) ++counts[pick(rng)];
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(counts[i]) / steps;
    return x;
}

inline double capital_floor(const LoanUniverse& u, std::span<const double> x, double k_lev = kLev) {
    return std::max(k_lev, portfolio_capital(u, x));
}

} // namespace llport::testing
