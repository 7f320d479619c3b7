/**
 * @file numerics.hpp
 * @brief Standard normal kernel and the IRB capital-requirement curve.
 *
 * The capital charge per unit exposure is
 *
 *     C(PD, LGD) = LGD * (Z - PD),
 *     Z = Phi( (Phi^-1(PD) + sqrt(rho) * Phi^-1(q)) / sqrt(1 - rho) )
 *
 * with asset correlation rho and confidence level q (0.999 by default).
 * Everything here is pure and safe to call concurrently.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "llport/errors.hpp"

namespace llport {

/// Parameters of the single-factor IRB transform.
struct IrbParams {
    double asset_correlation = 0.15;
    double confidence_level = 0.999;

    void validate() const {
        if (!(asset_correlation >= 0.0 && asset_correlation < 1.0))
            throw DomainError("asset_correlation must lie in [0, 1), got " + std::to_string(asset_correlation));
        if (!(confidence_level > 0.0 && confidence_level < 1.0))
            throw DomainError("confidence_level must lie in (0, 1), got " + std::to_string(confidence_level));
    }
};

/// Standard normal density.
inline double std_normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Phi(z). erfc keeps full relative precision in the lower tail.
inline double std_normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace detail {

// Acklam's rational approximation of the lower half of Phi^-1, relative error ~1.15e-9.
inline double acklam_lower(double p) noexcept {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace detail

/**
 * Phi^-1(p) for 0 < p < 1.
 *
 * Acklam's approximation followed by one Newton step on the CDF. The upper half
 * is mapped onto the lower half (1 - p is exact for p >= 0.5), so the result is
 * odd-symmetric about 0.5.
 */
inline double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("std_normal_quantile: p must lie in (0, 1), got p = " + std::to_string(p));
    if (p == 0.5) return 0.0;
    const bool upper = p > 0.5;
    const double tail = upper ? 1.0 - p : p;

    double z = detail::acklam_lower(tail);
    z -= (std_normal_cdf(z) - tail) / std_normal_pdf(z);
    return upper ? -z : z;
}

/// IRB capital per unit exposure, clamped to [0, 1]. A zero PD or LGD gives exactly 0.
inline double irb_capital(double pd, double lgd, const IrbParams& params = {}) {
    if (!(pd >= 0.0 && pd < 1.0))
        throw DomainError("irb_capital: pd must lie in [0, 1), got pd = " + std::to_string(pd));
    if (!(lgd >= 0.0 && lgd <= 1.0))
        throw DomainError("irb_capital: lgd must lie in [0, 1], got lgd = " + std::to_string(lgd));
    params.validate();
    if (pd == 0.0 || lgd == 0.0) return 0.0;

    const double rho = params.asset_correlation;
    const double shifted = (std_normal_quantile(pd) +
                            std::sqrt(rho) * std_normal_quantile(params.confidence_level)) /
                           std::sqrt(1.0 - rho);
    const double z = std_normal_cdf(shifted);
    const double capital = lgd * (z - pd);
    return capital < 0.0 ? 0.0 : (capital > 1.0 ? 1.0 : capital);
}

} // namespace llport
