#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace hwvar::normal {

inline double pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF. erfc keeps full relative precision in the lower tail;
/// underflows cleanly to 0 below about -38.
inline double cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

// Acklam's rational approximation, |rel err| < 1.15e-9; polished below.
inline double acklam(double p) {
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

// Lower half only (p <= 0.5), where cdf() is accurate in relative terms.
inline double inverse_lower(double p) {
    double x = acklam(p);
    if (p < std::numeric_limits<double>::min())
        return x;
    for (int it = 0; it < 3; ++it) {
        const double dens = pdf(x);
        if (dens == 0.0)
            break;
        const double u = (cdf(x) - p) / dens;
        const double step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if (std::abs(step) <= 1e-16 * std::abs(x))
            break;
    }
    return x;
}

} // namespace detail

/// Inverse standard normal CDF. Returns -inf at 0 and +inf at 1.
inline double inverse_cdf(double p) {
    if (p <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (p >= 1.0)
        return std::numeric_limits<double>::infinity();
    if (p <= 0.5)
        return detail::inverse_lower(p);
    return -detail::inverse_lower(1.0 - p);
}

} // namespace hwvar::normal
