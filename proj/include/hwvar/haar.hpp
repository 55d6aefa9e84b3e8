#pragma once

#include "hwvar/errors.hpp"

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

namespace hwvar::haar {

struct HaarIndex {
    int j = 0;
    long k = 0;
};

inline double level_scale(int j) { return std::exp2(0.5 * j); }

/// Father function phi_{j,k}(x) = 2^{j/2} 1{k <= 2^j x < k+1}.
inline double phi(int j, long k, double x) {
    const double t = std::ldexp(x, j) - static_cast<double>(k);
    return (t >= 0.0 && t < 1.0) ? level_scale(j) : 0.0;
}

/// Mother function psi_{j,k}(x): +2^{j/2} on the left half of the support, -2^{j/2} on the right.
inline double psi(int j, long k, double x) {
    const double t = std::ldexp(x, j) - static_cast<double>(k);
    if (t >= 0.0 && t < 0.5)
        return level_scale(j);
    if (t >= 0.5 && t < 1.0)
        return -level_scale(j);
    return 0.0;
}

/// Index of the dyadic interval [k/2^m, (k+1)/2^m) containing x.
inline long interval_index(int m, double x) { return static_cast<long>(std::floor(std::ldexp(x, m))); }

/// Scaling coefficients c_{m,k} of a function on [0,1]; may be partially filled.
class WaveletApproximation {
public:
    explicit WaveletApproximation(int m = 10) : m_(m) {
        if (m < 0 || m > 30)
            throw InputError("resolution level m out of range [0,30]");
    }

    int level() const { return m_; }
    long size() const { return 1L << m_; }
    double upper_bound() const { return std::exp2(-0.5 * m_); }

    bool contains(long k) const { return coeffs_.contains(k); }
    std::size_t stored() const { return coeffs_.size(); }

    void set(long k, double c) {
        if (k < 0 || k >= size())
            throw InputError("coefficient index out of range: " + std::to_string(k));
        coeffs_[k] = c;
    }

    double at(long k) const {
        const auto it = coeffs_.find(k);
        if (it == coeffs_.end())
            throw CoefficientNotComputed(k);
        return it->second;
    }

    std::optional<double> find(long k) const {
        const auto it = coeffs_.find(k);
        if (it == coeffs_.end())
            return std::nullopt;
        return it->second;
    }

    const std::map<long, double>& sparse() const { return coeffs_; }

    /// Dense copy; throws if any coefficient is missing.
    std::vector<double> dense() const {
        std::vector<double> out(static_cast<std::size_t>(size()));
        for (long k = 0; k < size(); ++k)
            out[static_cast<std::size_t>(k)] = at(k);
        return out;
    }

    static WaveletApproximation from_dense(int m, std::span<const double> c) {
        WaveletApproximation w(m);
        if (static_cast<long>(c.size()) != w.size())
            throw InputError("dense coefficient vector has wrong length");
        for (long k = 0; k < w.size(); ++k)
            w.coeffs_.emplace_hint(w.coeffs_.end(), k, c[static_cast<std::size_t>(k)]);
        return w;
    }

private:
    int m_;
    std::map<long, double> coeffs_;
};

/// Piecewise-constant value 2^{m/2} c_{m,k} on the interval containing x in [0,1).
inline double reconstruct(const WaveletApproximation& w, double x) {
    const long k = interval_index(w.level(), x);
    return level_scale(w.level()) * w.at(k);
}

/// Scaling coefficients of a function that is constant (= values[k]) on each
/// level-m interval.
inline WaveletApproximation project_piecewise_constant(int m, std::span<const double> values) {
    std::vector<double> c(values.begin(), values.end());
    const double s = std::exp2(-0.5 * m);
    for (auto& v : c)
        v *= s;
    return WaveletApproximation::from_dense(m, c);
}

struct DecomposedLevel {
    std::vector<double> scaling; // c_{m-1,k}
    std::vector<double> detail;  // d_{m-1,k}
};

/// One analysis step of the fast Haar transform, level m to m-1.
inline DecomposedLevel decompose_step(std::span<const double> coeffs) {
    const std::size_t n = coeffs.size();
    if (n < 2 || (n & (n - 1)) != 0)
        throw InputError("decompose_step needs a length 2^m vector with m >= 1");
    DecomposedLevel out;
    out.scaling.resize(n / 2);
    out.detail.resize(n / 2);
    constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    for (std::size_t k = 0; k < n / 2; ++k) {
        out.scaling[k] = (coeffs[2 * k] + coeffs[2 * k + 1]) * inv_sqrt2;
        out.detail[k] = (coeffs[2 * k] - coeffs[2 * k + 1]) * inv_sqrt2;
    }
    return out;
}

/// Writes `k,c` rows with 17 significant digits.
inline void write_coefficients_csv(std::ostream& out, const WaveletApproximation& w) {
    out << "k,c\n" << std::setprecision(17);
    for (const auto& [k, c] : w.sparse())
        out << k << ',' << c << '\n';
}

} // namespace hwvar::haar
