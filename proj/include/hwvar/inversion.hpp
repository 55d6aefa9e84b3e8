#pragma once

#include "hwvar/errors.hpp"
#include "hwvar/haar.hpp"
#include "hwvar/parallel.hpp"
#include "hwvar/portfolio.hpp"
#include "hwvar/vasicek.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace hwvar {

/// Parameters of the contour-integral coefficient recovery.
struct InversionConfig {
    int m = 10;
    std::optional<double> radius;        // Cauchy circle radius r in (0,1)
    std::optional<long> trapezoid_nodes; // J intervals over [0, pi]
    int quad_order = 128;

    long intervals() const { return 1L << m; }

    /// J; defaults to 2^{m+2}.
    long nodes() const { return trapezoid_nodes.value_or(1L << (m + 2)); }

    /// r; defaults to 10^{-8/(2J)} so that r^{2J} = 1e-8.
    double circle_radius() const {
        return radius.value_or(std::pow(10.0, -8.0 / (2.0 * static_cast<double>(nodes()))));
    }

    void validate() const {
        if (m < 1 || m > 20)
            throw InputError("m must be in [1,20], got " + std::to_string(m));
        const double r = circle_radius();
        if (!(r > 0.0 && r < 1.0))
            throw InputError("radius must lie in (0,1)");
        if (nodes() < intervals())
            throw InputError("trapezoid_nodes must be >= 2^m");
        if (quad_order < 2)
            throw InputError("quad_order must be >= 2");
    }
};

namespace detail {

inline Complex q_from_mgf(Complex mgf, Complex log_z, Complex z, int m) {
    const Complex z_pow = std::exp(std::ldexp(1.0, m) * log_z); // z^{2^m} = e^{-s}
    return (mgf - z_pow) / (std::exp2(0.5 * m) * (1.0 - z));
}

inline void check_disc(Complex z) {
    const double a = std::abs(z);
    if (!(a > 0.0 && a < 1.0))
        throw DomainError("Q(z) requires 0 < |z| < 1");
}

} // namespace detail

/// Generating function Q(z) = sum_k c_{m,k} z^k recovered from the loss MGF:
/// (M_L(-2^m ln z) - z^{2^m}) / (2^{m/2} (1 - z)), principal branch of ln.
inline Complex q_eval(const Portfolio& p, const InversionConfig& cfg, Complex z, const SystematicQuadrature& q) {
    detail::check_disc(z);
    const Complex log_z = std::log(z);
    const Complex s = -std::ldexp(1.0, cfg.m) * log_z;
    return detail::q_from_mgf(unconditional_mgf(p, s, q), log_z, z, cfg.m);
}

struct CoefficientValue {
    double raw = 0.0;     // trapezoid result before clamping
    double value = 0.0;   // clamped into [0, 2^{-m/2}]
    bool clamped = false; // |raw - value| > 1e-6
};

inline constexpr double kClampAuditTolerance = 1e-6;

/// Holds Re Q(r e^{i u_j}) on the trapezoid nodes u_j = j pi / J. Built once
/// (the expensive part: J+1 MGF evaluations); each coefficient afterwards is
/// an O(J) cosine sum.
class InversionEngine {
public:
    InversionEngine(const Portfolio& p, const InversionConfig& cfg, const SystematicQuadrature& q,
                    unsigned threads = 0)
        : cfg_(cfg) {
        cfg_.validate();
        if (!p.is_normalized(1e-9))
            throw InputError("portfolio must be normalized before inversion");
        const long J = cfg_.nodes();
        const double r = cfg_.circle_radius();
        log_r_ = std::log(r);
        re_q_.resize(static_cast<std::size_t>(J + 1));
        cos_table_.resize(static_cast<std::size_t>(2 * J));
        for (long i = 0; i < 2 * J; ++i)
            cos_table_[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(J));

        const MgfTable mgf(p, q);
        const double two_m = std::ldexp(1.0, cfg_.m);
        parallel_for(re_q_.size(), threads, [&](std::size_t begin, std::size_t end) {
            std::vector<Complex> scratch;
            for (std::size_t j = begin; j < end; ++j) {
                const double u = std::numbers::pi * static_cast<double>(j) / static_cast<double>(J);
                const Complex log_z{log_r_, u};
                const Complex z = std::exp(log_z);
                const Complex s = -two_m * log_z;
                re_q_[j] = detail::q_from_mgf(mgf(s, scratch), log_z, z, cfg_.m).real();
            }
        });
    }

    const InversionConfig& config() const { return cfg_; }

    /// c_{m,k} = (2 / (pi r^k)) int_0^pi Re Q(r e^{iu}) cos(ku) du by the
    /// trapezoidal rule. The k = 0 term takes half that factor: the full-circle
    /// integral only folds onto [0, pi] with weight 2 for k >= 1.
    CoefficientValue compute(long k) const {
        const long n = cfg_.intervals();
        if (k < 0 || k >= n)
            throw InputError("coefficient index out of range: " + std::to_string(k));
        const long J = cfg_.nodes();
        const long period = 2 * J;
        double sum = 0.5 * re_q_.front() + 0.5 * re_q_.back() * cos_table_[static_cast<std::size_t>((k * J) % period)];
        long phase = 0;
        for (long j = 1; j < J; ++j) {
            phase += k;
            if (phase >= period)
                phase -= period;
            sum += re_q_[static_cast<std::size_t>(j)] * cos_table_[static_cast<std::size_t>(phase)];
        }
        const double fold = (k == 0) ? 1.0 : 2.0;
        CoefficientValue out;
        out.raw = fold * sum / static_cast<double>(J) * std::exp(-static_cast<double>(k) * log_r_);
        const double hi = std::exp2(-0.5 * cfg_.m);
        out.value = std::clamp(out.raw, 0.0, hi);
        out.clamped = std::abs(out.raw - out.value) > kClampAuditTolerance;
        return out;
    }

    const std::vector<double>& node_values() const { return re_q_; }

private:
    InversionConfig cfg_;
    double log_r_ = 0.0;
    std::vector<double> re_q_;
    std::vector<double> cos_table_;
};

/// Single coefficient from scratch (builds a node cache for one use).
inline CoefficientValue compute_coefficient(const Portfolio& p, const InversionConfig& cfg, long k,
                                            const SystematicQuadrature& q) {
    if (k < 0 || k >= cfg.intervals())
        throw InputError("coefficient index out of range: " + std::to_string(k));
    return InversionEngine(p, cfg, q, 1).compute(k);
}

struct CoefficientSet {
    haar::WaveletApproximation approx;
    std::vector<double> raw;
    std::vector<long> clamped; // indices whose clamp moved the value by > 1e-6
};

inline CoefficientSet compute_all_coefficients(const InversionEngine& engine, unsigned threads = 0) {
    const long n = engine.config().intervals();
    std::vector<CoefficientValue> values(static_cast<std::size_t>(n));
    parallel_for(values.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
            values[k] = engine.compute(static_cast<long>(k));
    });
    std::vector<double> clamped_values(values.size());
    CoefficientSet out{haar::WaveletApproximation(engine.config().m), {}, {}};
    out.raw.resize(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        out.raw[k] = values[k].raw;
        clamped_values[k] = values[k].value;
        if (values[k].clamped)
            out.clamped.push_back(static_cast<long>(k));
    }
    out.approx = haar::WaveletApproximation::from_dense(engine.config().m, clamped_values);
    return out;
}

inline CoefficientSet compute_all_coefficients(const Portfolio& p, const InversionConfig& cfg,
                                               const SystematicQuadrature& q, unsigned threads = 0) {
    return compute_all_coefficients(InversionEngine(p, cfg, q, threads), threads);
}

} // namespace hwvar
