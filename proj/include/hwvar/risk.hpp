#pragma once

#include "hwvar/errors.hpp"
#include "hwvar/haar.hpp"
#include "hwvar/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hwvar {

/// Wavelet approximation filled on demand from an InversionEngine. Single
/// writer: not safe for concurrent get() calls.
class LazyCoefficients {
public:
    explicit LazyCoefficients(const InversionEngine& engine)
        : engine_(&engine), approx_(engine.config().m) {}

    double get(long k) {
        if (const auto hit = approx_.find(k))
            return *hit;
        const CoefficientValue v = engine_->compute(k);
        approx_.set(k, v.value);
        raw_.emplace_back(k, v.raw);
        if (v.clamped)
            clamped_.push_back(k);
        return v.value;
    }

    const haar::WaveletApproximation& approximation() const { return approx_; }
    std::size_t computed() const { return approx_.stored(); }
    const std::vector<long>& clamped() const { return clamped_; }
    const std::vector<std::pair<long, double>>& raw() const { return raw_; }
    int level() const { return approx_.level(); }

private:
    const InversionEngine* engine_;
    haar::WaveletApproximation approx_;
    std::vector<std::pair<long, double>> raw_;
    std::vector<long> clamped_;
};

/// Loss CDF: 1 beyond full loss, otherwise the Haar reconstruction on the
/// dyadic interval containing x.
inline double cdf_at(LazyCoefficients& w, double x) {
    if (x >= 1.0)
        return 1.0;
    if (x < 0.0)
        return 0.0;
    const long k = haar::interval_index(w.level(), x);
    return haar::level_scale(w.level()) * w.get(k);
}

inline double tail_probability(LazyCoefficients& w, double x) {
    return std::clamp(1.0 - cdf_at(w, x), 0.0, 1.0);
}

struct VarResult {
    double alpha = 0.0;
    int m = 0;
    long k_star = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::size_t coefficients_computed = 0;
    double cdf_at_bracket = 0.0;
    bool max_loss = false;
    std::vector<std::string> flags;

    double midpoint() const { return 0.5 * (bracket_lo + bracket_hi); }
};

/// Probed coefficients may dip by this much (coefficient units) without comment.
inline constexpr double kMonotonicityFlagTolerance = 1e-6;

/// Departure, in CDF units, from monotonicity or from the bounds [0, 1] among
/// the probed raw values beyond which the search refuses to answer. Off-grid
/// loss atoms produce ringing of roughly 0.09 times an atom's probability on
/// each side of it; anything past a quarter of the total mass is breakdown
/// (typically an over-small contour radius amplifying round-off).
inline constexpr double kIntegrityAbortTolerance = 0.25;

/// Smallest k with 2^{m/2} c_{m,k} >= alpha by bisection on k. Uses m probes
/// plus at most two to confirm the bracket edges.
inline VarResult var_search(LazyCoefficients& w, double alpha, double abort_tolerance = kIntegrityAbortTolerance) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("alpha must lie in (0,1)");
    const int m = w.level();
    const long n = 1L << m;
    const double scale = haar::level_scale(m);
    auto meets = [&](long k) { return scale * w.get(k) >= alpha; };

    long lo = 0, hi = n;
    while (lo < hi) {
        const long mid = lo + (hi - lo) / 2;
        if (meets(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    if (lo < n)
        w.get(lo);
    if (lo > 0)
        w.get(lo - 1);

    auto raw = w.raw();
    std::sort(raw.begin(), raw.end());
    double running_max = -std::numeric_limits<double>::infinity();
    long running_k = -1;
    bool dipped = false;
    for (const auto& [k, c] : raw) {
        const double f = scale * c;
        const double drop = running_max - f;
        const double outside = std::max(-f, f - 1.0);
        if (drop > abort_tolerance || outside > abort_tolerance) {
            std::ostringstream msg;
            msg.precision(17);
            if (outside > abort_tolerance)
                msg << "coefficient out of bounds: F(k=" << k << ")=" << f;
            else
                msg << "coefficient monotonicity violated: F(k=" << running_k << ")=" << running_max << " > F(k=" << k
                    << ")=" << f;
            throw IntegrityError(msg.str());
        }
        dipped = dipped || drop / scale > kMonotonicityFlagTolerance;
        if (f > running_max) {
            running_max = f;
            running_k = k;
        }
    }

    VarResult r;
    r.alpha = alpha;
    r.m = m;
    if (lo == n) {
        r.max_loss = true;
        r.k_star = n - 1;
        r.flags.emplace_back("quantile_at_max_loss");
    } else {
        r.k_star = lo;
    }
    r.bracket_lo = std::ldexp(static_cast<double>(r.k_star), -m);
    r.bracket_hi = std::ldexp(static_cast<double>(r.k_star + 1), -m);
    r.cdf_at_bracket = scale * w.get(r.k_star);
    r.coefficients_computed = w.computed();
    if (dipped)
        r.flags.emplace_back("non_monotone_coefficients");
    if (!w.clamped().empty())
        r.flags.emplace_back("clamped_coefficients");
    return r;
}

inline VarResult var_search(const Portfolio& p, const InversionConfig& cfg, double alpha,
                            const SystematicQuadrature& q, unsigned threads = 0) {
    const InversionEngine engine(p, cfg, q, threads);
    LazyCoefficients w(engine);
    return var_search(w, alpha);
}

struct GridPoint {
    double x;
    double value;
};

/// Reconstructed CDF at the midpoints of all 2^m dyadic intervals.
inline std::vector<GridPoint> cdf_grid(const CoefficientSet& coeffs) {
    const int m = coeffs.approx.level();
    const double scale = haar::level_scale(m);
    std::vector<GridPoint> out;
    out.reserve(static_cast<std::size_t>(coeffs.approx.size()));
    for (long k = 0; k < coeffs.approx.size(); ++k)
        out.push_back({std::ldexp(static_cast<double>(k) + 0.5, -m), scale * coeffs.approx.at(k)});
    return out;
}

inline std::vector<GridPoint> cdf_grid(const InversionEngine& engine, unsigned threads = 0) {
    return cdf_grid(compute_all_coefficients(engine, threads));
}

inline std::vector<GridPoint> tail_grid(const CoefficientSet& coeffs) {
    auto grid = cdf_grid(coeffs);
    for (auto& g : grid)
        g.value = std::clamp(1.0 - g.value, 0.0, 1.0);
    return grid;
}

} // namespace hwvar
