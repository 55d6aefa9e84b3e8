#pragma once

#include "hwvar/errors.hpp"
#include "hwvar/normal.hpp"
#include "hwvar/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

namespace hwvar {

using Complex = std::complex<double>;

/// Firm-value default threshold Phi^{-1}(pd); -inf for pd = 0, +inf for pd = 1.
inline double default_threshold(double pd) { return normal::inverse_cdf(pd); }

/// Default probability of one obligor given the systematic factor Y = y.
inline double conditional_pd(double pd, double rho, double y) {
    if (pd <= 0.0)
        return 0.0;
    if (pd >= 1.0)
        return 1.0;
    if (rho == 0.0)
        return pd;
    return normal::cdf((default_threshold(pd) - std::sqrt(rho) * y) / std::sqrt(1.0 - rho));
}

/// E[exp(-s L) | Y = y] for a normalized portfolio.
inline Complex conditional_mgf(const Portfolio& p, Complex s, double y) {
    Complex prod{1.0, 0.0};
    for (const auto& o : p.obligors()) {
        if (o.pd <= 0.0)
            continue;
        const Complex e = std::exp(-s * o.exposure);
        if (o.pd >= 1.0) {
            prod *= e;
            continue;
        }
        const double pn = conditional_pd(o.pd, p.rho(), y);
        prod *= 1.0 + pn * (e - 1.0);
    }
    return prod;
}

/// Quadrature rule for integrals against the standard normal density.
struct SystematicQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::string rule_name;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    auto integrate(F&& f) const {
        decltype(f(0.0)) acc{};
        for (std::size_t q = 0; q < nodes.size(); ++q)
            acc += weights[q] * f(nodes[q]);
        return acc;
    }
};

namespace detail {

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with zero
/// diagonal and off-diagonal entries offdiag(1..n-1), by implicit QL.
template <class OffDiag>
std::vector<double> tridiagonal_eigenvalues(int n, OffDiag offdiag) {
    std::vector<double> d(static_cast<std::size_t>(n), 0.0), e(static_cast<std::size_t>(n), 0.0);
    for (int k = 1; k < n; ++k)
        e[static_cast<std::size_t>(k - 1)] = offdiag(k);
    for (int l = 0; l < n; ++l) {
        for (int iter = 0; iter < 60; ++iter) {
            int mm = l;
            for (; mm < n - 1; ++mm) {
                const double dd = std::abs(d[mm]) + std::abs(d[mm + 1]);
                if (std::abs(e[mm]) <= 1e-16 * dd)
                    break;
            }
            if (mm == l)
                break;
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[mm] - d[l] + e[l] / (g + (g >= 0.0 ? r : -r));
            double s = 1.0, c = 1.0, p = 0.0;
            int i = mm - 1;
            for (; i >= l; --i) {
                double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (r == 0.0 && i >= l)
                continue;
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    std::sort(d.begin(), d.end());
    return d;
}

} // namespace detail

/// Gauss-Hermite rule rescaled to the standard normal weight: nodes sqrt(2) t_i,
/// weights w_i / sqrt(pi). Exact for polynomials up to degree 2*order - 1.
inline SystematicQuadrature build_quadrature(int order) {
    if (order < 2)
        throw InputError("quadrature order must be >= 2");
    const int n = order;
    std::vector<double> t(n), w(n);
    const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
    // Orthonormal Hermite recurrence at z. Returns p_n(z) and p_{n-1}(z) scaled by
    // 2^{-scale}; the rescaling keeps large orders from overflowing at outer nodes.
    struct Eval {
        double pn, pn1;
        int scale;
    };
    auto hermite = [&](double z) {
        double p1 = pim4, p2 = 0.0;
        int scale = 0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
            if (std::abs(p1) > 0x1.0p500) {
                p1 = std::ldexp(p1, -500);
                p2 = std::ldexp(p2, -500);
                scale += 500;
            }
        }
        return Eval{p1, p2, scale};
    };
    // Starting points: eigenvalues of the Jacobi matrix (Golub-Welsch), then
    // Newton on the recurrence to full precision.
    const std::vector<double> guesses = detail::tridiagonal_eigenvalues(n, [](int k) { return std::sqrt(0.5 * k); });
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = guesses[static_cast<std::size_t>(n - 1 - i)]; // descending
        for (int it = 0; it < 20; ++it) {
            const Eval e = hermite(z);
            const double dz = e.pn / (std::sqrt(2.0 * n) * e.pn1);
            z -= dz;
            if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z)))
                break;
        }
        const Eval e = hermite(z);
        const double log_pp = std::log(std::sqrt(2.0 * n) * std::abs(e.pn1)) + e.scale * std::numbers::ln2;
        t[i] = z;
        t[n - 1 - i] = -z;
        w[i] = std::exp(std::numbers::ln2 - 2.0 * log_pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1)
        t[n / 2] = 0.0;

    SystematicQuadrature rule;
    rule.rule_name = "gauss-hermite-" + std::to_string(n);
    rule.nodes.resize(n);
    rule.weights.resize(n);
    // t is descending; store ascending
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = std::numbers::sqrt2 * t[n - 1 - i];
        rule.weights[i] = w[n - 1 - i] / std::sqrt(std::numbers::pi);
    }
    return rule;
}

/// E[exp(-s L)] by quadrature over the systematic factor.
inline Complex unconditional_mgf(const Portfolio& p, Complex s, const SystematicQuadrature& q) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < q.size(); ++i)
        acc += q.weights[i] * conditional_mgf(p, s, q.nodes[i]);
    return acc;
}

/// Batch form of unconditional_mgf for many s values: the conditional default
/// probabilities p_n(y_q) are tabulated once and reused for every s.
class MgfTable {
public:
    MgfTable(const Portfolio& p, const SystematicQuadrature& q) : weights_(q.weights) {
        for (const auto& o : p.obligors()) {
            if (o.pd <= 0.0 || o.exposure == 0.0)
                continue;
            if (o.pd >= 1.0) {
                sure_loss_ += o.exposure;
                continue;
            }
            exposures_.push_back(o.exposure);
        }
        const std::size_t n = exposures_.size();
        cond_pd_.resize(q.size() * n);
        std::size_t k = 0;
        for (const auto& o : p.obligors()) {
            if (o.pd <= 0.0 || o.pd >= 1.0 || o.exposure == 0.0)
                continue;
            for (std::size_t i = 0; i < q.size(); ++i)
                cond_pd_[i * n + k] = conditional_pd(o.pd, p.rho(), q.nodes[i]);
            ++k;
        }
    }

    /// exp_buf is scratch of at least size() obligors, reused across calls.
    Complex operator()(Complex s, std::vector<Complex>& exp_buf) const {
        const std::size_t n = exposures_.size();
        exp_buf.resize(n);
        for (std::size_t j = 0; j < n; ++j)
            exp_buf[j] = std::exp(-s * exposures_[j]);
        double acc_re = 0.0, acc_im = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            const double* pn = cond_pd_.data() + i * n;
            double re = 1.0, im = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double fr = 1.0 + pn[j] * (exp_buf[j].real() - 1.0);
                const double fi = pn[j] * exp_buf[j].imag();
                const double nr = re * fr - im * fi;
                im = re * fi + im * fr;
                re = nr;
            }
            acc_re += weights_[i] * re;
            acc_im += weights_[i] * im;
        }
        Complex result{acc_re, acc_im};
        if (sure_loss_ > 0.0)
            result *= std::exp(-s * sure_loss_);
        return result;
    }

    Complex operator()(Complex s) const {
        std::vector<Complex> buf;
        return (*this)(s, buf);
    }

private:
    std::vector<double> weights_;
    std::vector<double> exposures_;
    std::vector<double> cond_pd_; // [quad node][obligor]
    double sure_loss_ = 0.0;
};

} // namespace hwvar
