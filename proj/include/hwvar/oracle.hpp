#pragma once

#include "hwvar/errors.hpp"
#include "hwvar/haar.hpp"
#include "hwvar/normal.hpp"
#include "hwvar/parallel.hpp"
#include "hwvar/portfolio.hpp"
#include "hwvar/vasicek.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace hwvar::oracle {

// ---------------------------------------------------------------------------
// Counter-based uniforms: a pure function of (seed, scenario, stream), so any
// partition of scenarios over threads draws the same numbers.

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

/// Uniform in (0,1) with 53 random bits. Stream 0 is the systematic factor,
/// stream n+1 the idiosyncratic draw of obligor n.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t scenario, std::uint64_t stream) {
    std::uint64_t h = mix64(seed ^ 0x9E3779B97F4A7C15ULL);
    h = mix64(h + (scenario + 1) * 0xD1B54A32D192ED03ULL);
    h = mix64(h ^ ((stream + 1) * 0x8CB92BA72F3D8DD7ULL));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double systematic_draw(std::uint64_t seed, std::uint64_t scenario) {
    return normal::inverse_cdf(keyed_uniform(seed, scenario, 0));
}

namespace detail {

/// Per-scenario default test. An obligor defaults iff
/// sqrt(rho) Y + sqrt(1-rho) eps < Phi^{-1}(pd) with eps = Phi^{-1}(u); since
/// Phi^{-1} is increasing this is u < p_n(Y), which skips one inverse per draw.
template <class OnDefault>
void run_scenario(const Portfolio& p, std::uint64_t seed, std::uint64_t scenario, OnDefault&& on_default) {
    const double y = systematic_draw(seed, scenario);
    double last_pd = -1.0, last_cond = 0.0;
    const auto& obligors = p.obligors();
    for (std::size_t n = 0; n < obligors.size(); ++n) {
        const double pd = obligors[n].pd;
        if (pd <= 0.0)
            continue;
        if (pd != last_pd) {
            last_pd = pd;
            last_cond = conditional_pd(pd, p.rho(), y);
        }
        if (pd >= 1.0 || keyed_uniform(seed, scenario, n + 1) < last_cond)
            on_default(n);
    }
}

} // namespace detail

struct McResult {
    std::vector<double> sorted_losses;
    std::size_t scenarios = 0;
    std::uint64_t seed = 0;
};

/// Default indicators of one scenario, in obligor order.
inline std::vector<char> scenario_defaults(const Portfolio& p, std::uint64_t seed, std::uint64_t scenario) {
    std::vector<char> d(p.size(), 0);
    detail::run_scenario(p, seed, scenario, [&](std::size_t n) { d[n] = 1; });
    return d;
}

/// Monte Carlo of the one-factor model. Bitwise independent of `threads`.
inline McResult mc_simulate(const Portfolio& p, std::size_t scenarios, std::uint64_t seed, unsigned threads = 0) {
    if (scenarios == 0)
        throw InputError("scenarios must be >= 1");
    McResult r;
    r.scenarios = scenarios;
    r.seed = seed;
    r.sorted_losses.resize(scenarios);
    const auto& obligors = p.obligors();
    parallel_for(scenarios, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            double loss = 0.0;
            detail::run_scenario(p, seed, s, [&](std::size_t n) { loss += obligors[n].exposure; });
            r.sorted_losses[s] = std::clamp(loss, 0.0, 1.0);
        }
    });
    std::sort(r.sorted_losses.begin(), r.sorted_losses.end());
    return r;
}

/// True if the scenario count is too small to resolve the alpha quantile.
inline bool mc_undersampled(const McResult& r, double alpha) {
    return static_cast<double>(r.scenarios) < 1.0 / (1.0 - alpha);
}

/// Lower empirical quantile: order statistic ceil(alpha * S), 1-based.
inline double mc_var(const McResult& r, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("alpha must lie in (0,1)");
    if (r.sorted_losses.empty())
        throw InputError("empty Monte Carlo result");
    const double s = static_cast<double>(r.sorted_losses.size());
    // 1e-9 absorbs products like 0.999 * 200000 landing a hair above an integer.
    auto idx = static_cast<std::size_t>(std::ceil(alpha * s - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, r.sorted_losses.size());
    return r.sorted_losses[idx - 1];
}

/// Empirical CDF of the simulated losses.
inline double mc_cdf(const McResult& r, double x) {
    const auto it = std::upper_bound(r.sorted_losses.begin(), r.sorted_losses.end(), x);
    return static_cast<double>(it - r.sorted_losses.begin()) / static_cast<double>(r.sorted_losses.size());
}

inline void write_losses_csv(std::ostream& out, const McResult& r) {
    out << "loss\n" << std::setprecision(17);
    for (double l : r.sorted_losses)
        out << l << '\n';
}

// ---------------------------------------------------------------------------
// Exact discrete loss distribution for small portfolios.

struct Atom {
    double loss;
    double probability;
};

struct LossAtoms {
    std::vector<Atom> atoms;     // strictly increasing loss
    std::vector<double> cumulative; // cumulative[i] = sum of probabilities up to atom i

    double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

inline constexpr std::size_t kMaxEnumerationObligors = 22;

inline LossAtoms merge_atoms(std::vector<Atom> raw, double merge_tol = 1e-12) {
    std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.loss < b.loss; });
    LossAtoms out;
    for (const auto& a : raw) {
        if (!out.atoms.empty() && a.loss - out.atoms.back().loss <= merge_tol)
            out.atoms.back().probability += a.probability;
        else
            out.atoms.push_back(a);
    }
    out.cumulative.resize(out.atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < out.atoms.size(); ++i) {
        acc += out.atoms[i].probability;
        out.cumulative[i] = acc;
    }
    return out;
}

/// Enumerates all 2^N default vectors. Conditional on each quadrature node
/// defaults are independent, so each vector's probability is the weighted
/// sum over nodes of a product of Bernoulli terms. The products are carried
/// down a depth-first walk, one level per obligor, so every vector costs
/// O(quad nodes) without dividing by small probabilities.
inline LossAtoms enumerate_exact(const Portfolio& p, const SystematicQuadrature& q, unsigned threads = 0) {
    const std::size_t n = p.size();
    if (n > kMaxEnumerationObligors)
        throw InputError("exact enumeration limited to N <= 22 obligors (N=" + std::to_string(n) +
                         "); use Monte Carlo instead");
    const std::size_t nq = q.size();
    std::vector<std::vector<double>> cond(n, std::vector<double>(nq));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < nq; ++k)
            cond[i][k] = conditional_pd(p.obligors()[i].pd, p.rho(), q.nodes[k]);

    const std::size_t total = std::size_t{1} << n;
    std::vector<Atom> raw(total);

    // Split on the leading `prefix_bits` obligors; each prefix is an independent subtree.
    const std::size_t prefix_bits = std::min<std::size_t>(n, 6);
    const std::size_t prefixes = std::size_t{1} << prefix_bits;
    const std::size_t leaves = std::size_t{1} << (n - prefix_bits);

    parallel_for(prefixes, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::vector<double>> stack(n + 1, std::vector<double>(nq));
        std::vector<double> loss_stack(n + 1);
        for (std::size_t prefix = begin; prefix < end; ++prefix) {
            std::fill(stack[0].begin(), stack[0].end(), 1.0);
            loss_stack[0] = 0.0;
            for (std::size_t d = 0; d < prefix_bits; ++d) {
                const bool dflt = (prefix >> (prefix_bits - 1 - d)) & 1U;
                for (std::size_t k = 0; k < nq; ++k)
                    stack[d + 1][k] = stack[d][k] * (dflt ? cond[d][k] : 1.0 - cond[d][k]);
                loss_stack[d + 1] = loss_stack[d] + (dflt ? p.obligors()[d].exposure : 0.0);
            }
            // Iterative DFS over the remaining obligors; leaf index = suffix bits.
            const std::size_t depth = n - prefix_bits;
            for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
                // Recompute only the levels whose bit changed from the previous leaf.
                std::size_t start = 0;
                if (leaf != 0) {
                    const std::size_t changed = leaf ^ (leaf - 1);
                    std::size_t hb = 0;
                    while ((changed >> (hb + 1)) != 0)
                        ++hb;
                    start = depth - 1 - hb;
                }
                for (std::size_t d = start; d < depth; ++d) {
                    const std::size_t level = prefix_bits + d;
                    const bool dflt = (leaf >> (depth - 1 - d)) & 1U;
                    for (std::size_t k = 0; k < nq; ++k)
                        stack[level + 1][k] = stack[level][k] * (dflt ? cond[level][k] : 1.0 - cond[level][k]);
                    loss_stack[level + 1] = loss_stack[level] + (dflt ? p.obligors()[level].exposure : 0.0);
                }
                double prob = 0.0;
                for (std::size_t k = 0; k < nq; ++k)
                    prob += q.weights[k] * stack[n][k];
                raw[prefix * leaves + leaf] = {std::clamp(loss_stack[n], 0.0, 1.0), prob};
            }
        }
    });
    return merge_atoms(std::move(raw));
}

/// Right-continuous step CDF: total probability of atoms with loss <= x.
inline double exact_cdf(const LossAtoms& a, double x) {
    const auto it = std::upper_bound(a.atoms.begin(), a.atoms.end(), x,
                                     [](double v, const Atom& at) { return v < at.loss; });
    if (it == a.atoms.begin())
        return 0.0;
    return a.cumulative[static_cast<std::size_t>(it - a.atoms.begin()) - 1];
}

/// inf { l : F(l) >= alpha }.
inline double exact_quantile(const LossAtoms& a, double alpha) {
    for (std::size_t i = 0; i < a.atoms.size(); ++i)
        if (a.cumulative[i] >= alpha)
            return a.atoms[i].loss;
    return a.atoms.empty() ? 0.0 : a.atoms.back().loss;
}

/// Exact scaling coefficients c_{m,k} = int_0^1 F(x) phi_{m,k}(x) dx of the
/// step CDF, integrated piece by piece.
inline std::vector<double> exact_coefficients(const LossAtoms& a, int m) {
    const long n = 1L << m;
    std::vector<double> full_mass(static_cast<std::size_t>(n + 1), 0.0); // atoms strictly left of interval k
    std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
    for (const auto& at : a.atoms) {
        const double pos = std::ldexp(at.loss, m);
        long k = static_cast<long>(std::floor(pos));
        if (k >= n)
            continue; // loss 1 contributes nothing on [0,1)
        k = std::max(k, 0L);
        partial[static_cast<std::size_t>(k)] += at.probability * (static_cast<double>(k + 1) - pos);
        full_mass[static_cast<std::size_t>(k + 1)] += at.probability;
    }
    std::vector<double> c(static_cast<std::size_t>(n));
    double left = 0.0;
    const double scale = std::exp2(-0.5 * m);
    for (long k = 0; k < n; ++k) {
        left += full_mass[static_cast<std::size_t>(k)];
        c[static_cast<std::size_t>(k)] = scale * (left + partial[static_cast<std::size_t>(k)]);
    }
    return c;
}

inline void write_atoms_csv(std::ostream& out, const LossAtoms& a) {
    out << "loss,probability\n" << std::setprecision(17);
    for (const auto& at : a.atoms)
        out << at.loss << ',' << at.probability << '\n';
}

} // namespace hwvar::oracle
