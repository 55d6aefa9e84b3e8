// hwvar: credit portfolio VaR by Haar wavelet approximation of the loss CDF.
//
//   hwvar var     --generate N=100,pd=0.0021 --rho 0.15 --alpha 0.999 --m 10
//   hwvar tail    --generate N=100,pd=0.0021 --m 7 --out tail.csv
//   hwvar compare --generate N=100,pd=0.0021 --m 9 --m 10 --scenarios 200000
//
// Exit codes: 0 ok, 2 input error, 3 numerical-integrity abort.

#include "hwvar/hwvar.hpp"
#include "hwvar/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using hwvar::json;

struct Options {
    std::string portfolio_path;
    std::string generate;
    double rho = 0.15;
    double alpha = 0.999;
    std::vector<int> m;
    std::size_t scenarios = 200000;
    std::uint64_t seed = 20090401;
    std::optional<double> radius;
    std::optional<long> trapezoid_nodes;
    std::optional<int> quad_order;
    bool as_json = false;
    bool midpoint = false;
    bool no_timings = false;
    std::string out;
    unsigned threads = 0;
    std::string config_path;
};

struct Generator {
    std::size_t n = 0;
    double pd = 0.0;
};

Generator parse_generator(const std::string& spec) {
    Generator g;
    bool have_n = false, have_pd = false;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw hwvar::InputError("--generate expects N=<int>,pd=<real>");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            if (key == "N") {
                const long long v = std::stoll(value, &used);
                if (v < 1)
                    throw hwvar::InputError("--generate N must be >= 1");
                g.n = static_cast<std::size_t>(v);
                have_n = true;
            } else if (key == "pd") {
                g.pd = std::stod(value, &used);
                have_pd = true;
            } else {
                throw hwvar::InputError("--generate: unknown key '" + key + "'");
            }
            if (used != value.size())
                throw hwvar::InputError("--generate: bad value for " + key);
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const hwvar::InputError*>(&e))
                throw;
            throw hwvar::InputError("--generate: bad value for " + key);
        }
    }
    if (!have_n || !have_pd)
        throw hwvar::InputError("--generate expects N=<int>,pd=<real>");
    return g;
}

hwvar::Portfolio load_input(const Options& o) {
    if (o.portfolio_path.empty() == o.generate.empty())
        throw hwvar::InputError("exactly one of --portfolio or --generate is required");
    if (!o.generate.empty()) {
        const auto g = parse_generator(o.generate);
        return hwvar::generate_concentrated(g.n, g.pd, o.rho);
    }
    return hwvar::load_portfolio(o.portfolio_path, o.rho);
}

hwvar::InversionConfig effective_config(const Options& o, std::optional<int> m) {
    hwvar::InversionConfig cfg;
    if (!o.config_path.empty())
        cfg = hwvar::load_inversion_config(o.config_path);
    if (m)
        cfg.m = *m;
    if (o.radius)
        cfg.radius = o.radius;
    if (o.trapezoid_nodes)
        cfg.trapezoid_nodes = o.trapezoid_nodes;
    if (o.quad_order)
        cfg.quad_order = *o.quad_order;
    cfg.validate();
    return cfg;
}

/// Explicit --m values, or a single empty entry meaning "config file or default".
std::vector<std::optional<int>> requested_levels(const Options& o) {
    if (o.m.empty())
        return {std::nullopt};
    return {o.m.begin(), o.m.end()};
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw hwvar::InputError("--alpha must lie in (0,1)");
}

json input_echo(const Options& o) {
    json j;
    if (!o.portfolio_path.empty())
        j["portfolio"] = o.portfolio_path;
    else
        j["generate"] = o.generate;
    j["rho"] = o.rho;
    return j;
}

/// Writes to --out when given, stdout otherwise.
template <class Writer>
void emit(const Options& o, Writer&& write) {
    if (o.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(o.out);
    if (!f)
        throw hwvar::InputError("cannot open output file: " + o.out);
    write(f);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_generate(const Options& o) {
    if (o.generate.empty())
        throw hwvar::InputError("generate needs --generate N=<int>,pd=<real>");
    const auto p = load_input(o);
    emit(o, [&](std::ostream& out) { hwvar::write_portfolio_csv(out, p); });
    return 0;
}

int cmd_var(const Options& o) {
    check_alpha(o.alpha);
    const auto p = hwvar::normalize(load_input(o));
    const auto cfg = effective_config(o, requested_levels(o).front());
    const auto quad = hwvar::build_quadrature(cfg.quad_order);
    const hwvar::InversionEngine engine(p, cfg, quad, o.threads);
    hwvar::LazyCoefficients lazy(engine);
    const auto r = hwvar::var_search(lazy, o.alpha);

    if (o.as_json) {
        json j = hwvar::to_json(r);
        if (o.midpoint)
            j["midpoint"] = r.midpoint();
        j["parameters"] = input_echo(o);
        j["parameters"]["inversion"] = hwvar::to_json(cfg);
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    std::cout << std::setprecision(6) << std::fixed;
    std::cout << "alpha                 " << r.alpha << '\n'
              << "m                     " << r.m << '\n'
              << "VaR bracket           [" << r.bracket_lo << ", " << r.bracket_hi << (r.max_loss ? "]" : ")")
              << '\n'
              << "k                     " << r.k_star << '\n'
              << "F at bracket          " << r.cdf_at_bracket << '\n'
              << "coefficients computed " << r.coefficients_computed << '\n';
    if (o.midpoint)
        std::cout << "midpoint              " << r.midpoint() << '\n';
    for (const auto& f : r.flags)
        std::cout << "flag                  " << f << '\n';
    return 0;
}

int cmd_grid(const Options& o, bool tail) {
    const auto p = hwvar::normalize(load_input(o));
    const auto cfg = effective_config(o, requested_levels(o).front());
    const auto quad = hwvar::build_quadrature(cfg.quad_order);
    const auto coeffs = hwvar::compute_all_coefficients(p, cfg, quad, o.threads);
    const auto grid = tail ? hwvar::tail_grid(coeffs) : hwvar::cdf_grid(coeffs);
    emit(o, [&](std::ostream& out) {
        out << (tail ? "x,tail_probability\n" : "x,cdf\n") << std::setprecision(17);
        for (const auto& g : grid)
            out << g.x << ',' << g.value << '\n';
    });
    if (!o.out.empty())
        std::cerr << "wrote " << grid.size() << " rows to " << o.out << '\n';
    return 0;
}

int cmd_mc(const Options& o) {
    check_alpha(o.alpha);
    const auto p = hwvar::normalize(load_input(o));
    const auto mc = hwvar::oracle::mc_simulate(p, o.scenarios, o.seed, o.threads);
    if (hwvar::oracle::mc_undersampled(mc, o.alpha))
        std::cerr << "warning: scenarios < 1/(1-alpha); quantile is poorly resolved\n";
    if (!o.out.empty())
        emit(o, [&](std::ostream& out) { hwvar::oracle::write_losses_csv(out, mc); });
    json j = hwvar::mc_summary_json(mc, {o.alpha});
    j["parameters"] = input_echo(o);
    if (o.as_json) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << std::setprecision(6) << std::fixed << "scenarios " << mc.scenarios << "\nseed      " << mc.seed
                  << "\nVaR(" << o.alpha << ") " << hwvar::oracle::mc_var(mc, o.alpha) << '\n';
    }
    return 0;
}

int cmd_exact(const Options& o) {
    check_alpha(o.alpha);
    const auto p = hwvar::normalize(load_input(o));
    const auto cfg = effective_config(o, requested_levels(o).front());
    const auto quad = hwvar::build_quadrature(cfg.quad_order);
    const auto atoms = hwvar::oracle::enumerate_exact(p, quad, o.threads);
    if (!o.out.empty())
        emit(o, [&](std::ostream& out) { hwvar::oracle::write_atoms_csv(out, atoms); });
    const double q = hwvar::oracle::exact_quantile(atoms, o.alpha);
    if (o.as_json) {
        json j{{"alpha", o.alpha}, {"quantile", q}, {"atoms", atoms.atoms.size()}, {"total_probability", atoms.total()}};
        j["parameters"] = input_echo(o);
        j["parameters"]["quad_order"] = cfg.quad_order;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << std::setprecision(6) << std::fixed << "atoms     " << atoms.atoms.size() << "\nquantile("
                  << o.alpha << ") " << q << '\n';
    }
    return 0;
}

double max_relative_error(const hwvar::VarResult& r, double reference) {
    if (reference == 0.0)
        return (r.bracket_lo == 0.0 && r.bracket_hi == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return std::max(std::abs(r.bracket_lo - reference), std::abs(r.bracket_hi - reference)) / reference;
}

int cmd_compare(const Options& o) {
    check_alpha(o.alpha);
    const auto p = hwvar::normalize(load_input(o));
    const auto levels = requested_levels(o);

    json methods = json::array();
    json timings = json::object();

    std::optional<double> exact_q;
    if (p.size() <= hwvar::oracle::kMaxEnumerationObligors) {
        const auto cfg = effective_config(o, levels.front());
        const auto t0 = std::chrono::steady_clock::now();
        const auto atoms = hwvar::oracle::enumerate_exact(p, hwvar::build_quadrature(cfg.quad_order), o.threads);
        exact_q = hwvar::oracle::exact_quantile(atoms, o.alpha);
        timings["exact"] = seconds_since(t0);
    }

    const auto t_mc = std::chrono::steady_clock::now();
    const auto mc = hwvar::oracle::mc_simulate(p, o.scenarios, o.seed, o.threads);
    const double mc_q = hwvar::oracle::mc_var(mc, o.alpha);
    timings["mc"] = seconds_since(t_mc);

    const std::string reference_name = exact_q ? "exact" : "mc";
    const double reference = exact_q.value_or(mc_q);

    json inversion = json::array();
    std::vector<std::pair<int, hwvar::VarResult>> wa;
    for (const auto& m : levels) {
        const auto cfg = effective_config(o, m);
        const auto t0 = std::chrono::steady_clock::now();
        const auto quad = hwvar::build_quadrature(cfg.quad_order);
        const hwvar::InversionEngine engine(p, cfg, quad, o.threads);
        hwvar::LazyCoefficients lazy(engine);
        const auto r = hwvar::var_search(lazy, o.alpha);
        timings["wa_m" + std::to_string(cfg.m)] = seconds_since(t0);
        json jm = hwvar::to_json(r);
        jm["method"] = "wa_m" + std::to_string(cfg.m);
        jm["max_relative_error"] = max_relative_error(r, reference);
        methods.push_back(jm);
        inversion.push_back(hwvar::to_json(cfg));
        wa.emplace_back(cfg.m, r);
    }
    methods.push_back(json{{"method", "mc"}, {"var", mc_q}, {"scenarios", o.scenarios}, {"seed", o.seed}});
    if (exact_q)
        methods.push_back(json{{"method", "exact"}, {"var", *exact_q}});

    json report{{"alpha", o.alpha}, {"reference", reference_name}, {"reference_var", reference}, {"methods", methods}};
    report["parameters"] = input_echo(o);
    report["parameters"]["scenarios"] = o.scenarios;
    report["parameters"]["seed"] = o.seed;
    report["parameters"]["inversion"] = inversion;
    if (!o.no_timings)
        report["seconds"] = timings;

    if (o.as_json) {
        std::cout << report.dump(2) << '\n';
        return 0;
    }
    std::cout << std::setprecision(4) << std::fixed;
    std::cout << "method      VaR(" << o.alpha << ")          rel.err vs " << reference_name << '\n';
    for (const auto& [m, r] : wa)
        std::cout << "WA m=" << std::setw(2) << m << "    [" << r.bracket_lo << ", " << r.bracket_hi << ")   "
                  << 100.0 * max_relative_error(r, reference) << "%\n";
    std::cout << "MC          " << mc_q << '\n';
    if (exact_q)
        std::cout << "exact       " << *exact_q << '\n';
    if (!o.no_timings) {
        std::cout << std::setprecision(3);
        for (const auto& [k, v] : timings.items())
            std::cout << "time " << k << ": " << v.get<double>() << " s\n";
    }
    return 0;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--portfolio", o.portfolio_path, "Portfolio CSV (obligor_id,exposure,pd)");
    cmd->add_option("--generate", o.generate, "Concentrated portfolio E_n ~ 1/n: N=<int>,pd=<real>");
    cmd->add_option("--rho", o.rho, "Common asset correlation")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "Confidence level")->capture_default_str();
    cmd->add_option("--m", o.m, "Resolution level (repeatable for compare)");
    cmd->add_option("--scenarios", o.scenarios, "Monte Carlo scenarios")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Monte Carlo seed")->capture_default_str();
    cmd->add_option("--radius", o.radius, "Cauchy circle radius r in (0,1)");
    cmd->add_option("--trapezoid-nodes", o.trapezoid_nodes, "Trapezoid intervals J over [0,pi]");
    cmd->add_option("--quad-order", o.quad_order, "Gauss-Hermite order for the systematic factor");
    cmd->add_flag("--json", o.as_json, "Machine-readable output");
    cmd->add_flag("--midpoint", o.midpoint, "Also report the bracket midpoint");
    cmd->add_option("--out", o.out, "Output file for CSV data");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--config", o.config_path, "JSON inversion config {m, radius, trapezoid_nodes, quad_order}");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Credit portfolio VaR via Haar wavelet approximation of the loss CDF"};
    app.require_subcommand(1);
    Options o;

    auto* var = app.add_subcommand("var", "VaR bracket by lazy bisection over wavelet coefficients");
    auto* cdf = app.add_subcommand("cdf", "Reconstructed CDF on dyadic midpoints (CSV)");
    auto* tail = app.add_subcommand("tail", "Tail probability on dyadic midpoints (CSV)");
    auto* mc = app.add_subcommand("mc", "Monte Carlo loss simulation");
    auto* exact = app.add_subcommand("exact", "Exact loss distribution by enumeration (N <= 22)");
    auto* compare = app.add_subcommand("compare", "Wavelet vs Monte Carlo / exact report");
    auto* generate = app.add_subcommand("generate", "Write a concentrated test portfolio as CSV");
    for (auto* cmd : {var, cdf, tail, mc, exact, compare, generate})
        add_common(cmd, o);
    compare->add_flag("--no-timings", o.no_timings, "Omit wall-clock timings from the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*var)
            return cmd_var(o);
        if (*cdf)
            return cmd_grid(o, false);
        if (*tail)
            return cmd_grid(o, true);
        if (*mc)
            return cmd_mc(o);
        if (*exact)
            return cmd_exact(o);
        if (*compare)
            return cmd_compare(o);
        if (*generate)
            return cmd_generate(o);
    } catch (const hwvar::IntegrityError& e) {
        std::cerr << "numerical integrity error: " << e.what() << '\n';
        return 3;
    } catch (const hwvar::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const hwvar::DomainError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
