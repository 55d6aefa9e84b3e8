#pragma once

#include "hwvar/errors.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hwvar {

struct Obligor {
    std::string id;
    double exposure = 0.0;
    double pd = 0.0;

    friend bool operator==(const Obligor&, const Obligor&) = default;
};

/// Credit portfolio under a common asset correlation. Exposures are raw until
/// normalize() is applied; obligor order is kept as given.
class Portfolio {
public:
    Portfolio(std::vector<Obligor> obligors, double rho) : obligors_(std::move(obligors)), rho_(rho) {
        if (obligors_.empty())
            throw InputError("portfolio has no obligors");
        if (!(rho_ >= 0.0 && rho_ < 1.0))
            throw InputError("rho out of range [0,1): " + std::to_string(rho_));
        for (std::size_t i = 0; i < obligors_.size(); ++i) {
            const auto& o = obligors_[i];
            if (!(o.exposure >= 0.0) || !std::isfinite(o.exposure))
                throw InputError("negative exposure, row " + std::to_string(i + 1));
            if (!(o.pd >= 0.0 && o.pd <= 1.0))
                throw InputError("pd out of range, row " + std::to_string(i + 1));
        }
    }

    const std::vector<Obligor>& obligors() const { return obligors_; }
    std::size_t size() const { return obligors_.size(); }
    double rho() const { return rho_; }

    double total_exposure() const {
        double s = 0.0;
        for (const auto& o : obligors_)
            s += o.exposure;
        return s;
    }

    bool is_normalized(double tol = 1e-12) const { return std::abs(total_exposure() - 1.0) <= tol; }

    friend bool operator==(const Portfolio&, const Portfolio&) = default;

private:
    std::vector<Obligor> obligors_;
    double rho_;
};

/// Rescales exposures to fractions of the total.
inline Portfolio normalize(const Portfolio& p) {
    const double total = p.total_exposure();
    if (!(total > 0.0))
        throw InputError("zero total exposure");
    auto obligors = p.obligors();
    for (auto& o : obligors)
        o.exposure /= total;
    return Portfolio(std::move(obligors), p.rho());
}

/// Concentrated test portfolio: exposure of obligor n (1-based) is C/n with
/// C chosen so the exposures sum to one; all obligors share the same pd.
inline Portfolio generate_concentrated(std::size_t n, double pd, double rho) {
    if (n == 0)
        throw InputError("generator needs N >= 1");
    if (!(pd >= 0.0 && pd <= 1.0))
        throw InputError("generator pd out of range [0,1]");
    double harmonic = 0.0;
    for (std::size_t j = n; j >= 1; --j)
        harmonic += 1.0 / static_cast<double>(j);
    const double c = 1.0 / harmonic;
    std::vector<Obligor> obligors;
    obligors.reserve(n);
    for (std::size_t j = 1; j <= n; ++j)
        obligors.push_back({"O" + std::to_string(j), c / static_cast<double>(j), pd});
    return Portfolio(std::move(obligors), rho);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline double parse_real(std::string_view field, std::size_t row, const char* name) {
    const std::string text(trim(field));
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (text.empty() || used != text.size() || !std::isfinite(value))
        throw InputError("malformed " + std::string(name) + ", row " + std::to_string(row));
    return value;
}

} // namespace detail

/// Parses the `obligor_id,exposure,pd` CSV format. Rows are numbered from 1
/// after the header in error messages.
inline Portfolio parse_portfolio_csv(std::istream& in, double rho) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw InputError("rho out of range [0,1)");
    std::string line;
    if (!std::getline(in, line))
        throw InputError("empty portfolio file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
        line.erase(0, 3); // UTF-8 BOM
    if (detail::trim(line) != "obligor_id,exposure,pd")
        throw InputError("bad header, expected 'obligor_id,exposure,pd'");

    std::vector<Obligor> obligors;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty())
            continue;
        ++row;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() != 3)
            throw InputError("malformed row " + std::to_string(row) + ": expected 3 fields");
        Obligor o;
        o.id = std::string(detail::trim(fields[0]));
        if (o.id.empty())
            throw InputError("malformed obligor_id, row " + std::to_string(row));
        o.exposure = detail::parse_real(fields[1], row, "exposure");
        o.pd = detail::parse_real(fields[2], row, "pd");
        if (o.exposure < 0.0)
            throw InputError("negative exposure, row " + std::to_string(row));
        if (o.pd < 0.0 || o.pd > 1.0)
            throw InputError("pd out of range, row " + std::to_string(row));
        obligors.push_back(std::move(o));
    }
    if (obligors.empty())
        throw InputError("empty portfolio file");
    return Portfolio(std::move(obligors), rho);
}

inline Portfolio load_portfolio(const std::string& path, double rho) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open portfolio file: " + path);
    return parse_portfolio_csv(in, rho);
}

inline void write_portfolio_csv(std::ostream& out, const Portfolio& p) {
    out << "obligor_id,exposure,pd\n";
    out << std::setprecision(17);
    for (const auto& o : p.obligors())
        out << o.id << ',' << o.exposure << ',' << o.pd << '\n';
}

} // namespace hwvar
