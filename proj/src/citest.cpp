#include "citest.hpp"

#include <math.h>

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace trca {

namespace {

// std::lgamma writes the global signgam and is not thread-safe; the
// reentrant variant is, and the sign is irrelevant for a > 0.
double log_gamma(double a) {
    int sign = 0;
    return ::lgamma_r(a, &sign);
}

// Regularized lower incomplete gamma P(a, x) by power series.
double gamma_p_series(double a, double x) {
    const double log_gamma_a = log_gamma(a);
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
}

// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction.
double gamma_q_cf(double a, double x) {
    const double log_gamma_a = log_gamma(a);
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - log_gamma_a) * h;
}

}  // namespace

double chi_square_sf(double x, std::uint32_t dof) {
    if (x < 0.0) throw_data("chi_square_sf requires x >= 0");
    if (dof < 1) throw_data("chi_square_sf requires dof >= 1");
    if (x == 0.0) return 1.0;
    const double a = 0.5 * static_cast<double>(dof);
    const double half_x = 0.5 * x;
    double q;
    if (half_x < a + 1.0) {
        q = 1.0 - gamma_p_series(a, half_x);
    } else {
        q = gamma_q_cf(a, half_x);
    }
    return std::min(1.0, std::max(0.0, q));
}

ContingencyTable align_lagged(const BinaryPanel& panel, const std::string& x, int lag_x, const std::string& y,
                              int lag_y, const std::vector<LaggedVar>& z) {
    if (lag_x < 0 || lag_y < 0) throw_data("lags must be >= 0");
    if (z.size() > 20) throw_data("too many conditioning variables");

    const std::size_t xi = panel.index_of(x);
    const std::size_t yi = panel.index_of(y);
    std::vector<std::size_t> zi(z.size());
    int max_lag = std::max(lag_x, lag_y);
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k].lag < 0) throw_data("lags must be >= 0");
        zi[k] = panel.index_of(z[k].series);
        max_lag = std::max(max_lag, z[k].lag);
    }

    const std::size_t t_len = panel.length();
    if (static_cast<std::size_t>(max_lag) >= t_len) {
        throw_data("insufficient data: lag " + std::to_string(max_lag) + " leaves no aligned samples in a series of length " +
                   std::to_string(t_len));
    }

    ContingencyTable table;
    table.strata = std::size_t{1} << z.size();
    table.counts.assign(table.strata * 4, 0);
    for (std::size_t t = static_cast<std::size_t>(max_lag); t < t_len; ++t) {
        const int xv = panel.bits[xi][t - static_cast<std::size_t>(lag_x)];
        const int yv = panel.bits[yi][t - static_cast<std::size_t>(lag_y)];
        std::size_t stratum = 0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            stratum |= static_cast<std::size_t>(panel.bits[zi[k]][t - static_cast<std::size_t>(z[k].lag)]) << k;
        }
        ++table.at(stratum, xv, yv);
    }
    table.n = t_len - static_cast<std::size_t>(max_lag);
    return table;
}

CiResult gsquare(const ContingencyTable& table, double alpha) {
    if (table.n < 1) throw_data("gsquare requires at least one sample");

    double statistic = 0.0;
    std::uint32_t dof = 0;
    for (std::size_t s = 0; s < table.strata; ++s) {
        const double o00 = static_cast<double>(table.at(s, 0, 0));
        const double o01 = static_cast<double>(table.at(s, 0, 1));
        const double o10 = static_cast<double>(table.at(s, 1, 0));
        const double o11 = static_cast<double>(table.at(s, 1, 1));
        const double row0 = o00 + o01;
        const double row1 = o10 + o11;
        const double col0 = o00 + o10;
        const double col1 = o01 + o11;
        const double total = row0 + row1;
        // A zero margin means x or y is constant in this stratum; the
        // stratum is uninformative and is excluded from statistic and dof.
        if (row0 == 0.0 || row1 == 0.0 || col0 == 0.0 || col1 == 0.0) continue;
        const double obs[4] = {o00, o01, o10, o11};
        const double expt[4] = {row0 * col0 / total, row0 * col1 / total, row1 * col0 / total, row1 * col1 / total};
        for (int i = 0; i < 4; ++i) {
            if (obs[i] > 0.0) statistic += obs[i] * std::log(obs[i] / expt[i]);
        }
        dof += 1;
    }
    statistic *= 2.0;
    if (statistic < 0.0) statistic = 0.0;  // guard against rounding on exact-independence tables

    CiResult result;
    result.statistic = statistic;
    result.dof = dof;
    result.p_value = dof == 0 ? 1.0 : chi_square_sf(statistic, dof);
    result.independent = result.p_value > alpha;
    return result;
}

}  // namespace trca
