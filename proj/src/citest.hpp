#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "timeseries.hpp"

namespace trca {

/// 2 x 2 x K counts for a conditional independence test; K = 2^|Z| strata
/// indexed by the conditioning variables' bit pattern.
struct ContingencyTable {
    std::vector<std::uint64_t> counts;  // counts[(stratum << 2) | (x << 1) | y]
    std::size_t strata = 1;
    std::uint64_t n = 0;

    std::uint64_t at(std::size_t stratum, int x, int y) const {
        return counts[(stratum << 2) | (static_cast<std::size_t>(x) << 1) | static_cast<std::size_t>(y)];
    }
    std::uint64_t& at(std::size_t stratum, int x, int y) {
        return counts[(stratum << 2) | (static_cast<std::size_t>(x) << 1) | static_cast<std::size_t>(y)];
    }
};

struct CiResult {
    double statistic = 0.0;
    std::uint32_t dof = 0;
    double p_value = 1.0;
    bool independent = true;
};

struct LaggedVar {
    std::string series;
    int lag = 0;
};

/// Tabulates (x at t-lag_x, y at t-lag_y) over all t where every shifted
/// index is valid, stratified by the conditioning variables z at their
/// lags. n = T - max(all lags).
ContingencyTable align_lagged(const BinaryPanel& panel, const std::string& x, int lag_x, const std::string& y,
                              int lag_y, const std::vector<LaggedVar>& z);

/// Likelihood-ratio test of independence within each conditioning
/// stratum: G2 = 2 * sum O * ln(O / E). Strata where either margin is
/// degenerate contribute nothing to the statistic or the dof; with dof=0
/// the test cannot reject and reports independence at p = 1.
CiResult gsquare(const ContingencyTable& table, double alpha);

/// Upper tail of the chi-square distribution: Q(dof/2, x/2), the
/// regularized upper incomplete gamma function. Series expansion below
/// a+1, continued fraction above; absolute error well under 1e-10.
double chi_square_sf(double x, std::uint32_t dof);

}  // namespace trca
