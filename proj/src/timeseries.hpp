#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace trca {

/// d named real-valued series on a shared discrete time axis. Immutable
/// after construction; safe to share read-only across threads.
struct TimeSeriesPanel {
    std::vector<std::string> names;              // unique, in column order
    std::vector<std::vector<double>> values;     // [series][t]
    std::vector<std::int64_t> timestamps;        // strictly increasing, ordinal only

    std::size_t series_count() const { return names.size(); }
    std::size_t length() const { return values.empty() ? 0 : values.front().size(); }
    std::size_t index_of(const std::string& name) const;  // throws data error if absent
    std::optional<std::size_t> find(const std::string& name) const;
};

/// Validates invariants (unique names, equal lengths, T >= 1) and fills a
/// default 0..T-1 time index when none is given.
TimeSeriesPanel make_panel(std::vector<std::string> names,
                           std::vector<std::vector<double>> values,
                           std::vector<std::int64_t> timestamps = {});

enum class ThresholdProvenance { fixed, quantile };

struct ThresholdEntry {
    double value = 0.0;
    ThresholdProvenance provenance = ThresholdProvenance::fixed;
    double quantile_p = 0.0;  // meaningful only for provenance == quantile
};

/// One threshold per series name, kept in the owning panel's name order.
struct ThresholdSpec {
    std::vector<std::string> names;
    std::vector<ThresholdEntry> entries;

    double value_for(const std::string& name) const;  // throws config error if absent
    std::optional<double> find(const std::string& name) const;
};

ThresholdSpec fixed_thresholds(const std::vector<std::string>& names,
                               const std::vector<double>& values);

/// Per-series binary thresholding of a panel plus the thresholds used.
struct BinaryPanel {
    std::vector<std::string> names;
    std::vector<std::vector<std::uint8_t>> bits;  // [series][t], values 0/1
    ThresholdSpec thresholds;

    std::size_t series_count() const { return names.size(); }
    std::size_t length() const { return bits.empty() ? 0 : bits.front().size(); }
    std::size_t index_of(const std::string& name) const;
};

/// Wide CSV: optional leading integer time column (header "t" or
/// "timestamp"), one metric per remaining column, "." decimal separator.
TimeSeriesPanel load_panel_csv(const std::string& path);
void save_panel_csv(const TimeSeriesPanel& panel, const std::string& path);

/// Per-series min-max scaling onto [0, 1 - 2^-20]; the shrink keeps every
/// value strictly below 1. Constant series map to all zeros. Exactly
/// idempotent: a series already spanning [0, 1 - 2^-20] is returned
/// unchanged.
TimeSeriesPanel normalize(const TimeSeriesPanel& panel);

/// Largest value the normalized scale can reach (1 - 2^-20).
double normalize_upper_bound();

/// Empirical quantile threshold per series: r = the (floor(p*T) + 1)-th
/// smallest value, clamped to the largest order statistic. For distinct
/// values exactly min(floor(p*T), T-1) samples fall strictly below r, so
/// at least a `proportion` fraction of the data sits below the threshold.
ThresholdSpec select_thresholds(const TimeSeriesPanel& panel, double proportion);

/// bits[x][t] = 1 iff values[x][t] >= r_x.
BinaryPanel binarize(const TimeSeriesPanel& panel, const ThresholdSpec& thresholds);

void save_bits_csv(const BinaryPanel& panel, const std::string& path);
BinaryPanel load_bits_csv(const std::string& path);

/// Flat JSON object, series name -> threshold value. Loaded entries are
/// marked as fixed thresholds.
void save_thresholds_json(const ThresholdSpec& spec, const std::string& path);
ThresholdSpec load_thresholds_json(const std::string& path);

/// Exact round-trip formatting for doubles (shortest representation).
std::string format_double(double v);

}  // namespace trca
