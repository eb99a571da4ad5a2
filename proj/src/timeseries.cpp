#include "timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace trca {

namespace {

constexpr double kNormalizeUpper = 1.0 - 0x1.0p-20;

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
    const std::string cell = trim(raw);
    if (cell.empty()) {
        throw_data("missing cell at row " + std::to_string(row) + ", column " + std::to_string(col) +
                   " (missing values are rejected; no imputation)");
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw_data("non-numeric cell " + quote(cell) + " at row " + std::to_string(row) + ", column " +
                   std::to_string(col));
    }
    return value;
}

bool is_time_header(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "t" || lower == "timestamp";
}

struct RawCsv {
    bool has_time = false;
    std::vector<std::string> names;
    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<std::string>> cells;  // [row][data column]
};

RawCsv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + quote(path) + " for reading");

    std::string line;
    if (!std::getline(in, line)) throw_data(quote(path) + ": empty file, expected a header row");
    if (!line.empty() && line.front() == '\xEF') line = line.substr(3);  // UTF-8 BOM

    RawCsv csv;
    std::vector<std::string> header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    if (header.empty()) throw_data(quote(path) + ": header row has no columns");

    std::size_t first_data_col = 0;
    if (is_time_header(header.front())) {
        csv.has_time = true;
        first_data_col = 1;
    }
    if (header.size() == first_data_col) throw_data(quote(path) + ": no metric columns in header");

    std::set<std::string> seen;
    for (std::size_t c = first_data_col; c < header.size(); ++c) {
        if (header[c].empty()) throw_data(quote(path) + ": empty series name in header column " + std::to_string(c + 1));
        if (!seen.insert(header[c]).second) throw_data(quote(path) + ": duplicate series name " + quote(header[c]));
        csv.names.push_back(header[c]);
    }

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw_data(quote(path) + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
        }
        if (csv.has_time) {
            const std::string cell = trim(fields[0]);
            std::int64_t ts = 0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), ts);
            if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw_data(quote(path) + ": non-integer timestamp " + quote(cell) + " at row " + std::to_string(row));
            }
            csv.timestamps.push_back(ts);
        }
        fields.erase(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(first_data_col));
        csv.cells.push_back(std::move(fields));
    }
    return csv;
}

}  // namespace

std::size_t TimeSeriesPanel::index_of(const std::string& name) const {
    auto idx = find(name);
    if (!idx) throw_data("unknown series " + quote(name));
    return *idx;
}

std::optional<std::size_t> TimeSeriesPanel::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

TimeSeriesPanel make_panel(std::vector<std::string> names, std::vector<std::vector<double>> values,
                           std::vector<std::int64_t> timestamps) {
    if (names.size() != values.size()) throw_data("panel has " + std::to_string(names.size()) + " names but " +
                                                  std::to_string(values.size()) + " series");
    if (names.empty()) throw_data("panel must contain at least one series");
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) throw_data("duplicate series name " + quote(n));
    }
    const std::size_t t = values.front().size();
    if (t == 0) throw_data("T must be >= 1");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != t) {
            throw_data("series " + quote(names[i]) + " has length " + std::to_string(values[i].size()) +
                       ", expected " + std::to_string(t));
        }
    }
    if (timestamps.empty()) {
        timestamps.resize(t);
        for (std::size_t i = 0; i < t; ++i) timestamps[i] = static_cast<std::int64_t>(i);
    } else {
        if (timestamps.size() != t) throw_data("time index length does not match series length");
        for (std::size_t i = 1; i < t; ++i) {
            if (timestamps[i] <= timestamps[i - 1]) throw_data("time index must be strictly increasing");
        }
    }
    TimeSeriesPanel panel;
    panel.names = std::move(names);
    panel.values = std::move(values);
    panel.timestamps = std::move(timestamps);
    return panel;
}

double ThresholdSpec::value_for(const std::string& name) const {
    auto v = find(name);
    if (!v) throw_config("no threshold configured for series \"" + name + "\"");
    return *v;
}

std::optional<double> ThresholdSpec::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return entries[i].value;
    }
    return std::nullopt;
}

ThresholdSpec fixed_thresholds(const std::vector<std::string>& names, const std::vector<double>& values) {
    if (names.size() != values.size()) throw_config("threshold name/value count mismatch");
    ThresholdSpec spec;
    spec.names = names;
    spec.entries.reserve(values.size());
    for (double v : values) {
        ThresholdEntry e;
        e.value = v;
        e.provenance = ThresholdProvenance::fixed;
        spec.entries.push_back(e);
    }
    return spec;
}

std::size_t BinaryPanel::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw_data("unknown series " + quote(name));
}

TimeSeriesPanel load_panel_csv(const std::string& path) {
    RawCsv csv = read_csv(path);
    if (csv.cells.empty()) throw_data(quote(path) + ": T must be >= 1 (no data rows)");

    const std::size_t d = csv.names.size();
    const std::size_t t = csv.cells.size();
    std::vector<std::vector<double>> values(d, std::vector<double>(t));
    for (std::size_t r = 0; r < t; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            // +2: header row plus 1-based numbering; +1 column for the time column if present.
            values[c][r] = parse_cell(csv.cells[r][c], r + 2, c + (csv.has_time ? 2 : 1));
        }
    }
    return make_panel(std::move(csv.names), std::move(values), std::move(csv.timestamps));
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw_internal("double formatting failed");
    return std::string(buf, ptr);
}

void save_panel_csv(const TimeSeriesPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open " + quote(path) + " for writing");
    out << "t";
    for (const auto& n : panel.names) out << "," << n;
    out << "\n";
    const std::size_t t = panel.length();
    for (std::size_t i = 0; i < t; ++i) {
        out << panel.timestamps[i];
        for (const auto& series : panel.values) out << "," << format_double(series[i]);
        out << "\n";
    }
    if (!out) throw_io("write to " + quote(path) + " failed");
}

double normalize_upper_bound() { return kNormalizeUpper; }

TimeSeriesPanel normalize(const TimeSeriesPanel& panel) {
    TimeSeriesPanel out = panel;
    for (auto& series : out.values) {
        const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
        const double lo = *lo_it;
        const double hi = *hi_it;
        if (!(hi > lo)) {
            std::fill(series.begin(), series.end(), 0.0);
            continue;
        }
        if (lo == 0.0 && hi == kNormalizeUpper) continue;  // already normalized; identity keeps idempotence exact
        const double range = hi - lo;
        for (double& v : series) {
            v = ((v - lo) / range) * kNormalizeUpper;
        }
    }
    return out;
}

ThresholdSpec select_thresholds(const TimeSeriesPanel& panel, double proportion) {
    if (!(proportion > 0.0 && proportion < 1.0)) {
        throw_config("quantile proportion must be in (0,1), got " + format_double(proportion));
    }
    const std::size_t t = panel.length();
    ThresholdSpec spec;
    spec.names = panel.names;
    spec.entries.reserve(panel.series_count());
    for (const auto& series : panel.values) {
        std::vector<double> sorted = series;
        std::sort(sorted.begin(), sorted.end());
        std::size_t idx = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(t)));
        if (idx >= t) idx = t - 1;
        ThresholdEntry e;
        e.value = sorted[idx];
        e.provenance = ThresholdProvenance::quantile;
        e.quantile_p = proportion;
        spec.entries.push_back(e);
    }
    return spec;
}

BinaryPanel binarize(const TimeSeriesPanel& panel, const ThresholdSpec& thresholds) {
    BinaryPanel out;
    out.names = panel.names;
    out.thresholds.names = panel.names;
    out.bits.reserve(panel.series_count());
    for (std::size_t i = 0; i < panel.series_count(); ++i) {
        auto pos = std::find(thresholds.names.begin(), thresholds.names.end(), panel.names[i]);
        if (pos == thresholds.names.end()) {
            throw_config("no threshold configured for series \"" + panel.names[i] + "\"");
        }
        const ThresholdEntry e = thresholds.entries[static_cast<std::size_t>(pos - thresholds.names.begin())];
        const double r = e.value;
        out.thresholds.entries.push_back(e);
        std::vector<std::uint8_t> bits(panel.length());
        const auto& series = panel.values[i];
        for (std::size_t tt = 0; tt < series.size(); ++tt) bits[tt] = series[tt] >= r ? 1 : 0;
        out.bits.push_back(std::move(bits));
    }
    return out;
}

void save_bits_csv(const BinaryPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open " + quote(path) + " for writing");
    out << "t";
    for (const auto& n : panel.names) out << "," << n;
    out << "\n";
    for (std::size_t i = 0; i < panel.length(); ++i) {
        out << i;
        for (const auto& series : panel.bits) out << "," << static_cast<int>(series[i]);
        out << "\n";
    }
    if (!out) throw_io("write to " + quote(path) + " failed");
}

void save_thresholds_json(const ThresholdSpec& spec, const std::string& path) {
    nlohmann::json j;
    for (std::size_t i = 0; i < spec.names.size(); ++i) j[spec.names[i]] = spec.entries[i].value;
    std::ofstream out(path);
    if (!out) throw_io("cannot open " + quote(path) + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw_io("write to " + quote(path) + " failed");
}

ThresholdSpec load_thresholds_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + quote(path) + " for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw_data(quote(path) + ": invalid threshold JSON: " + e.what());
    }
    if (!j.is_object()) throw_data(quote(path) + ": threshold file must be a flat name -> value object");
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw_data(quote(path) + ": threshold for " + quote(key) + " is not numeric");
        names.push_back(key);
        values.push_back(value.get<double>());
    }
    return fixed_thresholds(names, values);
}

BinaryPanel load_bits_csv(const std::string& path) {
    TimeSeriesPanel panel = load_panel_csv(path);
    BinaryPanel out;
    out.names = panel.names;
    out.bits.reserve(panel.series_count());
    for (std::size_t i = 0; i < panel.series_count(); ++i) {
        std::vector<std::uint8_t> bits(panel.length());
        for (std::size_t t = 0; t < panel.length(); ++t) {
            const double v = panel.values[i][t];
            if (v != 0.0 && v != 1.0) {
                throw_data(quote(path) + ": series " + quote(panel.names[i]) + " holds non-binary value " +
                           format_double(v));
            }
            bits[t] = v == 1.0 ? 1 : 0;
        }
        out.bits.push_back(std::move(bits));
    }
    return out;
}

}  // namespace trca
