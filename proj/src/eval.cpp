#include "eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "graph.hpp"
#include "parallel.hpp"
#include "rca.hpp"
#include "rng.hpp"

namespace trca {

double f1_score(const std::set<std::string>& truth, const std::set<std::string>& inferred) {
    std::size_t tp = 0;
    for (const auto& c : inferred) {
        if (truth.count(c)) ++tp;
    }
    const std::size_t fp = inferred.size() - tp;
    const std::size_t fn = truth.size() - tp;
    if (tp + fp + fn == 0) return 1.0;  // nothing to find, nothing found
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::string generator_name(EvalGenerator g) {
    switch (g) {
        case EvalGenerator::tdscm:
            return "tdscm";
        case EvalGenerator::linear:
            return "linear";
        case EvalGenerator::noise_shift:
            return "noise_shift";
    }
    throw_internal("unknown generator");
}

std::string graph_source_name(GraphSource s) { return s == GraphSource::learned ? "learned" : "oracle"; }

namespace {

EvalGenerator parse_generator(const std::string& name) {
    if (name == "tdscm") return EvalGenerator::tdscm;
    if (name == "linear") return EvalGenerator::linear;
    if (name == "noise_shift") return EvalGenerator::noise_shift;
    throw_config("unknown generator \"" + name + "\" (expected tdscm, linear or noise_shift)");
}

struct ThresholdPoint {
    std::string label;
    ThresholdPolicy kind = ThresholdPolicy::true_thresholds;
    double value = 0.0;  // proportion or offset
};

std::string offset_label(double offset) {
    return "offset(" + std::string(offset >= 0.0 ? "+" : "") + format_double(offset) + ")";
}

std::vector<ThresholdPoint> threshold_points(const ExperimentConfig& cfg, bool sweep_mode) {
    std::vector<ThresholdPoint> points;
    if (!sweep_mode) {
        if (cfg.policy == ThresholdPolicy::true_thresholds) {
            points.push_back({"true", ThresholdPolicy::true_thresholds, 0.0});
        } else {
            points.push_back({"quantile(" + format_double(cfg.quantile_p) + ")", ThresholdPolicy::quantile,
                              cfg.quantile_p});
        }
        return points;
    }
    if (cfg.policy == ThresholdPolicy::sweep) {
        for (double p : cfg.sweep_proportions) {
            points.push_back({"quantile(" + format_double(p) + ")", ThresholdPolicy::quantile, p});
        }
    } else {
        for (double offset : cfg.offset_grid) {
            points.push_back({offset_label(offset), ThresholdPolicy::offset_sweep, offset});
        }
    }
    // The correctly-chosen-threshold reference line exists only where true
    // thresholds exist.
    if (cfg.generator == EvalGenerator::tdscm) {
        points.push_back({"true", ThresholdPolicy::true_thresholds, 0.0});
    }
    return points;
}

struct TrialData {
    bool failed = false;
    std::set<std::string> roots;
    SummaryGraph oracle;
    TimeSeriesPanel offline_panel;
    TimeSeriesPanel online_panel;  // at the largest requested online length
    ThresholdSpec true_thresholds;
    bool has_trace = false;
    TraceDoc trace;
};

TimeSeriesPanel panel_prefix(const TimeSeriesPanel& panel, std::size_t length) {
    if (length >= panel.length()) return panel;
    std::vector<std::vector<double>> values;
    values.reserve(panel.series_count());
    for (const auto& series : panel.values) values.emplace_back(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(length));
    return make_panel(panel.names, std::move(values));
}

TraceDoc trace_prefix(const TraceDoc& doc, std::size_t length) {
    TraceDoc out = doc;
    for (auto& row : out.online.u_draws) {
        if (row.size() > length) row.resize(length);
    }
    for (auto& row : out.online.i_draws) {
        if (row.size() > length) row.resize(length);
    }
    std::vector<RootCauseEvent> kept;
    for (const auto& ev : out.online.root_causes) {
        if (ev.time < length) kept.push_back(ev);
    }
    out.online.root_causes = std::move(kept);
    return out;
}

TrialData make_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::size_t max_online = *std::max_element(cfg.online_lengths.begin(), cfg.online_lengths.end());
    TrialData data;
    if (cfg.generator == EvalGenerator::tdscm) {
        TrialOptions options;
        options.vertices = cfg.vertices;
        options.degree_min = cfg.degree_min;
        options.degree_max = cfg.degree_max;
        options.root_vertices = cfg.root_vertices;
        options.offline_length = cfg.offline_length;
        options.online_length = max_online;
        options.beta = cfg.beta;
        options.scenario = cfg.scenario;
        TdscmTrial trial = make_tdscm_trial(options, seed);
        data.roots = root_cause_vertices(trial.online.trace);
        data.oracle = collapse_to_summary(trial.params.graph);
        data.offline_panel = trial.offline.panel;
        data.online_panel = trial.online.panel;
        data.true_thresholds = trial.params.thresholds;
        data.trace = trial.trace_doc();
        data.has_trace = true;
        return data;
    }
    const WindowGraph graph =
        random_tscg(cfg.vertices, cfg.degree_min, cfg.degree_max, cfg.root_vertices, mix_seed(seed, 21));
    LinearTrial trial;
    if (cfg.generator == EvalGenerator::linear) {
        trial = generate_linear_dscm(graph, cfg.offline_length, max_online, cfg.scenario, mix_seed(seed, 22));
    } else {
        trial = generate_noise_shift_dscm(graph, cfg.offline_length, max_online, cfg.scenario, cfg.shift,
                                          mix_seed(seed, 22));
    }
    data.roots = trial.root_causes;
    data.oracle = collapse_to_summary(graph);
    data.offline_panel = trial.offline;
    data.online_panel = trial.online;
    return data;
}

ThresholdSpec resolve_thresholds(const ThresholdPoint& point, const TrialData& data, bool& clamped) {
    clamped = false;
    switch (point.kind) {
        case ThresholdPolicy::true_thresholds:
            return data.true_thresholds;
        case ThresholdPolicy::quantile:
        case ThresholdPolicy::sweep:
            return select_thresholds(data.offline_panel, point.value);
        case ThresholdPolicy::offset_sweep: {
            ThresholdSpec spec = data.true_thresholds;
            for (auto& entry : spec.entries) {
                double v = entry.value + point.value;
                if (v < 0.0 || v > 1.0) {
                    clamped = true;
                    v = std::clamp(v, 0.0, 1.0);
                }
                entry.value = v;
                entry.provenance = ThresholdProvenance::fixed;
            }
            return spec;
        }
    }
    throw_internal("unknown threshold policy");
}

ResultTable run_points(const ExperimentConfig& cfg, const std::vector<ThresholdPoint>& points, int jobs) {
    using clock = std::chrono::steady_clock;
    std::vector<std::size_t> lengths = cfg.online_lengths;

    std::vector<std::vector<ResultRow>> per_trial(static_cast<std::size_t>(cfg.n_trials));
    parallel_for(static_cast<std::size_t>(cfg.n_trials), jobs, [&](std::size_t trial_idx) {
        const std::uint64_t trial_seed = mix_seed(cfg.seed, trial_idx);
        TrialData data;
        data.failed = true;
        for (int attempt = 0; attempt <= cfg.max_generation_retries; ++attempt) {
            try {
                data = make_trial(cfg, mix_seed(trial_seed, 7000 + static_cast<std::uint64_t>(attempt)));
                data.failed = false;
                break;
            } catch (const Error&) {
                // generation failure; retry with a derived seed
            }
        }

        std::vector<ResultRow>& rows = per_trial[trial_idx];
        for (const auto& point : points) {
            ResultRow base;
            base.generator = generator_name(cfg.generator);
            base.scenario = scenario_name(cfg.scenario);
            base.graph = graph_source_name(cfg.graph_source);
            base.thresholds = point.label;
            base.trial = static_cast<int>(trial_idx);
            if (data.failed) {
                for (std::size_t length : lengths) {
                    ResultRow row = base;
                    row.online_length = length;
                    row.error = true;
                    rows.push_back(row);
                }
                continue;
            }

            const auto offline_start = clock::now();
            bool clamped = false;
            const ThresholdSpec thresholds = resolve_thresholds(point, data, clamped);
            SummaryGraph graph;
            if (cfg.graph_source == GraphSource::oracle) {
                graph = data.oracle;
            } else {
                const BinaryPanel offline_bits = binarize(data.offline_panel, thresholds);
                graph = discover_summary(offline_bits, cfg.discovery, 1);
            }
            const double offline_seconds = std::chrono::duration<double>(clock::now() - offline_start).count();

            for (std::size_t length : lengths) {
                ResultRow row = base;
                row.online_length = length;
                row.clamped = clamped;
                row.offline_seconds = offline_seconds;
                const auto online_start = clock::now();
                const BinaryPanel online_bits = binarize(panel_prefix(data.online_panel, length), thresholds);
                std::set<std::string> inferred;
                if (cfg.agent) {
                    const TraceDoc prefix = trace_prefix(data.trace, length);
                    const Fixer fixer = make_reference_fixer(prefix);
                    const std::size_t m = std::max<std::size_t>(1, max_on_directed_path(data.oracle, data.roots));
                    const AnomalyReport report = trca_agent(graph, online_bits, fixer, static_cast<int>(m));
                    inferred = report.root_causes;
                } else {
                    inferred = analyze(graph, online_bits).root_causes;
                }
                row.online_seconds = std::chrono::duration<double>(clock::now() - online_start).count();
                row.f1 = f1_score(data.roots, inferred);
                rows.push_back(row);
            }
        }
    });

    ResultTable table;
    for (const auto& rows : per_trial) table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    table.aggregates = aggregate_rows(table.rows);
    return table;
}

}  // namespace

void ExperimentConfig::validate(bool sweep_mode) const {
    std::vector<std::string> errors;
    auto err = [&](const std::string& msg) { errors.push_back(msg); };

    if (n_trials < 1) err("trials must be >= 1");
    if (offline_length < 10) err("offline_length must be >= 10");
    if (online_lengths.empty()) err("online_lengths must not be empty");
    for (std::size_t l : online_lengths) {
        if (l < 1) err("online lengths must be >= 1");
    }
    if (scenario == Scenario::offline) err("experiments need an online scenario");
    if (!(quantile_p > 0.0 && quantile_p < 1.0)) err("quantile must be in (0,1)");
    if (vertices < 2) err("vertices must be >= 2");
    if (degree_min > degree_max || degree_max < 1) err("invalid degree bounds");
    if (root_vertices < 1 || root_vertices > vertices) err("roots must lie in [1, vertices]");
    if (!(beta > 0.0 && beta < 1.0)) err("beta must be in (0,1)");
    if (max_generation_retries < 0) err("retries must be >= 0");

    if (sweep_mode) {
        if (policy != ThresholdPolicy::sweep && policy != ThresholdPolicy::offset_sweep) {
            err("sweep runs need thresholds = sweep or offset_sweep");
        }
        if (policy == ThresholdPolicy::sweep && sweep_proportions.empty()) err("sweep_grid must not be empty");
        if (policy == ThresholdPolicy::offset_sweep && offset_grid.empty()) err("offset_grid must not be empty");
        for (double p : sweep_proportions) {
            if (!(p > 0.0 && p < 1.0)) err("sweep proportions must be in (0,1)");
        }
    } else if (policy == ThresholdPolicy::sweep || policy == ThresholdPolicy::offset_sweep) {
        err("threshold sweeps run through the sweep command");
    }

    const bool needs_true = policy == ThresholdPolicy::true_thresholds || policy == ThresholdPolicy::offset_sweep;
    if (needs_true && generator != EvalGenerator::tdscm) {
        err("true thresholds exist only for the tdscm generator; use quantile thresholds");
    }
    if (agent) {
        if (generator != EvalGenerator::tdscm) err("agent mode needs the tdscm generator's intervention trace");
        if (policy != ThresholdPolicy::true_thresholds) err("agent mode needs true thresholds");
    }
    try {
        discovery.validate();
    } catch (const Error& e) {
        err(e.what());
    }

    if (!errors.empty()) {
        std::string joined = "invalid experiment config:";
        for (const auto& e : errors) joined += "\n  - " + e;
        throw_config(joined);
    }
}

std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string, std::string, std::size_t>;
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const auto& row : rows) {
        groups[{row.generator, row.scenario, row.graph, row.thresholds, row.online_length}].push_back(&row);
    }
    std::vector<AggregateRow> aggregates;
    for (const auto& [key, members] : groups) {
        AggregateRow agg;
        agg.generator = std::get<0>(key);
        agg.scenario = std::get<1>(key);
        agg.graph = std::get<2>(key);
        agg.thresholds = std::get<3>(key);
        agg.online_length = std::get<4>(key);
        double sum = 0.0;
        for (const ResultRow* row : members) {
            if (row->error) {
                ++agg.errors;
                continue;
            }
            ++agg.n;
            sum += row->f1;
        }
        if (agg.n > 0) {
            agg.mean_f1 = sum / static_cast<double>(agg.n);
            double ss = 0.0;
            for (const ResultRow* row : members) {
                if (row->error) continue;
                const double d = row->f1 - agg.mean_f1;
                ss += d * d;
            }
            agg.var_f1 = ss / static_cast<double>(agg.n);
        }
        aggregates.push_back(std::move(agg));
    }
    return aggregates;
}

ResultTable run_experiment(const ExperimentConfig& cfg, int jobs) {
    cfg.validate(false);
    return run_points(cfg, threshold_points(cfg, false), jobs);
}

ResultTable threshold_sweep(const ExperimentConfig& cfg, int jobs) {
    cfg.validate(true);
    return run_points(cfg, threshold_points(cfg, true), jobs);
}

namespace {

std::string sanitize_filename(std::string s) {
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.' && c != '+') c = '_';
    }
    return s;
}

std::string svg_chart(const std::vector<const AggregateRow*>& family) {
    const double width = 480, height = 320;
    const double left = 56, right = 16, top = 20, bottom = 44;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::vector<std::size_t> xs;
    for (const auto* a : family) xs.push_back(a->online_length);
    const std::size_t x_min = *std::min_element(xs.begin(), xs.end());
    const std::size_t x_max = *std::max_element(xs.begin(), xs.end());
    auto x_pos = [&](std::size_t v) {
        if (x_max == x_min) return left + plot_w / 2.0;
        return left + plot_w * (static_cast<double>(v - x_min) / static_cast<double>(x_max - x_min));
    };
    auto y_pos = [&](double f1) { return top + plot_h * (1.0 - std::clamp(f1, 0.0, 1.0)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    // variance band
    if (family.size() > 1) {
        svg << "  <polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" points=\"";
        for (const auto* a : family) svg << x_pos(a->online_length) << "," << y_pos(a->mean_f1 + a->var_f1) << " ";
        for (auto it = family.rbegin(); it != family.rend(); ++it) {
            svg << x_pos((*it)->online_length) << "," << y_pos((*it)->mean_f1 - (*it)->var_f1) << " ";
        }
        svg << "\"/>\n";
    }
    svg << "  <polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (const auto* a : family) svg << x_pos(a->online_length) << "," << y_pos(a->mean_f1) << " ";
    svg << "\"/>\n";
    for (const auto* a : family) {
        svg << "  <circle cx=\"" << x_pos(a->online_length) << "\" cy=\"" << y_pos(a->mean_f1)
            << "\" r=\"3\" fill=\"#08519c\"/>\n";
    }
    // axes
    svg << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    for (double tick : {0.0, 0.5, 1.0}) {
        svg << "  <text x=\"" << left - 8 << "\" y=\"" << y_pos(tick) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << format_double(tick) << "</text>\n";
    }
    for (const auto* a : family) {
        svg << "  <text x=\"" << x_pos(a->online_length) << "\" y=\"" << top + plot_h + 16
            << "\" font-size=\"11\" text-anchor=\"middle\">" << a->online_length << "</text>\n";
    }
    svg << "  <text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 8
        << "\" font-size=\"12\" text-anchor=\"middle\">online length</text>\n";
    svg << "  <text x=\"14\" y=\"" << top + plot_h / 2
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << top + plot_h / 2
        << ")\">F1</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

void emit_results(const ResultTable& table, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw_io("cannot create directory \"" + out_dir + "\": " + ec.message());
    const auto path = [&](const std::string& name) { return (std::filesystem::path(out_dir) / name).string(); };

    {
        std::ofstream out(path("rows.csv"));
        if (!out) throw_io("cannot open rows.csv for writing");
        out << "generator,scenario,graph,thresholds,online_length,trial,f1,clamped,error\n";
        for (const auto& row : table.rows) {
            out << row.generator << "," << row.scenario << "," << row.graph << ","
                << row.thresholds << "," << row.online_length << "," << row.trial << ","
                << format_double(row.f1) << "," << (row.clamped ? 1 : 0) << "," << (row.error ? 1 : 0) << "\n";
        }
    }
    {
        std::ofstream out(path("timings.csv"));
        if (!out) throw_io("cannot open timings.csv for writing");
        out << "generator,scenario,graph,thresholds,online_length,trial,offline_seconds,online_seconds\n";
        for (const auto& row : table.rows) {
            if (row.error) continue;
            out << row.generator << "," << row.scenario << "," << row.graph << ","
                << row.thresholds << "," << row.online_length << "," << row.trial << ","
                << format_double(row.offline_seconds) << "," << format_double(row.online_seconds) << "\n";
        }
    }
    {
        std::ofstream out(path("aggregates.csv"));
        if (!out) throw_io("cannot open aggregates.csv for writing");
        out << "generator,scenario,graph,thresholds,online_length,n,errors,mean_f1,var_f1\n";
        for (const auto& agg : table.aggregates) {
            out << agg.generator << "," << agg.scenario << "," << agg.graph << ","
                << agg.thresholds << "," << agg.online_length << "," << agg.n << "," << agg.errors << ","
                << format_double(agg.mean_f1) << "," << format_double(agg.var_f1) << "\n";
        }
    }

    // one chart per configuration family (everything but online_length)
    std::map<std::string, std::vector<const AggregateRow*>> families;
    for (const auto& agg : table.aggregates) {
        families[agg.generator + "_" + agg.scenario + "_" + agg.graph + "_" + agg.thresholds].push_back(&agg);
    }
    for (auto& [name, family] : families) {
        std::sort(family.begin(), family.end(),
                  [](const AggregateRow* a, const AggregateRow* b) { return a->online_length < b->online_length; });
        std::ofstream out(path("f1_" + sanitize_filename(name) + ".svg"));
        if (!out) throw_io("cannot open SVG output for writing");
        out << svg_chart(family);
    }
}

std::string summarize_results(const ResultTable& table) {
    std::ostringstream out;
    out << "generator    scenario                      graph    thresholds        T_on   n    err  mean_f1   var_f1\n";
    for (const auto& agg : table.aggregates) {
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %-29s %-8s %-17s %-6zu %-4zu %-4zu %-9.4f %-9.6f\n",
                      agg.generator.c_str(), agg.scenario.c_str(), agg.graph.c_str(), agg.thresholds.c_str(),
                      agg.online_length, agg.n, agg.errors, agg.mean_f1, agg.var_f1);
        out << line;
    }
    return out.str();
}

// --- config file ------------------------------------------------------------

namespace {

struct IniData {
    std::map<std::string, std::string> values;  // "section.key" -> value
};

IniData parse_ini(const std::string& text) {
    IniData data;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](const std::string& s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw_config("config line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw_config("config line " + std::to_string(line_no) + ": expected `key = value`");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw_config("config line " + std::to_string(line_no) + ": empty key");
        data.values[section.empty() ? key : section + "." + key] = value;
    }
    return data;
}

class ConfigReader {
public:
    explicit ConfigReader(IniData data) : data_(std::move(data)) {}

    bool has(const std::string& key) const { return data_.values.count(key) > 0; }

    std::string raw(const std::string& key) {
        used_.insert(key);
        return data_.values.at(key);
    }

    void string_value(const std::string& key, std::string& target) {
        if (has(key)) target = raw(key);
    }
    void double_value(const std::string& key, double& target) {
        if (!has(key)) return;
        if (!parse_double(raw(key), target)) error(key + " must be a number");
    }
    void int_value(const std::string& key, int& target) {
        if (!has(key)) return;
        try {
            target = std::stoi(raw(key));
        } catch (...) {
            error(key + " must be an integer");
        }
    }
    void size_value(const std::string& key, std::size_t& target) {
        if (!has(key)) return;
        try {
            target = static_cast<std::size_t>(std::stoull(raw(key)));
        } catch (...) {
            error(key + " must be a nonnegative integer");
        }
    }
    void seed_value(const std::string& key, std::uint64_t& target) {
        if (!has(key)) return;
        try {
            target = std::stoull(raw(key));
        } catch (...) {
            error(key + " must be a nonnegative integer");
        }
    }
    void bool_value(const std::string& key, bool& target) {
        if (!has(key)) return;
        const std::string v = raw(key);
        if (v == "true" || v == "1" || v == "yes") {
            target = true;
        } else if (v == "false" || v == "0" || v == "no") {
            target = false;
        } else {
            error(key + " must be true or false");
        }
    }
    void double_list(const std::string& key, std::vector<double>& target) {
        if (!has(key)) return;
        std::vector<double> values;
        if (!parse_grid(raw(key), values) || values.empty()) {
            error(key + " must be numbers (`a b c` or `start:end:step`)");
            return;
        }
        target = std::move(values);
    }
    void size_list(const std::string& key, std::vector<std::size_t>& target) {
        if (!has(key)) return;
        std::vector<std::size_t> values;
        std::istringstream in(raw(key));
        std::string token;
        bool ok = true;
        while (in >> token) {
            try {
                values.push_back(static_cast<std::size_t>(std::stoull(token)));
            } catch (...) {
                ok = false;
            }
        }
        if (!ok || values.empty()) {
            error(key + " must be a space-separated list of nonnegative integers");
            return;
        }
        target = std::move(values);
    }

    void error(const std::string& msg) { errors_.push_back(msg); }

    void finish() {
        for (const auto& [key, value] : data_.values) {
            if (!used_.count(key)) errors_.push_back("unknown key \"" + key + "\"");
        }
        if (!errors_.empty()) {
            std::string joined = "invalid experiment config:";
            for (const auto& e : errors_) joined += "\n  - " + e;
            throw_config(joined);
        }
    }

private:
    static bool parse_double(const std::string& s, double& out) {
        try {
            std::size_t pos = 0;
            out = std::stod(s, &pos);
            return pos == s.size();
        } catch (...) {
            return false;
        }
    }
    static bool parse_grid(const std::string& s, std::vector<double>& out) {
        if (s.find(':') != std::string::npos) {
            double start = 0, end = 0, step = 0;
            std::string part;
            std::istringstream in(s);
            std::vector<std::string> parts;
            while (std::getline(in, part, ':')) parts.push_back(part);
            if (parts.size() != 3) return false;
            if (!parse_double(parts[0], start) || !parse_double(parts[1], end) || !parse_double(parts[2], step)) {
                return false;
            }
            if (step <= 0.0 || end < start) return false;
            for (double v = start; v <= end + 1e-12; v += step) out.push_back(std::round(v * 1e9) / 1e9);
            return true;
        }
        std::istringstream in(s);
        std::string token;
        while (in >> token) {
            double v = 0;
            if (!parse_double(token, v)) return false;
            out.push_back(v);
        }
        return true;
    }

    IniData data_;
    std::set<std::string> used_;
    std::vector<std::string> errors_;
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::vector<std::string>& overrides) {
    IniData data = parse_ini(text);
    for (const auto& override_kv : overrides) {
        const auto eq = override_kv.find('=');
        if (eq == std::string::npos) throw_config("override \"" + override_kv + "\" must take key=value form");
        data.values[override_kv.substr(0, eq)] = override_kv.substr(eq + 1);
    }

    ConfigReader reader(std::move(data));
    ExperimentConfig cfg;

    std::string generator = "tdscm";
    reader.string_value("experiment.generator", generator);
    std::string scenario = "online_assumption5_ok";
    reader.string_value("experiment.scenario", scenario);
    std::string policy = "true";
    reader.string_value("experiment.thresholds", policy);
    std::string graph_source = "learned";
    reader.string_value("experiment.graph", graph_source);

    try {
        cfg.generator = parse_generator(generator);
    } catch (const Error& e) {
        reader.error(e.what());
    }
    try {
        cfg.scenario = parse_scenario(scenario);
    } catch (const Error& e) {
        reader.error(e.what());
    }
    if (policy == "true") {
        cfg.policy = ThresholdPolicy::true_thresholds;
    } else if (policy == "quantile") {
        cfg.policy = ThresholdPolicy::quantile;
    } else if (policy == "sweep") {
        cfg.policy = ThresholdPolicy::sweep;
    } else if (policy == "offset_sweep") {
        cfg.policy = ThresholdPolicy::offset_sweep;
    } else {
        reader.error("experiment.thresholds must be true, quantile, sweep or offset_sweep");
    }
    if (graph_source == "learned") {
        cfg.graph_source = GraphSource::learned;
    } else if (graph_source == "oracle") {
        cfg.graph_source = GraphSource::oracle;
    } else {
        reader.error("experiment.graph must be learned or oracle");
    }

    reader.int_value("experiment.trials", cfg.n_trials);
    reader.size_value("experiment.offline_length", cfg.offline_length);
    reader.size_list("experiment.online_lengths", cfg.online_lengths);
    reader.double_value("experiment.quantile", cfg.quantile_p);
    cfg.sweep_proportions = {0.8, 0.82, 0.84, 0.86, 0.88, 0.9, 0.92, 0.94, 0.96, 0.98};
    reader.double_list("experiment.sweep_grid", cfg.sweep_proportions);
    cfg.offset_grid = {-0.05, 0.05};
    reader.double_list("experiment.offset_grid", cfg.offset_grid);
    reader.bool_value("experiment.agent", cfg.agent);
    reader.seed_value("experiment.seed", cfg.seed);
    reader.double_value("experiment.shift", cfg.shift);
    reader.int_value("experiment.retries", cfg.max_generation_retries);

    reader.int_value("graph.vertices", cfg.vertices);
    reader.int_value("graph.degree_min", cfg.degree_min);
    reader.int_value("graph.degree_max", cfg.degree_max);
    reader.int_value("graph.roots", cfg.root_vertices);
    reader.double_value("graph.beta", cfg.beta);

    reader.int_value("discovery.gamma_max", cfg.discovery.gamma_max);
    reader.double_value("discovery.alpha", cfg.discovery.alpha);
    reader.int_value("discovery.max_condition_set_size", cfg.discovery.max_condition_set_size);
    reader.bool_value("discovery.self_causes", cfg.discovery.include_self_causes);

    reader.finish();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open \"" + path + "\" for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(), overrides);
}

std::string describe_grid(const ExperimentConfig& cfg, bool sweep_mode) {
    cfg.validate(sweep_mode);
    std::ostringstream out;
    const auto points = threshold_points(cfg, sweep_mode);
    out << "planned grid (" << points.size() << " threshold points x " << cfg.online_lengths.size()
        << " online lengths x " << cfg.n_trials << " trials):\n";
    for (const auto& point : points) {
        for (std::size_t length : cfg.online_lengths) {
            out << "  " << generator_name(cfg.generator) << " " << scenario_name(cfg.scenario) << " "
                << graph_source_name(cfg.graph_source) << " " << point.label << " T_on=" << length << " trials="
                << cfg.n_trials << (cfg.agent ? " agent" : "") << "\n";
        }
    }
    return out.str();
}

}  // namespace trca
