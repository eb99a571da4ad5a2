// trca: root cause analysis for threshold-based monitored systems.
//
// Subcommands wire the shared library's C API to files on disk:
//   discover  learn the causal graph from offline data
//   detect    find root causes of anomalies in an online window
//   simulate  generate a ground-truth trial directory
//   evaluate  run an experiment grid from a config file
//   sweep     run a threshold-robustness sweep from a config file
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 incomplete
// agent run.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trca.h"

namespace {

struct PanelDeleter {
    void operator()(trca_panel* p) const { trca_panel_free(p); }
};
struct ThresholdsDeleter {
    void operator()(trca_thresholds* p) const { trca_thresholds_free(p); }
};
struct BinaryDeleter {
    void operator()(trca_binary_panel* p) const { trca_binary_panel_free(p); }
};
struct GraphDeleter {
    void operator()(trca_graph* p) const { trca_graph_free(p); }
};
struct ReportDeleter {
    void operator()(trca_report* p) const { trca_report_free(p); }
};
struct TraceDeleter {
    void operator()(trca_trace* p) const { trca_trace_free(p); }
};
struct AgentDeleter {
    void operator()(trca_agent* p) const { trca_agent_free(p); }
};

using PanelPtr = std::unique_ptr<trca_panel, PanelDeleter>;
using ThresholdsPtr = std::unique_ptr<trca_thresholds, ThresholdsDeleter>;
using BinaryPtr = std::unique_ptr<trca_binary_panel, BinaryDeleter>;
using GraphPtr = std::unique_ptr<trca_graph, GraphDeleter>;
using ReportPtr = std::unique_ptr<trca_report, ReportDeleter>;
using TracePtr = std::unique_ptr<trca_trace, TraceDeleter>;
using AgentPtr = std::unique_ptr<trca_agent, AgentDeleter>;

class CliError : public std::runtime_error {
public:
    CliError(int exit_code, const std::string& message) : std::runtime_error(message), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

bool g_verbose = false;

class Stopwatch {
public:
    ~Stopwatch() {
        if (g_verbose) {
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
            std::cerr << "done in " << seconds << "s\n";
        }
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int exit_code_of(trca_status status) {
    switch (status) {
        case TRCA_OK:
            return 0;
        case TRCA_ERR_CONFIG:
            return 2;
        case TRCA_ERR_DATA:
        case TRCA_ERR_IO:
            return 3;
        case TRCA_ERR_INCOMPLETE:
            return 4;
        default:
            return 1;
    }
}

void check(trca_status status) {
    if (status != TRCA_OK) throw CliError(exit_code_of(status), trca_last_error());
}

std::string joined(const std::filesystem::path& dir, const std::string& name) { return (dir / name).string(); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw CliError(3, "cannot create output directory \"" + dir + "\": " + ec.message());
}

struct DiscoverArgs {
    std::string offline_csv;
    std::string thresholds_file;
    double proportion = 0.9;
    bool normalize = false;
    int gamma_max = 1;
    double alpha = 0.01;
    int max_condition_set_size = 3;
    bool no_self_causes = false;
    bool audit = false;
    int jobs = 0;
    std::string out_dir;
};

int run_discover(const DiscoverArgs& args) {
    Stopwatch stopwatch;
    // Flag validation happens before any file is touched.
    if (!(args.alpha > 0.0 && args.alpha < 1.0)) throw CliError(2, "alpha must be in (0,1)");
    if (args.gamma_max < 1) throw CliError(2, "gamma-max must be >= 1");
    if (args.max_condition_set_size < -1) throw CliError(2, "max-cond must be >= 0 (or -1 for unbounded)");
    if (args.thresholds_file.empty() && !(args.proportion > 0.0 && args.proportion < 1.0)) {
        throw CliError(2, "proportion must be in (0,1)");
    }
    ensure_dir(args.out_dir);
    const std::filesystem::path out(args.out_dir);

    PanelPtr panel;
    {
        trca_panel* raw = nullptr;
        check(trca_panel_load_csv(args.offline_csv.c_str(), &raw));
        panel.reset(raw);
    }
    if (args.normalize) {
        trca_panel* scaled = nullptr;
        check(trca_panel_normalize(panel.get(), &scaled));
        panel.reset(scaled);
    }

    ThresholdsPtr thresholds;
    if (!args.thresholds_file.empty()) {
        trca_thresholds* raw = nullptr;
        check(trca_thresholds_load_json(args.thresholds_file.c_str(), &raw));
        thresholds.reset(raw);
    } else {
        trca_thresholds* raw = nullptr;
        check(trca_thresholds_select(panel.get(), args.proportion, &raw));
        thresholds.reset(raw);
    }

    BinaryPtr bits;
    {
        trca_binary_panel* raw = nullptr;
        check(trca_binarize(panel.get(), thresholds.get(), &raw));
        bits.reset(raw);
    }

    trca_discovery_options options;
    trca_discovery_options_init(&options);
    options.gamma_max = args.gamma_max;
    options.alpha = args.alpha;
    options.max_condition_set_size = args.max_condition_set_size;
    options.include_self_causes = args.no_self_causes ? 0 : 1;
    options.jobs = args.jobs;
    const std::string audit_path = joined(out, "ci_audit.log");
    options.audit_path = args.audit ? audit_path.c_str() : nullptr;

    GraphPtr graph;
    {
        trca_graph* raw = nullptr;
        check(trca_discover(bits.get(), &options, &raw));
        graph.reset(raw);
    }

    check(trca_graph_save_json(graph.get(), joined(out, "graph.json").c_str()));
    check(trca_graph_save_edgelist(graph.get(), joined(out, "graph.txt").c_str()));
    check(trca_thresholds_save_json(thresholds.get(), joined(out, "thresholds.json").c_str()));

    std::cout << "discovered graph over " << trca_graph_vertex_count(graph.get()) << " series -> "
              << joined(out, "graph.json") << "\n";
    return 0;
}

struct DetectArgs {
    std::string graph_file;
    std::string online_csv;
    std::string thresholds_file;
    bool agent = false;
    std::string fixer = "trace";
    std::string trace_file;
    int max_iterations = 0;
    std::string out_dir;
};

BinaryPtr load_online_bits(const ThresholdsPtr& thresholds, const std::string& csv_path) {
    PanelPtr panel;
    {
        trca_panel* raw = nullptr;
        check(trca_panel_load_csv(csv_path.c_str(), &raw));
        panel.reset(raw);
    }
    trca_binary_panel* raw_bits = nullptr;
    check(trca_binarize(panel.get(), thresholds.get(), &raw_bits));
    return BinaryPtr(raw_bits);
}

int run_detect(const DetectArgs& args) {
    Stopwatch stopwatch;
    ensure_dir(args.out_dir);
    const std::filesystem::path out(args.out_dir);

    GraphPtr graph;
    {
        trca_graph* raw = nullptr;
        check(trca_graph_load_json(args.graph_file.c_str(), &raw));
        graph.reset(raw);
    }
    ThresholdsPtr thresholds;
    {
        trca_thresholds* raw = nullptr;
        check(trca_thresholds_load_json(args.thresholds_file.c_str(), &raw));
        thresholds.reset(raw);
    }
    BinaryPtr online = load_online_bits(thresholds, args.online_csv);

    ReportPtr report;
    if (!args.agent) {
        trca_report* raw = nullptr;
        check(trca_detect(graph.get(), online.get(), &raw));
        report.reset(raw);
    } else if (args.fixer == "trace") {
        if (args.trace_file.empty()) throw CliError(2, "--agent with --fixer trace needs --trace");
        TracePtr trace;
        {
            trca_trace* raw = nullptr;
            check(trca_trace_load_json(args.trace_file.c_str(), &raw));
            trace.reset(raw);
        }
        trca_report* raw = nullptr;
        check(trca_detect_agent_trace(graph.get(), online.get(), trace.get(), args.max_iterations, &raw));
        report.reset(raw);
    } else if (args.fixer == "manual") {
        // Batch-style loop: print the confirmed set, read the path of a
        // remediated CSV from standard input, repeat.
        AgentPtr agent;
        {
            trca_agent* raw = nullptr;
            check(trca_agent_begin(graph.get(), online.get(), args.max_iterations, &raw));
            agent.reset(raw);
        }
        while (!trca_agent_done(agent.get())) {
            char* detected = nullptr;
            check(trca_agent_step(agent.get(), &detected));
            std::cout << "detected: " << detected << "\n" << std::flush;
            trca_string_free(detected);
            if (trca_agent_done(agent.get())) break;
            std::cout << "enter path of remediated online CSV (empty line keeps the window unchanged):\n"
                      << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) throw CliError(3, "standard input closed before the agent converged");
            BinaryPtr updated = line.empty() ? load_online_bits(thresholds, args.online_csv)
                                             : load_online_bits(thresholds, line);
            check(trca_agent_provide_panel(agent.get(), updated.get()));
        }
        trca_report* raw = nullptr;
        check(trca_agent_finish(agent.get(), &raw));
        report.reset(raw);
    } else {
        throw CliError(2, "--fixer must be trace or manual");
    }

    char* json = nullptr;
    check(trca_report_to_json(report.get(), &json));
    const std::string report_path = joined(out, "report.json");
    {
        std::ofstream file(report_path);
        if (!file) {
            trca_string_free(json);
            throw CliError(3, "cannot write " + report_path);
        }
        file << json;
    }
    trca_string_free(json);

    const size_t n = trca_report_root_cause_count(report.get());
    std::cout << "root causes (" << n << "):";
    for (size_t i = 0; i < n; ++i) std::cout << " " << trca_report_root_cause(report.get(), i);
    std::cout << "\nreport -> " << report_path << "\n";
    if (trca_report_incomplete(report.get())) {
        std::cout << "agent run incomplete: anomalies remain after the iteration budget\n";
        return 4;
    }
    return 0;
}

struct SimulateArgs {
    std::string generator = "tdscm";
    std::string scenario = "online_assumption5_ok";
    int vertices = 6;
    int degree_min = 4;
    int degree_max = 5;
    int roots = 1;
    long long offline_length = 20000;
    long long online_length = 200;
    double beta = 0.1;
    double shift = 5.0;
    std::uint64_t seed = 1;
    std::string out_dir;
};

int run_simulate(const SimulateArgs& args) {
    Stopwatch stopwatch;
    trca_sim_options options;
    trca_sim_options_init(&options);
    options.generator = args.generator.c_str();
    options.scenario = args.scenario.c_str();
    options.vertices = args.vertices;
    options.degree_min = args.degree_min;
    options.degree_max = args.degree_max;
    options.root_vertices = args.roots;
    options.offline_length = args.offline_length;
    options.online_length = args.online_length;
    options.beta = args.beta;
    options.shift = args.shift;
    options.seed = args.seed;
    check(trca_simulate_to_dir(&options, args.out_dir.c_str()));
    std::cout << "trial written to " << args.out_dir << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    bool dry_run = false;
    int jobs = 0;
    std::string out_dir;
};

int run_evaluate(const EvaluateArgs& args, bool sweep_mode) {
    Stopwatch stopwatch;
    if (!args.dry_run && args.out_dir.empty()) throw CliError(2, "--out is required unless --dry-run is given");
    std::vector<const char*> overrides;
    overrides.reserve(args.overrides.size());
    for (const auto& o : args.overrides) overrides.push_back(o.c_str());
    if (g_verbose && !args.dry_run) {
        char* plan = nullptr;
        if (trca_evaluate_file(args.config_file.c_str(), overrides.data(), overrides.size(), nullptr,
                               sweep_mode ? 1 : 0, 1, args.jobs, &plan) == TRCA_OK) {
            std::cerr << plan;
            trca_string_free(plan);
        }
    }
    char* summary = nullptr;
    check(trca_evaluate_file(args.config_file.c_str(), overrides.data(), overrides.size(),
                             args.out_dir.empty() ? nullptr : args.out_dir.c_str(), sweep_mode ? 1 : 0,
                             args.dry_run ? 1 : 0, args.jobs, &summary));
    std::cout << summary;
    trca_string_free(summary);
    if (!args.dry_run) std::cout << "results -> " << args.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Root cause analysis for threshold-based monitored systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(trca_version()));
    app.add_flag("-v,--verbose", g_verbose, "Print progress and timing to standard error");

    DiscoverArgs discover_args;
    auto* discover = app.add_subcommand("discover", "Learn the causal graph from offline data");
    discover->add_option("--offline", discover_args.offline_csv, "Offline wide CSV")->required();
    auto* prop_opt = discover->add_option("--proportion", discover_args.proportion,
                                          "Quantile proportion for per-series thresholds (default 0.9)");
    auto* thr_opt = discover->add_option("--thresholds", discover_args.thresholds_file,
                                         "Threshold JSON file (instead of --proportion)");
    prop_opt->excludes(thr_opt);
    discover->add_flag("--normalize", discover_args.normalize, "Min-max scale each series onto [0,1) first");
    discover->add_option("--gamma-max", discover_args.gamma_max, "Maximum causal lag (default 1)");
    discover->add_option("--alpha", discover_args.alpha, "Significance level (default 0.01)");
    discover->add_option("--max-cond", discover_args.max_condition_set_size,
                         "Conditioning set size limit, -1 unbounded (default 3)");
    discover->add_flag("--no-self-causes", discover_args.no_self_causes, "Exclude lagged self-edges");
    discover->add_flag("--audit", discover_args.audit, "Write every CI test to ci_audit.log");
    discover->add_option("--jobs", discover_args.jobs, "Worker threads, 0 = all cores");
    discover->add_option("--out", discover_args.out_dir, "Output directory")->required();

    DetectArgs detect_args;
    auto* detect = app.add_subcommand("detect", "Find root causes of anomalies in an online window");
    detect->add_option("--graph", detect_args.graph_file, "Graph JSON from discover/simulate")->required();
    detect->add_option("--online", detect_args.online_csv, "Online wide CSV")->required();
    detect->add_option("--thresholds", detect_args.thresholds_file, "Threshold JSON file")->required();
    detect->add_flag("--agent", detect_args.agent, "Iterate detection with a fixer between rounds");
    detect->add_option("--fixer", detect_args.fixer, "Agent fixer: trace or manual (default trace)");
    detect->add_option("--trace", detect_args.trace_file, "trace.json for the trace fixer");
    detect->add_option("--max-iterations", detect_args.max_iterations, "Agent iteration budget");
    detect->add_option("--out", detect_args.out_dir, "Output directory")->required();

    SimulateArgs simulate_args;
    auto* simulate = app.add_subcommand("simulate", "Generate a ground-truth trial directory");
    simulate->add_option("--generator", simulate_args.generator, "tdscm | linear | noise_shift");
    simulate->add_option("--scenario", simulate_args.scenario,
                         "offline | online_assumption5_ok | online_assumption5_violated");
    simulate->add_option("--vertices", simulate_args.vertices, "Graph size (default 6)");
    simulate->add_option("--degree-min", simulate_args.degree_min, "Smallest allowed maximum degree (default 4)");
    simulate->add_option("--degree-max", simulate_args.degree_max, "Largest allowed maximum degree (default 5)");
    simulate->add_option("--roots", simulate_args.roots, "Parentless vertices (default 1)");
    simulate->add_option("--t-off", simulate_args.offline_length, "Offline window length (default 20000)");
    simulate->add_option("--t-on", simulate_args.online_length, "Online window length (default 200)");
    simulate->add_option("--beta", simulate_args.beta, "Offline intervention probability (default 0.1)");
    simulate->add_option("--shift", simulate_args.shift, "Noise shift magnitude (noise_shift generator)");
    simulate->add_option("--seed", simulate_args.seed, "RNG seed (default 1)");
    simulate->add_option("--out", simulate_args.out_dir, "Output directory")->required();

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "Run an experiment grid from a config file");
    evaluate->add_option("--config", evaluate_args.config_file, "INI-style experiment config")->required();
    evaluate->add_option("--set", evaluate_args.overrides, "Override config values (section.key=value)");
    evaluate->add_flag("--dry-run", evaluate_args.dry_run, "Print the planned grid without executing");
    evaluate->add_option("--jobs", evaluate_args.jobs, "Worker threads, 0 = all cores");
    evaluate->add_option("--out", evaluate_args.out_dir, "Output directory");

    EvaluateArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Run a threshold-robustness sweep from a config file");
    sweep->add_option("--config", sweep_args.config_file, "INI-style experiment config")->required();
    sweep->add_option("--set", sweep_args.overrides, "Override config values (section.key=value)");
    sweep->add_flag("--dry-run", sweep_args.dry_run, "Print the planned grid without executing");
    sweep->add_option("--jobs", sweep_args.jobs, "Worker threads, 0 = all cores");
    sweep->add_option("--out", sweep_args.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (discover->parsed()) return run_discover(discover_args);
        if (detect->parsed()) return run_detect(detect_args);
        if (simulate->parsed()) return run_simulate(simulate_args);
        if (evaluate->parsed()) return run_evaluate(evaluate_args, false);
        if (sweep->parsed()) return run_evaluate(sweep_args, true);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
