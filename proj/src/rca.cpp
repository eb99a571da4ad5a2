#include "rca.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace trca {

Detection detect_anomalies(const BinaryPanel& online) {
    Detection detection;
    for (std::size_t v = 0; v < online.series_count(); ++v) {
        const auto& series = online.bits[v];
        for (std::size_t t = 0; t < series.size(); ++t) {
            if (series[t]) {
                detection.anomalies.insert(online.names[v]);
                detection.tau[online.names[v]] = t;
                break;
            }
        }
    }
    return detection;
}

TrcaResult detect_root_causes(const SummaryGraph& g, const std::set<std::string>& anomalies,
                              const AppearanceTimeMap& tau, TieBreak tie_break, std::uint64_t seed) {
    for (const auto& a : anomalies) {
        if (!tau.count(a)) throw_data("appearance time missing for anomalous vertex \"" + a + "\"");
    }

    TrcaResult result;
    if (anomalies.empty()) return result;

    const SummaryGraph sub = anomalous_subgraph(g, anomalies);
    const std::vector<Scc> components = scc_decompose(sub);
    Rng rng(seed);
    for (const auto& scc : components) {
        const std::set<std::string> member_set(scc.members.begin(), scc.members.end());
        bool internal = true;
        for (const auto& m : scc.members) {
            for (const auto& p : sub.parents(m)) {
                if (!member_set.count(p)) {
                    internal = false;
                    break;
                }
            }
            if (!internal) break;
        }
        if (!internal) {
            // Components fed by anomalies outside themselves carry no
            // identifiable root; surfaced for operator visibility.
            result.unresolved_components.push_back(scc.members);
            continue;
        }
        if (scc.members.size() == 1) {
            result.root_causes.insert(scc.members.front());
            continue;
        }
        std::size_t best_tau = tau.at(scc.members.front());
        for (const auto& m : scc.members) best_tau = std::min(best_tau, tau.at(m));
        std::vector<std::string> earliest;
        for (const auto& m : scc.members) {
            if (tau.at(m) == best_tau) earliest.push_back(m);
        }
        if (tie_break == TieBreak::lexicographic || earliest.size() == 1) {
            result.root_causes.insert(earliest.front());  // members are sorted
        } else {
            result.root_causes.insert(earliest[static_cast<std::size_t>(rng.below(earliest.size()))]);
        }
    }
    return result;
}

AnomalyReport analyze(const SummaryGraph& g, const BinaryPanel& online, TieBreak tie_break, std::uint64_t seed) {
    const Detection detection = detect_anomalies(online);
    const TrcaResult result = detect_root_causes(g, detection.anomalies, detection.tau, tie_break, seed);
    AnomalyReport report;
    report.anomalies = detection.anomalies;
    report.tau = detection.tau;
    report.root_causes = result.root_causes;
    report.unresolved_components = result.unresolved_components;
    return report;
}

AgentSession::AgentSession(SummaryGraph g, BinaryPanel online, int max_iterations, TieBreak tie_break,
                           std::uint64_t seed)
    : graph_(std::move(g)),
      current_(std::move(online)),
      max_iterations_(max_iterations),
      tie_break_(tie_break),
      seed_(seed) {
    if (max_iterations_ < 1) throw_config("max_iterations must be >= 1");
}

std::set<std::string> AgentSession::step() {
    if (finished_) throw_data("agent session is already finished");
    if (awaiting_panel_) throw_data("agent session expects a remediated panel before the next step");

    const Detection detection = detect_anomalies(current_);
    if (!first_recorded_) {
        first_ = detection;
        first_recorded_ = true;
    }
    if (detection.anomalies.empty()) {
        complete_ = true;
        finished_ = true;
        if (iterations_.empty()) iterations_.push_back({});
        return {};
    }
    const TrcaResult result = detect_root_causes(graph_, detection.anomalies, detection.tau, tie_break_, seed_);
    last_unresolved_ = result.unresolved_components;
    confirmed_.insert(result.root_causes.begin(), result.root_causes.end());
    iterations_.push_back({result.root_causes, confirmed_});
    ++steps_;
    awaiting_panel_ = true;
    return result.root_causes;
}

void AgentSession::provide_panel(BinaryPanel updated) {
    if (!awaiting_panel_) throw_data("agent session is not waiting for a panel");
    if (updated.names != current_.names || updated.length() != current_.length()) {
        throw_data("remediated panel must keep the original shape");
    }
    for (std::size_t v = 0; v < updated.series_count(); ++v) {
        for (std::size_t t = 0; t < updated.length(); ++t) {
            if (updated.bits[v][t] && !current_.bits[v][t]) {
                throw_data("fixer contract violated: new anomalous bit at (" + updated.names[v] + ", " +
                           std::to_string(t) + ")");
            }
        }
    }
    current_ = std::move(updated);
    awaiting_panel_ = false;
    if (steps_ >= max_iterations_) {
        finished_ = true;
        complete_ = detect_anomalies(current_).anomalies.empty();
    }
}

AnomalyReport AgentSession::finish() const {
    if (!finished_) throw_data("agent session is still running");
    AnomalyReport report;
    report.anomalies = first_.anomalies;
    report.tau = first_.tau;
    report.root_causes = confirmed_;
    report.iterations = iterations_;
    report.unresolved_components = complete_ ? std::vector<std::vector<std::string>>{} : last_unresolved_;
    report.incomplete = !complete_;
    return report;
}

AnomalyReport trca_agent(const SummaryGraph& g, const BinaryPanel& online, const Fixer& fixer, int max_iterations,
                         TieBreak tie_break, std::uint64_t seed) {
    AgentSession session(g, online, max_iterations, tie_break, seed);
    while (!session.finished()) {
        session.step();
        if (session.finished()) break;
        session.provide_panel(fixer(session.current(), session.confirmed()));
    }
    return session.finish();
}

Fixer make_reference_fixer(const TraceDoc& trace) {
    return [trace](const BinaryPanel& panel, const std::set<std::string>& roots) {
        BinaryPanel fixed = regenerate_bits(trace.params, trace.online, roots);
        if (fixed.names != panel.names || fixed.length() != panel.length()) {
            throw_data("trace does not match the online window shape");
        }
        return fixed;
    };
}

std::string report_to_json(const AnomalyReport& report) {
    nlohmann::json j;
    j["anomalies"] = std::vector<std::string>(report.anomalies.begin(), report.anomalies.end());
    nlohmann::json tau;
    for (const auto& [name, t] : report.tau) tau[name] = t;
    j["tau"] = tau;
    j["root_causes"] = std::vector<std::string>(report.root_causes.begin(), report.root_causes.end());
    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& it : report.iterations) {
        iterations.push_back({{"detected", std::vector<std::string>(it.detected.begin(), it.detected.end())},
                              {"fixed", std::vector<std::string>(it.fixed.begin(), it.fixed.end())}});
    }
    j["iterations"] = iterations;
    j["unresolved_components"] = report.unresolved_components;
    j["incomplete"] = report.incomplete;
    j["incident_policy"] = "whole window treated as a single incident";
    return j.dump(2) + "\n";
}

AnomalyReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid report JSON: ") + e.what());
    }
    try {
        AnomalyReport report;
        for (const auto& a : j.at("anomalies")) report.anomalies.insert(a.get<std::string>());
        for (const auto& [name, t] : j.at("tau").items()) report.tau[name] = t.get<std::size_t>();
        for (const auto& r : j.at("root_causes")) report.root_causes.insert(r.get<std::string>());
        for (const auto& it : j.at("iterations")) {
            AgentIteration iteration;
            for (const auto& d : it.at("detected")) iteration.detected.insert(d.get<std::string>());
            for (const auto& f : it.at("fixed")) iteration.fixed.insert(f.get<std::string>());
            report.iterations.push_back(std::move(iteration));
        }
        report.unresolved_components = j.at("unresolved_components").get<std::vector<std::vector<std::string>>>();
        report.incomplete = j.at("incomplete").get<bool>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("invalid report JSON: ") + e.what());
    }
}

void save_report_json(const AnomalyReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_io("cannot open \"" + path + "\" for writing");
    out << report_to_json(report);
    if (!out) throw_io("write to \"" + path + "\" failed");
}

}  // namespace trca
