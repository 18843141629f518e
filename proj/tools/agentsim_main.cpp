// agentsim command-line interface.
//
// Subcommands:
//   simulate        run a task manifest under a policy and optimization config
//   analyze         merge trace subtask graphs into a DOT file and weights CSV
//   classify        annotate failed traces with failure categories
//   report          cost/turn CSV and failure-breakdown CSV from a trace dir
//   export-fixtures write the built-in fixtures, maps, expectations, and
//                   default configs as YAML/JSON files
//
// Exit codes: 0 success, 1 validation/config error, 2 I/O error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agentsim/bench.hpp"
#include "agentsim/builtin.hpp"
#include "agentsim/config.hpp"

namespace fs = std::filesystem;
using namespace agentsim;

namespace {

constexpr const char* kTraceSuffix = ".trace.jsonl";

std::string path_stem(const std::string& path) {
    std::string stem = fs::path(path).stem().string();
    // Strip a secondary extension (policy.noisy.yaml -> policy.noisy).
    return stem.empty() ? path : stem;
}

std::vector<Trace> load_traces(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec) || ec) throw IoError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (ec) throw IoError("cannot read directory: " + dir);
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > std::strlen(kTraceSuffix) &&
            name.compare(name.size() - std::strlen(kTraceSuffix), std::strlen(kTraceSuffix),
                         kTraceSuffix) == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Trace> traces;
    for (const auto& file : files) {
        Trace trace = parse_trace(read_text_file(file.string()));
        validate_trace(trace);
        traces.push_back(std::move(trace));
    }
    return traces;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir);
}

std::map<std::string, ExpectedExecution> load_expected_file(const std::string& path) {
    const json doc = load_config_file(path);
    std::map<std::string, ExpectedExecution> by_id;
    if (!doc.contains("expected") || !doc["expected"].is_array())
        throw ConfigError(path + ": expected file needs an 'expected' array");
    for (const auto& entry : doc["expected"]) {
        ExpectedExecution exp = ExpectedExecution::from_json(entry);
        by_id[exp.task_id] = std::move(exp);
    }
    return by_id;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string workload;
    std::string tasks_path;
    std::string agent_path;
    std::string opt_path;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int cmd_simulate(const SimulateArgs& args) {
    json manifest = args.tasks_path.empty() ? builtin::default_manifest(args.workload)
                                            : load_config_file(args.tasks_path);
    if (!manifest.contains("workload") || !manifest.contains("tasks"))
        throw ConfigError("manifest needs 'workload' and 'tasks'");
    if (manifest["workload"].get<std::string>() != args.workload)
        throw ConfigError("manifest workload '" + manifest["workload"].get<std::string>() +
                          "' does not match --workload " + args.workload);

    NamedPolicy policy{args.agent_path.empty() ? "oracle" : path_stem(args.agent_path),
                       args.agent_path.empty() ? AgentPolicy::oracle()
                                               : AgentPolicy::load(args.agent_path)};
    NamedConfig config{args.opt_path.empty() ? "baseline" : path_stem(args.opt_path),
                       args.opt_path.empty() ? OptimizationConfig{}
                                             : OptimizationConfig::load(args.opt_path)};

    const RunReport report = run_suite(manifest, {policy}, {config}, {args.seed});
    ensure_dir(args.out_dir);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const RunRow& row = report.rows[i];
        if (!row.error.empty()) {
            std::cerr << "task " << row.task_id << " aborted: " << row.error << "\n";
            continue;
        }
        const Trace& trace = report.traces[i];
        write_text_file((fs::path(args.out_dir) / (trace.task_id + kTraceSuffix)).string(),
                        serialize_trace(trace));
    }
    std::ostringstream runs;
    write_runs_csv(runs, report, PricingTable{});
    write_text_file((fs::path(args.out_dir) / "runs.csv").string(), runs.str());
    std::cout << "wrote " << report.rows.size() << " runs to " << args.out_dir << "\n";
    return 0;
}

// --- analyze ---------------------------------------------------------------

int cmd_analyze(const std::string& traces_dir, const std::string& map_path,
                const std::string& out_dir) {
    const std::vector<Trace> traces = load_traces(traces_dir);
    if (traces.empty()) throw ValidationError("empty corpus", "no traces in " + traces_dir);
    SubtaskMap map = SubtaskMap::from_json(load_config_file(map_path));
    map.validate();
    std::vector<SubtaskGraph> graphs;
    for (const auto& trace : traces)
        graphs.push_back(build_subtask_graph(trace.task_id, map_trace_to_subtasks(trace, map), map));
    const MergedSubtaskGraph merged = merge_graphs(graphs, &map);
    ensure_dir(out_dir);
    write_text_file((fs::path(out_dir) / "merged.dot").string(), export_graph_dot(merged));
    std::ostringstream weights;
    write_weights_csv(weights, merged);
    write_text_file((fs::path(out_dir) / "weights.csv").string(), weights.str());
    std::cout << "merged " << graphs.size() << " task graphs into " << out_dir << "\n";
    return 0;
}

// --- classify --------------------------------------------------------------

int cmd_classify(const std::string& traces_dir, const std::string& expected_path,
                 const std::string& map_path, const std::string& fixture_path,
                 const std::string& out_path) {
    const std::vector<Trace> traces = load_traces(traces_dir);
    const auto expected_by_id = load_expected_file(expected_path);
    SubtaskMap map = SubtaskMap::from_json(load_config_file(map_path));
    map.validate();
    std::optional<ScenarioFixture> fixture;
    if (!fixture_path.empty())
        fixture = ScenarioFixture::from_json(load_config_file(fixture_path));

    std::vector<FailureAnnotation> annotations;
    for (const auto& trace : traces) {
        if (trace.outcome == Outcome::success) continue;
        const auto it = expected_by_id.find(trace.task_id);
        if (it == expected_by_id.end())
            throw ValidationError("missing expectation",
                                  "no expected execution for task " + trace.task_id);
        const auto localized = localize_first_failure(trace, it->second, map);
        annotations.push_back(classify_failure(trace, localized, it->second, map,
                                               fixture ? &*fixture : nullptr));
    }
    std::ostringstream out;
    write_annotations_csv(out, annotations);
    write_text_file(out_path, out.str());
    std::cout << "classified " << annotations.size() << " failed traces into " << out_path
              << "\n";
    return 0;
}

// --- report ----------------------------------------------------------------

int cmd_report(const std::string& traces_dir, const std::string& pricing_path,
               const std::string& annotations_path, const std::string& out_dir) {
    const std::vector<Trace> traces = load_traces(traces_dir);
    PricingTable pricing;
    if (!pricing_path.empty())
        pricing = PricingTable::from_json(load_config_file(pricing_path));

    ensure_dir(out_dir);
    std::ostringstream costs;
    write_cost_turns_csv(costs, traces, pricing);
    write_text_file((fs::path(out_dir) / "cost_turns.csv").string(), costs.str());

    std::vector<FailureAnnotation> annotations;
    if (!annotations_path.empty()) {
        annotations = parse_annotations_csv(read_text_file(annotations_path));
        std::map<std::string, std::string> workload_of;
        for (const auto& trace : traces) workload_of[trace.task_id] = trace.workload;
        for (auto& a : annotations) {
            const auto it = workload_of.find(a.task_id);
            if (it != workload_of.end()) a.workload = it->second;
        }
    }
    std::vector<std::string> trace_workloads;
    for (const auto& trace : traces) trace_workloads.push_back(trace.workload);
    std::ostringstream breakdown;
    write_failure_breakdown_csv(breakdown, {{"count", annotations}}, trace_workloads);
    write_text_file((fs::path(out_dir) / "failure_breakdown.csv").string(), breakdown.str());
    std::cout << "reported " << traces.size() << " traces into " << out_dir << "\n";
    return 0;
}

// --- export-fixtures -------------------------------------------------------

int cmd_export(const std::string& out_dir) {
    ensure_dir(out_dir);
    const fs::path out(out_dir);
    for (const auto& workload : builtin::workloads()) {
        const ScenarioFixture& fixture = builtin::fixture_for(workload);
        const SubtaskMap& map = builtin::subtask_map_for(workload);
        write_text_file((out / (workload + ".fixture.yaml")).string(),
                        json_to_yaml_string(fixture.to_json()));
        write_text_file((out / (workload + ".subtasks.yaml")).string(),
                        json_to_yaml_string(map.to_json()));
        json expected = json::array();
        for (const auto& task : builtin::tasks_for(workload))
            expected.push_back(task.expected.to_json());
        write_text_file((out / (workload + ".expected.yaml")).string(),
                        json_to_yaml_string(json{{"workload", workload}, {"expected", expected}}));
        write_text_file((out / (workload + ".manifest.json")).string(),
                        builtin::default_manifest(workload).dump(2) + "\n");
        json tools = json::array();
        const auto world = make_world(fixture);
        for (const auto& [name, spec] : world->registry().all()) {
            (void)name;
            tools.push_back(spec.to_json());
        }
        write_text_file((out / (workload + ".tools.json")).string(), tools.dump(2) + "\n");
    }
    write_text_file((out / "optimizations.yaml").string(),
                    json_to_yaml_string(builtin::default_optimizations().to_json()));
    write_text_file((out / "optimizations_baseline.yaml").string(),
                    json_to_yaml_string(builtin::baseline_optimizations().to_json()));
    write_text_file((out / "policy_oracle.yaml").string(),
                    json_to_yaml_string(AgentPolicy::oracle().to_json()));
    write_text_file((out / "policy_noisy.yaml").string(),
                    json_to_yaml_string(AgentPolicy::noisy_default().to_json()));
    // Prices are run configuration; the shipped table is zeroed on purpose.
    write_text_file((out / "pricing.yaml").string(),
                    json_to_yaml_string(PricingTable{}.to_json()));
    std::cout << "exported fixtures to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agentsim: simulated tool environments, optimization middleware, "
                 "trace analysis, and failure classification"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run a task manifest");
    simulate->add_option("--workload", sim.workload, "workload name")->required();
    simulate->add_option("--tasks", sim.tasks_path, "manifest JSON file (default: built-in)");
    simulate->add_option("--agent", sim.agent_path, "agent policy file (default: oracle)");
    simulate->add_option("--opt", sim.opt_path, "optimization config file (default: all off)");
    simulate->add_option("--seed", sim.seed, "RNG seed")->default_val(0);
    simulate->add_option("--out", sim.out_dir, "output directory")->required();

    std::string an_traces, an_map, an_out = ".";
    auto* analyze = app.add_subcommand("analyze", "merge trace subtask graphs");
    analyze->add_option("--traces", an_traces, "trace directory")->required();
    analyze->add_option("--subtask-map", an_map, "subtask map file")->required();
    analyze->add_option("--out", an_out, "output directory");

    std::string cl_traces, cl_expected, cl_map, cl_fixture, cl_out = "annotations.csv";
    auto* classify = app.add_subcommand("classify", "annotate failed traces");
    classify->add_option("--traces", cl_traces, "trace directory")->required();
    classify->add_option("--expected", cl_expected, "expected executions file")->required();
    classify->add_option("--subtask-map", cl_map, "subtask map file")->required();
    classify->add_option("--fixture", cl_fixture, "scenario fixture file (enables replay checks)");
    classify->add_option("--out", cl_out, "output CSV file");

    std::string rp_traces, rp_pricing, rp_annotations, rp_out = ".";
    auto* report = app.add_subcommand("report", "cost/turn and failure-breakdown CSVs");
    report->add_option("--traces", rp_traces, "trace directory")->required();
    report->add_option("--pricing", rp_pricing, "pricing file (default: zeroed)");
    report->add_option("--annotations", rp_annotations, "annotations CSV from classify");
    report->add_option("--out", rp_out, "output directory");

    std::string ex_out = "fixtures";
    auto* exporter = app.add_subcommand("export-fixtures", "write built-in fixtures and configs");
    exporter->add_option("--out", ex_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // --help prints usage and exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad usage is a validation failure
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (analyze->parsed()) return cmd_analyze(an_traces, an_map, an_out);
        if (classify->parsed())
            return cmd_classify(cl_traces, cl_expected, cl_map, cl_fixture, cl_out);
        if (report->parsed()) return cmd_report(rp_traces, rp_pricing, rp_annotations, rp_out);
        if (exporter->parsed()) return cmd_export(ex_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
