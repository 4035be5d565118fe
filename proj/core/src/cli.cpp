#include "stlmine/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detail_util.hpp"
#include "stlmine/clustering.hpp"
#include "stlmine/learning.hpp"
#include "stlmine/pipeline.hpp"
#include "stlmine/projection.hpp"
#include "stlmine/semantics.hpp"
#include "stlmine/trace.hpp"

namespace fs = std::filesystem;

namespace stlmine::cli {

using detail::format_double;
using detail::parse_double;
using detail::split;

namespace {

std::map<std::string, double> parse_kv(const std::vector<std::string>& kvs) {
    std::map<std::string, double> out;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        double v = 0;
        if (eq == std::string::npos || !parse_double(kv.substr(eq + 1), v))
            throw ContractError("expected name=number, got '" + kv + "'");
        out[kv.substr(0, eq)] = v;
    }
    return out;
}

std::vector<std::string> parse_list(const std::string& csv) {
    if (csv.empty()) return {};
    return split(csv, ',');
}

// Dummy-polarity space for commands that only need column names (clustering
// is polarity-blind; learn/reps take a template for real polarities).
ParameterSpace names_only_space(const std::vector<std::string>& names) {
    std::vector<ParameterDecl> decls;
    for (const auto& n : names) decls.push_back({n, ParamKind::Value, +1, 0.0, 1.0, 0.5});
    return ParameterSpace(std::move(decls));
}

void print_partition(std::ostream& out, const std::string& what, const Labeling& lb) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& [id, ls] : lb.labels)
        for (const auto& l : ls) groups[l].push_back(id);
    out << what << ":\n";
    for (const auto& [label, ids] : groups) {
        out << "  " << label << ":";
        for (const auto& id : ids) out << ' ' << id;
        out << '\n';
    }
}

struct CommonFlags {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;
};

// ---- subcommand bodies -------------------------------------------------------

int cmd_synth(const std::string& family, int count, const CommonFlags& common,
              const std::vector<std::string>& params, std::ostream& out) {
    TraceSet ts = synth_traces(family, parse_kv(params), count, common.seed);
    fs::create_directories(common.out_dir);
    save_traces_csv(ts, common.out_dir);
    out << "wrote " << ts.size() << " traces to " << common.out_dir << '\n';
    return 0;
}

int cmd_project(const std::vector<std::string>& traces, const std::string& template_path,
                const std::string& out_path, const std::string& channels,
                const std::vector<std::string>& preprocess_steps, const CommonFlags& common,
                std::ostream& out, std::ostream& err) {
    PSTLTemplate tpl = load_template(template_path);
    TraceSet ts = load_traces(traces, parse_list(channels));
    std::vector<std::string> warnings;
    for (const auto& s : preprocess_steps)
        ts = preprocess(ts, parse_preprocess_step(s), &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';

    ProjectionTable table = project_all(ts, tpl, common.threads);
    save_projection_csv(table, ParameterSpace(tpl), out_path);
    out << "projected " << table.ids.size() - table.errors.size() << "/" << table.ids.size()
        << " traces to " << out_path << '\n';
    for (const auto& [id, msg] : table.errors) err << "error: trace '" << id << "': " << msg << '\n';
    return table.errors.empty() ? 0 : 1;
}

int cmd_validate(const std::string& template_path, const std::vector<std::string>& traces,
                 const std::string& channels, int samples, const CommonFlags& common,
                 std::ostream& out) {
    PSTLTemplate tpl = load_template(template_path);
    out << "template '" << tpl.name << "': " << tpl.params.size() << " parameter(s), formula "
        << pretty_print(tpl.formula) << '\n';
    if (traces.empty()) {
        out << "structural checks passed (no traces given, polarity not exercised)\n";
        return 0;
    }
    TraceSet ts = load_traces(traces, parse_list(channels));
    PolarityReport report = validate_polarity(tpl, ts, samples, common.seed);
    out << report.summary() << '\n';
    ParameterSpace ps(tpl);
    for (const auto& cx : report.counterexamples) {
        out << "counterexample on '" << cx.trace_id << "':";
        for (std::size_t i = 0; i < ps.size(); ++i)
            out << ' ' << ps.decl(i).name << ' ' << format_double(cx.nu[i]) << "->"
                << format_double(cx.nu_prime[i]);
        out << '\n';
    }
    return report.pass ? 0 : 1;
}

int cmd_cluster(const std::string& projection_path, const std::string& algorithm, int k,
                const std::string& out_path, const CommonFlags& common, std::ostream& out) {
    LoadedProjection lp = load_projection_csv(projection_path);
    ParameterSpace ps = names_only_space(lp.param_names);
    ProjectionMatrix pm = to_matrix(lp.table, ps);
    if (pm.rows.empty()) throw ContractError("no non-sentinel projections to cluster");
    auto [pm_norm, tf] = normalize(pm);

    Labeling labeling;
    if (algorithm == "kmeans") {
        auto [model, lb] = fit_kmeans(pm_norm, k, common.seed);
        out << "kmeans inertia " << format_double(model.inertia) << '\n';
        labeling = std::move(lb);
    } else if (algorithm == "gmm") {
        auto [model, lb] = fit_gmm(pm_norm, k, common.seed);
        out << "gmm log-likelihood " << format_double(model.loglik_history.back()) << '\n';
        labeling = std::move(lb);
    } else {
        throw ContractError("algorithm must be gmm or kmeans");
    }
    save_labeling_csv(labeling, out_path);
    out << "wrote labels to " << out_path << '\n';
    return 0;
}

int cmd_learn(const std::string& projection_path, const std::string& labels_path,
              const std::string& template_path, double eps,
              const std::vector<std::string>& eps_params, const std::string& open_dims,
              const std::string& corners, const std::string& corner_bits,
              const std::string& out_path, std::ostream& out) {
    PSTLTemplate tpl = load_template(template_path);
    LoadedProjection lp = load_projection_csv(projection_path);
    Labeling labeling = load_labeling_csv(labels_path);

    LearningSpec spec;
    spec.eps = eps;
    spec.eps_per_param = parse_kv(eps_params);
    for (const auto& d : parse_list(open_dims)) spec.open_dims.insert(d);
    spec.corners = corners;
    spec.corner_bits = parse_list(corner_bits);

    auto clusters = learn_clusters(lp.table, labeling, tpl, spec);
    save_clusters_json(clusters, tpl, out_path);
    for (const auto& lc : clusters)
        out << "cluster " << lc.label << ": size " << lc.size << ", psi "
            << pretty_print(lc.psi.psi) << '\n';
    out << "wrote " << clusters.size() << " clusters to " << out_path << '\n';
    return 0;
}

int cmd_reps(const std::string& projection_path, const std::string& labels_path,
             const std::string& template_path, const std::string& only_label,
             const std::string& out_path, std::ostream& out) {
    PSTLTemplate tpl = load_template(template_path);
    LoadedProjection lp = load_projection_csv(projection_path);
    Labeling labeling = load_labeling_csv(labels_path);
    ProjectionMatrix pm = to_matrix(lp.table, ParameterSpace(tpl));
    if (pm.rows.empty()) throw ContractError("no non-sentinel projections");
    auto [pm_norm, tf] = normalize(pm);

    std::set<std::string> labels;
    if (!only_label.empty()) {
        labels.insert(only_label);
    } else {
        for (const auto& l : labeling.label_set())
            if (l != kTopLabel && l != kBotLabel) labels.insert(l);
    }

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw ContractError("cannot write '" + out_path + "'");
        file << "label,role,trace_id\n";
    }
    for (const auto& label : labels) {
        Representatives reps = representatives(pm_norm, labeling, label);
        out << label << ": strong " << reps.strong << ", weak " << reps.weak << ", center "
            << reps.center << '\n';
        if (file) {
            file << label << ",strong," << reps.strong << '\n';
            file << label << ",weak," << reps.weak << '\n';
            file << label << ",center," << reps.center << '\n';
        }
    }
    return 0;
}

int cmd_dtw_compare(const std::vector<std::string>& traces, const std::string& template_path,
                    const std::string& channel, int k, const std::string& channels,
                    const CommonFlags& common, std::ostream& out) {
    PSTLTemplate tpl = load_template(template_path);
    TraceSet ts = load_traces(traces, parse_list(channels));
    if (k < 1 || static_cast<std::size_t>(k) > ts.size())
        throw ContractError("need 1 <= k <= number of traces");

    std::string ch = channel.empty() ? ts.channels.front() : channel;
    DistanceMatrix dtw = dtw_matrix(ts, ch);
    auto [dtw_model, dtw_labels] = k_medoids(dtw, k, common.seed);

    ProjectionTable table = project_all(ts, tpl, common.threads);
    ProjectionMatrix pm = to_matrix(table, ParameterSpace(tpl));
    if (static_cast<std::size_t>(k) > pm.n_rows())
        throw ContractError("k exceeds the non-sentinel projection count");
    auto [pm_norm, tf] = normalize(pm);
    auto [proj_model, proj_labels] = fit_kmeans(pm_norm, k, common.seed);

    fs::create_directories(common.out_dir);
    fs::path dir(common.out_dir);
    save_distance_csv(dtw, (dir / "dtw_distance.csv").string());
    save_labeling_csv(dtw_labels, (dir / "dtw_labels.csv").string());
    save_projection_csv(table, ParameterSpace(tpl), (dir / "projection.csv").string());
    save_distance_csv(euclidean_matrix(pm_norm), (dir / "param_distance.csv").string());
    save_labeling_csv(proj_labels, (dir / "projection_labels.csv").string());

    print_partition(out, "dtw/k-medoids grouping (channel " + ch + ")", dtw_labels);
    print_partition(out, "projection/k-means grouping (template " + tpl.name + ")", proj_labels);
    out << "wrote comparison artifacts to " << common.out_dir << '\n';
    return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& out_dir_override,
                 int threads_override, std::ostream& out) {
    PipelineConfig cfg = load_config(config_path);
    if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
    if (threads_override > 0) cfg.threads = threads_override;
    run_pipeline(cfg, out);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"monotonic PSTL trace projection, clustering and formula learning"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonFlags common;
    app.add_option("--seed", common.seed, "random seed");
    app.add_option("--out-dir", common.out_dir, "output directory");
    app.add_option("--threads", common.threads, "projection worker threads");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic trace family as CSVs");
    std::string family;
    int count = 10;
    std::vector<std::string> synth_params;
    synth->add_option("--family", family, "overshoot|step|spike|lane_dwell")->required();
    synth->add_option("--count", count, "number of traces");
    synth->add_option("--param", synth_params, "family parameter name=value");

    // project
    auto* project = app.add_subcommand("project", "project traces onto a template's parameters");
    std::vector<std::string> trace_paths;
    std::string template_path, out_path = "projection.csv", channels;
    std::vector<std::string> preprocess_steps;
    project->add_option("traces", trace_paths, "trace CSV files")->required();
    project->add_option("--template", template_path, "template file")->required();
    project->add_option("--out", out_path, "output CSV");
    project->add_option("--channels", channels, "comma-separated channel schema");
    project->add_option("--preprocess", preprocess_steps,
                        "step, e.g. sliding_window:1:0.5 or derivative:x:2:d2x");

    // validate-template
    auto* validate = app.add_subcommand("validate-template", "structure + empirical polarity check");
    int samples = 40;
    validate->add_option("--template", template_path, "template file")->required();
    validate->add_option("traces", trace_paths, "trace CSV files (optional)");
    validate->add_option("--channels", channels, "comma-separated channel schema");
    validate->add_option("--samples", samples, "random comparable pairs to draw");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "label a projection table");
    std::string projection_path, labels_path, algorithm = "gmm";
    std::string cluster_out = "labels.csv", learn_out = "clusters.json";
    int k = 1;
    cluster->add_option("--projection", projection_path, "projection CSV")->required();
    cluster->add_option("--algorithm", algorithm, "gmm|kmeans");
    cluster->add_option("--k", k, "number of clusters")->required();
    cluster->add_option("--out", cluster_out, "labeling CSV");

    // learn
    auto* learn = app.add_subcommand("learn", "enclose labeled projections and synthesize formulas");
    double eps = 0.01;
    std::vector<std::string> eps_params;
    std::string open_dims, corners = "essential", corner_bits;
    learn->add_option("--projection", projection_path, "projection CSV")->required();
    learn->add_option("--labels", labels_path, "labeling CSV")->required();
    learn->add_option("--template", template_path, "template file")->required();
    learn->add_option("--eps", eps, "hyperbox relaxation");
    learn->add_option("--eps-param", eps_params, "per-parameter eps name=value");
    learn->add_option("--open-dims", open_dims, "comma-separated unbounded dimensions");
    learn->add_option("--corners", corners, "essential|none|explicit");
    learn->add_option("--corner-bits", corner_bits, "comma-separated bit-vectors for explicit");
    learn->add_option("--out", learn_out, "clusters JSON");

    // reps
    auto* reps = app.add_subcommand("reps", "extremal and central representatives per cluster");
    std::string only_label, reps_out;
    reps->add_option("--projection", projection_path, "projection CSV")->required();
    reps->add_option("--labels", labels_path, "labeling CSV")->required();
    reps->add_option("--template", template_path, "template file")->required();
    reps->add_option("--label", only_label, "single label to report");
    reps->add_option("--out", reps_out, "representatives CSV");

    // dtw-compare
    auto* dtw = app.add_subcommand("dtw-compare", "contrast DTW/k-medoids with projection/k-means");
    std::string dtw_channel;
    dtw->add_option("traces", trace_paths, "trace CSV files")->required();
    dtw->add_option("--template", template_path, "template file")->required();
    dtw->add_option("--channel", dtw_channel, "channel for DTW (default: first)");
    dtw->add_option("--k", k, "number of clusters")->required();
    dtw->add_option("--channels", channels, "comma-separated channel schema");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run the full config-driven pipeline");
    std::string config_path, pipeline_out_dir;
    int pipeline_threads = 0;
    pipeline->add_option("--config", config_path, "pipeline JSON config")->required();
    pipeline->add_option("--out-dir", pipeline_out_dir, "override output directory");
    pipeline->add_option("--threads", pipeline_threads, "override worker threads");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (synth->parsed()) return cmd_synth(family, count, common, synth_params, out);
        if (project->parsed())
            return cmd_project(trace_paths, template_path, out_path, channels, preprocess_steps,
                               common, out, err);
        if (validate->parsed())
            return cmd_validate(template_path, trace_paths, channels, samples, common, out);
        if (cluster->parsed())
            return cmd_cluster(projection_path, algorithm, k, cluster_out, common, out);
        if (learn->parsed())
            return cmd_learn(projection_path, labels_path, template_path, eps, eps_params,
                             open_dims, corners, corner_bits, learn_out, out);
        if (reps->parsed())
            return cmd_reps(projection_path, labels_path, template_path, only_label, reps_out, out);
        if (dtw->parsed())
            return cmd_dtw_compare(trace_paths, template_path, dtw_channel, k, channels, common,
                                   out);
        if (pipeline->parsed())
            return cmd_pipeline(config_path, pipeline_out_dir, pipeline_threads, out);
        err << "error: no subcommand given\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace stlmine::cli
