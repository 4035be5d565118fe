#include "stlmine/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "detail_util.hpp"
#include "stlmine/semantics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stlmine {

using detail::format_double;
using detail::glob_match;

// ---- config -------------------------------------------------------------------

static std::string resolve_against(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return p;
    return (base / path).lexically_normal().string();
}

static PreprocessStep step_from_json(const json& j) {
    std::string op = j.at("op").get<std::string>();
    if (op == "sliding_window")
        return SlidingWindow{j.at("size").get<double>(), j.at("offset").get<double>()};
    if (op == "derivative")
        return Derivative{j.at("channel").get<std::string>(), j.at("order").get<int>(),
                          j.at("new_channel").get<std::string>()};
    if (op == "rolling_median")
        return RollingMedian{j.at("channel").get<std::string>(), j.at("window").get<double>(),
                             j.at("new_channel").get<std::string>()};
    throw ContractError("config: unknown preprocess op '" + op + "'");
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }

    fs::path base = fs::path(path).parent_path();
    PipelineConfig cfg;
    try {
        cfg.schema_version = j.at("schema_version").get<int>();
        if (cfg.schema_version != 1)
            throw ContractError("config: unsupported schema_version " +
                                std::to_string(cfg.schema_version));

        const json& traces = j.at("traces");
        if (traces.contains("channels"))
            cfg.channels = traces.at("channels").get<std::vector<std::string>>();
        for (const json& src : traces.at("sources")) {
            TraceSource s;
            std::string type = src.at("type").get<std::string>();
            if (type == "csv") {
                s.type = TraceSource::Type::Csv;
                for (const auto& p : src.at("paths").get<std::vector<std::string>>())
                    s.paths.push_back(resolve_against(base, p));
            } else if (type == "synth") {
                s.type = TraceSource::Type::Synth;
                s.family = src.at("family").get<std::string>();
                s.count = src.at("count").get<int>();
                s.seed = src.value("seed", 0ull);
                if (src.contains("params"))
                    s.params = src.at("params").get<std::map<std::string, double>>();
                s.id_prefix = src.value("id_prefix", std::string());
            } else {
                throw ContractError("config: unknown source type '" + type + "'");
            }
            cfg.sources.push_back(std::move(s));
        }

        if (j.contains("preprocess"))
            for (const json& st : j.at("preprocess")) cfg.preprocess.push_back(step_from_json(st));

        cfg.template_path = resolve_against(base, j.at("template").get<std::string>());

        if (j.contains("clustering")) {
            const json& c = j.at("clustering");
            cfg.clustering.algorithm = c.value("algorithm", std::string("gmm"));
            cfg.clustering.k = c.value("k", 1);
            cfg.clustering.seed = c.value("seed", 0ull);
            cfg.clustering.max_iter = c.value("max_iter", 200);
            cfg.clustering.tol = c.value("tol", 1e-8);
        }
        if (cfg.clustering.algorithm != "gmm" && cfg.clustering.algorithm != "kmeans")
            throw ContractError("config: clustering.algorithm must be gmm or kmeans");
        if (cfg.clustering.k < 1) throw ContractError("config: clustering.k must be >= 1");

        if (j.contains("learning")) {
            const json& l = j.at("learning");
            cfg.learning.eps = l.value("eps", 0.01);
            if (l.contains("eps_per_param"))
                cfg.learning.eps_per_param =
                    l.at("eps_per_param").get<std::map<std::string, double>>();
            if (l.contains("open_dims"))
                for (const auto& d : l.at("open_dims").get<std::vector<std::string>>())
                    cfg.learning.open_dims.insert(d);
            cfg.learning.corners = l.value("corners", std::string("essential"));
            if (l.contains("corner_bits"))
                cfg.learning.corner_bits = l.at("corner_bits").get<std::vector<std::string>>();
        }
        if (!(cfg.learning.eps > 0)) throw ContractError("config: learning.eps must be > 0");

        cfg.out_dir = j.value("out_dir", std::string("out"));
        cfg.threads = j.value("threads", 1);
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    return cfg;
}

// ---- trace sources ---------------------------------------------------------------

static std::vector<std::string> expand_glob(const std::string& pattern) {
    fs::path p(pattern);
    std::string filename = p.filename().string();
    if (filename.find('*') == std::string::npos && filename.find('?') == std::string::npos)
        return {pattern};
    fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    std::vector<std::string> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && glob_match(filename, entry.path().filename().string()))
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

TraceSet load_sources(const std::vector<TraceSource>& sources,
                      const std::vector<std::string>& channels) {
    TraceSet merged;
    merged.channels = channels;
    for (const auto& src : sources) {
        TraceSet part;
        if (src.type == TraceSource::Type::Csv) {
            std::vector<std::string> paths;
            for (const auto& p : src.paths) {
                auto got = expand_glob(p);
                if (got.empty()) throw ContractError("no trace files match '" + p + "'");
                paths.insert(paths.end(), got.begin(), got.end());
            }
            part = load_traces(paths, channels);
        } else {
            part = synth_traces(src.family, src.params, src.count, src.seed, src.id_prefix);
        }
        for (auto& [id, tr] : part.traces) merged.insert(id, std::move(tr));
    }
    if (merged.traces.empty()) throw ContractError("no traces loaded");
    merged.validate();
    return merged;
}

// ---- learning over a labeling ------------------------------------------------------

std::vector<LearnedCluster> learn_clusters(const ProjectionTable& table, const Labeling& labeling,
                                           const PSTLTemplate& tpl, const LearningSpec& spec) {
    ParameterSpace ps(tpl);
    ProjectionMatrix pm = to_matrix(table, ps);
    if (pm.rows.empty()) throw ContractError("no non-sentinel projections to learn from");
    auto [pm_norm, tf] = normalize(pm);

    std::vector<double> eps(ps.size(), spec.eps);
    for (const auto& [name, e] : spec.eps_per_param) {
        int i = ps.index_of(name);
        if (i < 0) throw ContractError("eps_per_param: unknown parameter '" + name + "'");
        if (!(e > 0)) throw ContractError("eps_per_param: eps must be > 0");
        eps[i] = e;
    }

    std::map<std::string, std::vector<Valuation>> points_by_label;
    for (std::size_t r = 0; r < pm.ids.size(); ++r) {
        auto it = labeling.labels.find(pm.ids[r]);
        if (it == labeling.labels.end()) continue;
        for (const auto& l : it->second) {
            if (l == kTopLabel || l == kBotLabel) continue;
            points_by_label[l].push_back(Valuation::point(pm.rows[r]));
        }
    }

    std::vector<LearnedCluster> out;
    for (const auto& [label, points] : points_by_label) {
        LearnedCluster lc;
        lc.label = label;
        lc.size = points.size();
        lc.open_dims = spec.open_dims;
        lc.box = bounding_hyperbox(points, eps, spec.open_dims, ps);
        if (spec.corners == "essential")
            lc.corners = CornerSubset::essential(ps.size());
        else if (spec.corners == "none")
            lc.corners = CornerSubset::none(ps.size());
        else if (spec.corners == "explicit")
            lc.corners = CornerSubset::from_strings(spec.corner_bits);
        else
            throw ContractError("corners mode must be essential, none or explicit");
        lc.psi = synthesize_formula(tpl, lc.box, lc.corners);
        lc.reps = representatives(pm_norm, labeling, label);
        lc.suggested_open_dims = suggest_open_dims(pm, labeling, label);
        out.push_back(std::move(lc));
    }
    return out;
}

void save_clusters_json(const std::vector<LearnedCluster>& clusters, const PSTLTemplate& tpl,
                        const std::string& path) {
    ParameterSpace ps(tpl);
    json root;
    root["schema_version"] = 1;
    root["template"] = tpl.name;
    json names = json::array();
    for (const auto& d : tpl.params) names.push_back(d.name);
    root["params"] = names;

    json arr = json::array();
    for (const auto& lc : clusters) {
        json c;
        c["label"] = lc.label;
        c["size"] = lc.size;
        json nu_s, nu_w;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            nu_s[ps.decl(i).name] = lc.box.nu_s[i];
            nu_w[ps.decl(i).name] = lc.box.nu_w[i];
        }
        c["nu_s"] = nu_s;
        c["nu_w"] = nu_w;
        c["open_dims"] = lc.open_dims;
        c["suggested_open_dims"] = lc.suggested_open_dims;
        c["corners"] = lc.corners.to_strings();
        c["psi"] = pretty_print(lc.psi.psi);
        c["psi_size"] = lc.psi.size;
        c["representatives"] = {
            {"strong", lc.reps.strong}, {"weak", lc.reps.weak}, {"center", lc.reps.center}};
        arr.push_back(std::move(c));
    }
    root["clusters"] = std::move(arr);

    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << root.dump(2) << '\n';
}

// ---- pipeline -----------------------------------------------------------------

namespace {

class OutputTracker {
public:
    explicit OutputTracker(std::vector<std::string>& sink) : sink_(sink) {}

    std::string track(const std::string& path) {
        sink_.push_back(path);
        return path;
    }

    void discard_all() {
        for (const auto& p : sink_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        sink_.clear();
    }

private:
    std::vector<std::string>& sink_;
};

void write_scatter_csv(const ProjectionTable& table, const Labeling& labeling,
                       const ParameterSpace& ps, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "trace_id";
    for (const auto& d : ps.decls()) out << ',' << d.name;
    out << ",label\n";
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        const Valuation& v = table.rows[r].value;
        if (v.is_sentinel()) continue;
        auto it = labeling.labels.find(table.ids[r]);
        if (it == labeling.labels.end()) continue;
        for (const auto& l : it->second) {
            out << table.ids[r];
            for (std::size_t i = 0; i < ps.size(); ++i) out << ',' << format_double(v[i]);
            out << ',' << l << '\n';
        }
    }
}

void write_reps_csv(const std::vector<LearnedCluster>& clusters, const TraceSet& ts,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "label,role,trace_id,time";
    for (const auto& ch : ts.channels) out << ',' << ch;
    out << '\n';
    for (const auto& lc : clusters) {
        const std::pair<const char*, const std::string*> roles[] = {
            {"strong", &lc.reps.strong}, {"weak", &lc.reps.weak}, {"center", &lc.reps.center}};
        for (const auto& [role, id] : roles) {
            auto it = ts.traces.find(*id);
            if (it == ts.traces.end()) continue;
            const TimedTrace& tr = it->second;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                out << lc.label << ',' << role << ',' << *id << ',' << format_double(tr.times[i]);
                for (double v : tr.values[i]) out << ',' << format_double(v);
                out << '\n';
            }
        }
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
    PipelineResult result;
    OutputTracker outputs(result.written_files);
    std::string stage = "config";
    try {
        stage = "template";
        PSTLTemplate tpl = load_template(cfg.template_path);
        ParameterSpace ps(tpl);

        stage = "load-traces";
        TraceSet ts = load_sources(cfg.sources, cfg.channels);
        log << "loaded " << ts.size() << " traces\n";

        stage = "preprocess";
        std::vector<std::string> warnings;
        ts = preprocess(ts, cfg.preprocess, &warnings);
        for (const auto& w : warnings) log << "warning: " << w << '\n';
        if (!cfg.preprocess.empty()) log << "preprocessed into " << ts.size() << " traces\n";

        stage = "project";
        result.projections = project_all(ts, tpl, cfg.threads);
        for (const auto& [id, msg] : result.projections.errors)
            log << "projection error for '" << id << "': " << msg << '\n';
        if (result.projections.errors.size() == result.projections.ids.size())
            throw ContractError("every projection failed");

        stage = "cluster";
        ProjectionMatrix pm = to_matrix(result.projections, ps);
        if (pm.rows.empty()) throw ContractError("all projections are sentinels");
        int k = cfg.clustering.k;
        if (static_cast<std::size_t>(k) > pm.n_rows())
            throw ContractError("clustering.k exceeds the non-sentinel row count");
        auto [pm_norm, tf] = normalize(pm);
        ClusterModel model;
        if (cfg.clustering.algorithm == "kmeans") {
            auto fitted = fit_kmeans(pm_norm, k, cfg.clustering.seed, cfg.clustering.max_iter,
                                     cfg.clustering.tol);
            model = std::move(fitted.first);
            result.labeling = std::move(fitted.second);
        } else {
            auto fitted = fit_gmm(pm_norm, k, cfg.clustering.seed, cfg.clustering.max_iter,
                                  cfg.clustering.tol);
            model = std::move(fitted.first);
            result.labeling = std::move(fitted.second);
        }
        model.transform = tf;
        log << "clustered " << pm.n_rows() << " projections into " << k << " groups ("
            << pm.sentinels.size() << " sentinel)\n";

        stage = "learn";
        result.clusters = learn_clusters(result.projections, result.labeling, tpl, cfg.learning);
        for (const auto& lc : result.clusters)
            log << "cluster " << lc.label << ": size " << lc.size << ", psi "
                << pretty_print(lc.psi.psi) << '\n';

        stage = "write";
        fs::create_directories(cfg.out_dir);
        fs::path dir(cfg.out_dir);
        save_projection_csv(result.projections, ps, outputs.track((dir / "projection.csv").string()));
        save_labeling_csv(result.labeling, outputs.track((dir / "labels.csv").string()));
        save_clusters_json(result.clusters, tpl, outputs.track((dir / "clusters.json").string()));
        write_scatter_csv(result.projections, result.labeling, ps,
                          outputs.track((dir / "plot_scatter.csv").string()));
        write_reps_csv(result.clusters, ts, outputs.track((dir / "plot_representatives.csv").string()));
        log << "wrote " << result.written_files.size() << " files to " << cfg.out_dir << '\n';
    } catch (const std::exception& e) {
        outputs.discard_all();
        throw ContractError("pipeline stage '" + stage + "': " + e.what());
    }
    return result;
}

}  // namespace stlmine
