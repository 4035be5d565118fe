#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stlmine/clustering.hpp"
#include "stlmine/learning.hpp"
#include "stlmine/trace.hpp"

namespace stlmine {

// One trace source: CSV paths/globs, or a synthetic family.
struct TraceSource {
    enum class Type { Csv, Synth };
    Type type = Type::Csv;

    std::vector<std::string> paths;  // csv (globs on the filename allowed)

    std::string family;  // synth
    std::map<std::string, double> params;
    int count = 0;
    std::uint64_t seed = 0;
    std::string id_prefix;
};

struct ClusteringSpec {
    std::string algorithm = "gmm";  // gmm | kmeans
    int k = 1;
    std::uint64_t seed = 0;
    int max_iter = 200;
    double tol = 1e-8;
};

struct LearningSpec {
    double eps = 0.01;                          // default per-parameter relaxation
    std::map<std::string, double> eps_per_param;
    std::set<std::string> open_dims;
    std::string corners = "essential";          // essential | none | explicit
    std::vector<std::string> corner_bits;       // used when corners == "explicit"
};

struct PipelineConfig {
    int schema_version = 1;
    std::vector<std::string> channels;  // empty: derive from sources
    std::vector<TraceSource> sources;
    std::vector<PreprocessStep> preprocess;
    std::string template_path;
    ClusteringSpec clustering;
    LearningSpec learning;
    std::string out_dir = "out";
    int threads = 1;
};

// Parses and validates the JSON config; relative input paths resolve
// against the config file's directory.
PipelineConfig load_config(const std::string& path);

struct LearnedCluster {
    std::string label;
    std::size_t size = 0;
    Hyperbox box;
    std::set<std::string> open_dims;
    std::set<std::string> suggested_open_dims;
    CornerSubset corners;
    SynthesizedFormula psi;
    Representatives reps;
};

struct PipelineResult {
    ProjectionTable projections;
    Labeling labeling;
    std::vector<LearnedCluster> clusters;
    std::vector<std::string> written_files;
};

TraceSet load_sources(const std::vector<TraceSource>& sources,
                      const std::vector<std::string>& channels);

// preprocess -> project -> normalize -> fit -> box + formula + representatives
// per label; writes projection.csv, labels.csv, clusters.json and the
// plot-data CSVs into out_dir. A stage failure removes partial outputs and
// rethrows with the stage name.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::ostream& log);

// Builds the per-label learned clusters from an existing projection +
// labeling (the `learn` subcommand shares this with the pipeline).
std::vector<LearnedCluster> learn_clusters(const ProjectionTable& table, const Labeling& labeling,
                                           const PSTLTemplate& tpl, const LearningSpec& spec);

void save_clusters_json(const std::vector<LearnedCluster>& clusters, const PSTLTemplate& tpl,
                        const std::string& path);

}  // namespace stlmine
