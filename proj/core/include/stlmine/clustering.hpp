#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stlmine/projection.hpp"
#include "stlmine/trace.hpp"

namespace stlmine {

// Reserved labels for traces whose projection is a sentinel; they never
// enter fitting.
inline constexpr const char* kTopLabel = "__top__";
inline constexpr const char* kBotLabel = "__bot__";

// Numeric feature matrix of non-sentinel projections. Sentinel rows are
// carried alongside so labelings can cover the whole trace set.
struct ProjectionMatrix {
    std::vector<std::string> ids;
    std::vector<std::string> columns;
    std::vector<int> column_polarity;  // +1 / -1 per column
    std::vector<std::vector<double>> rows;

    struct SentinelRow {
        std::string id;
        bool top = true;
    };
    std::vector<SentinelRow> sentinels;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return columns.size(); }
};

ProjectionMatrix to_matrix(const ProjectionTable& table, const ParameterSpace& ps);

// Per-column min-max transform used for normalization; invertible.
struct MinMaxTransform {
    std::vector<double> col_min, col_max;

    std::vector<double> apply(const std::vector<double>& row) const;
    std::vector<double> invert(const std::vector<double>& row) const;
};

// Scales every column into [0,1]; constant columns map to 0.5.
std::pair<ProjectionMatrix, MinMaxTransform> normalize(const ProjectionMatrix& pm);

struct ClusterModel {
    enum class Kind { KMeans, Gmm, KMedoids };
    Kind kind = Kind::KMeans;
    int k = 1;
    std::uint64_t seed = 0;

    std::vector<std::vector<double>> centroids;  // kmeans
    std::vector<double> weights;                 // gmm
    std::vector<std::vector<double>> means;      // gmm
    std::vector<std::vector<double>> variances;  // gmm (diagonal)
    std::vector<int> medoids;                    // kmedoids (row indices)

    MinMaxTransform transform;            // normalization in effect when fit
    double inertia = 0.0;                 // kmeans / kmedoids cost
    std::vector<double> loglik_history;   // gmm EM trajectory
};

// Multi-label labeling of trace ids. Cluster components are labeled
// "0".."k-1"; sentinel rows get the reserved labels.
struct Labeling {
    std::map<std::string, std::set<std::string>> labels;

    std::set<std::string> label_set() const;
    std::vector<std::string> ids_with(const std::string& label) const;
};

// Lloyd iteration with k-means++ seeding; deterministic for a seed; each row
// gets the nearest centroid (ties -> lowest component index).
std::pair<ClusterModel, Labeling> fit_kmeans(const ProjectionMatrix& pm, int k,
                                             std::uint64_t seed, int max_iter = 100,
                                             double tol = 1e-9);

// Diagonal-covariance EM initialized from fit_kmeans; variances floored at
// 1e-6; stops when the log-likelihood gain drops below tol. Labels by argmax
// posterior responsibility.
std::pair<ClusterModel, Labeling> fit_gmm(const ProjectionMatrix& pm, int k, std::uint64_t seed,
                                          int max_iter = 200, double tol = 1e-8);

inline constexpr double kGmmVarianceFloor = 1e-6;

// Symmetric matrix keyed by trace ids.
struct DistanceMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> d;

    double at(std::size_t i, std::size_t j) const { return d[i][j]; }
};

// Classic dynamic-programming DTW on one channel: unit step pattern, no
// warping window, |a - b| point cost.
DistanceMatrix dtw_matrix(const TraceSet& ts, const std::string& channel);

// Euclidean distances between the rows of a matrix (for the projection-side
// contrast against DTW).
DistanceMatrix euclidean_matrix(const ProjectionMatrix& pm);

// PAM-style swap descent from seeded random medoids.
std::pair<ClusterModel, Labeling> k_medoids(const DistanceMatrix& dist, int k,
                                            std::uint64_t seed, int max_iter = 100);

// Adjusted Rand index between two flat assignments of equal length.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Flat component assignment for rows of pm (no sentinels), -1 when missing.
std::vector<int> flat_assignment(const Labeling& labeling, const std::vector<std::string>& ids);

void save_labeling_csv(const Labeling& labeling, const std::string& path);
Labeling load_labeling_csv(const std::string& path);
void save_distance_csv(const DistanceMatrix& m, const std::string& path);

}  // namespace stlmine
