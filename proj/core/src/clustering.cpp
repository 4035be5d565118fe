#include "stlmine/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "detail_util.hpp"
#include "stlmine/rng.hpp"

namespace stlmine {

using detail::format_double;
using detail::parse_double;
using detail::split;
using detail::trim;

// ---- matrix assembly -----------------------------------------------------------

ProjectionMatrix to_matrix(const ProjectionTable& table, const ParameterSpace& ps) {
    ProjectionMatrix pm;
    for (const auto& d : ps.decls()) {
        pm.columns.push_back(d.name);
        pm.column_polarity.push_back(d.polarity);
    }
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        if (table.errors.count(table.ids[r])) continue;
        const Valuation& v = table.rows[r].value;
        if (v.is_sentinel()) {
            pm.sentinels.push_back({table.ids[r], v.is_top()});
        } else {
            if (v.size() != ps.size()) throw ContractError("projection arity mismatch");
            pm.ids.push_back(table.ids[r]);
            pm.rows.push_back(v.values());
        }
    }
    return pm;
}

// ---- normalization -------------------------------------------------------------

std::vector<double> MinMaxTransform::apply(const std::vector<double>& row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        double range = col_max[c] - col_min[c];
        out[c] = range == 0.0 ? 0.5 : (row[c] - col_min[c]) / range;
    }
    return out;
}

std::vector<double> MinMaxTransform::invert(const std::vector<double>& row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        double range = col_max[c] - col_min[c];
        out[c] = range == 0.0 ? col_min[c] : col_min[c] + row[c] * range;
    }
    return out;
}

std::pair<ProjectionMatrix, MinMaxTransform> normalize(const ProjectionMatrix& pm) {
    if (pm.rows.empty()) throw ContractError("normalize: empty matrix");
    MinMaxTransform tf;
    std::size_t d = pm.n_cols();
    tf.col_min.assign(d, std::numeric_limits<double>::infinity());
    tf.col_max.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& row : pm.rows)
        for (std::size_t c = 0; c < d; ++c) {
            tf.col_min[c] = std::min(tf.col_min[c], row[c]);
            tf.col_max[c] = std::max(tf.col_max[c], row[c]);
        }
    ProjectionMatrix out = pm;
    for (auto& row : out.rows) row = tf.apply(row);
    return {std::move(out), std::move(tf)};
}

// ---- shared helpers -----------------------------------------------------------

static double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::set<std::string> Labeling::label_set() const {
    std::set<std::string> out;
    for (const auto& [id, ls] : labels) out.insert(ls.begin(), ls.end());
    return out;
}

std::vector<std::string> Labeling::ids_with(const std::string& label) const {
    std::vector<std::string> out;
    for (const auto& [id, ls] : labels)
        if (ls.count(label)) out.push_back(id);
    return out;
}

static Labeling assignment_to_labeling(const ProjectionMatrix& pm,
                                       const std::vector<int>& assign) {
    Labeling lb;
    for (std::size_t i = 0; i < pm.ids.size(); ++i)
        lb.labels[pm.ids[i]] = {std::to_string(assign[i])};
    for (const auto& s : pm.sentinels) lb.labels[s.id] = {s.top ? kTopLabel : kBotLabel};
    return lb;
}

std::vector<int> flat_assignment(const Labeling& labeling, const std::vector<std::string>& ids) {
    std::vector<int> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = labeling.labels.find(id);
        if (it == labeling.labels.end() || it->second.empty()) {
            out.push_back(-1);
            continue;
        }
        const std::string& l = *it->second.begin();
        out.push_back(l == kTopLabel ? -2 : l == kBotLabel ? -3 : std::stoi(l));
    }
    return out;
}

// ---- k-means --------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> kmeanspp_init(const std::vector<std::vector<double>>& x, int k,
                                               Rng& rng) {
    std::size_t n = x.size();
    std::vector<std::vector<double>> centers;
    std::vector<bool> chosen(n, false);
    std::size_t first = rng.index(n);
    centers.push_back(x[first]);
    chosen[first] = true;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x[i], centers[0]);

    while (static_cast<int>(centers.size()) < k) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = n - 1;
        }
        if (pick == n || chosen[pick]) {
            // all residual mass on duplicates: take the first unchosen row
            pick = n;
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            if (pick == n) pick = 0;
        }
        chosen[pick] = true;
        centers.push_back(x[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x[i], centers.back()));
    }
    return centers;
}

std::vector<int> assign_nearest(const std::vector<std::vector<double>>& x,
                                const std::vector<std::vector<double>>& centers) {
    std::vector<int> assign(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            double d = sq_dist(x[i], centers[c]);
            if (d < best) {
                best = d;
                assign[i] = static_cast<int>(c);
            }
        }
    }
    return assign;
}

}  // namespace

std::pair<ClusterModel, Labeling> fit_kmeans(const ProjectionMatrix& pm, int k,
                                             std::uint64_t seed, int max_iter, double tol) {
    std::size_t n = pm.n_rows();
    if (n == 0) throw ContractError("fit_kmeans: empty matrix");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ContractError("fit_kmeans: need 1 <= k <= #rows");

    Rng rng(seed);
    const auto& x = pm.rows;
    std::vector<std::vector<double>> centers = kmeanspp_init(x, k, rng);
    std::vector<int> assign;

    for (int iter = 0; iter < max_iter; ++iter) {
        assign = assign_nearest(x, centers);

        std::vector<std::vector<double>> next(k, std::vector<double>(pm.n_cols(), 0.0));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[assign[i]];
            for (std::size_t c = 0; c < pm.n_cols(); ++c) next[assign[i]][c] += x[i][c];
        }
        for (int j = 0; j < k; ++j) {
            if (count[j] == 0) {
                // relocate an empty centroid to the row farthest from its own
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = sq_dist(x[i], centers[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                next[j] = x[far];
                assign[far] = j;
                continue;
            }
            for (std::size_t c = 0; c < pm.n_cols(); ++c) next[j][c] /= static_cast<double>(count[j]);
        }

        double shift = 0.0;
        for (int j = 0; j < k; ++j) shift = std::max(shift, sq_dist(centers[j], next[j]));
        centers = std::move(next);
        if (shift <= tol * tol) break;
    }
    assign = assign_nearest(x, centers);

    ClusterModel model;
    model.kind = ClusterModel::Kind::KMeans;
    model.k = k;
    model.seed = seed;
    model.centroids = centers;
    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) model.inertia += sq_dist(x[i], centers[assign[i]]);
    return {std::move(model), assignment_to_labeling(pm, assign)};
}

// ---- diagonal GMM ----------------------------------------------------------------

std::pair<ClusterModel, Labeling> fit_gmm(const ProjectionMatrix& pm, int k, std::uint64_t seed,
                                          int max_iter, double tol) {
    std::size_t n = pm.n_rows();
    std::size_t d = pm.n_cols();
    if (n == 0) throw ContractError("fit_gmm: empty matrix");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ContractError("fit_gmm: need 1 <= k <= #rows");

    const auto& x = pm.rows;
    auto [km, km_labels] = fit_kmeans(pm, k, seed);
    std::vector<int> assign = flat_assignment(km_labels, pm.ids);

    std::vector<double> weight(k, 0.0);
    std::vector<std::vector<double>> mean = km.centroids;
    std::vector<std::vector<double>> var(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++count[assign[i]];
        for (std::size_t c = 0; c < d; ++c) {
            double dx = x[i][c] - mean[assign[i]][c];
            var[assign[i]][c] += dx * dx;
        }
    }
    for (int j = 0; j < k; ++j) {
        weight[j] = static_cast<double>(count[j]) / static_cast<double>(n);
        for (std::size_t c = 0; c < d; ++c)
            var[j][c] = std::max(count[j] ? var[j][c] / static_cast<double>(count[j])
                                          : kGmmVarianceFloor,
                                 kGmmVarianceFloor);
    }

    constexpr double kLog2Pi = 1.8378770664093453;
    std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
    std::vector<double> loglik_history;
    double prev = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iter; ++iter) {
        // E step
        double loglik = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                double lp = std::log(weight[j]);
                for (std::size_t c = 0; c < d; ++c) {
                    double dx = x[i][c] - mean[j][c];
                    lp += -0.5 * (kLog2Pi + std::log(var[j][c]) + dx * dx / var[j][c]);
                }
                resp[i][j] = lp;
                mx = std::max(mx, lp);
            }
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += std::exp(resp[i][j] - mx);
            double lse = mx + std::log(sum);
            loglik += lse;
            for (int j = 0; j < k; ++j) resp[i][j] = std::exp(resp[i][j] - lse);
        }
        loglik_history.push_back(loglik);

        // M step
        for (int j = 0; j < k; ++j) {
            double nj = 0.0;
            for (std::size_t i = 0; i < n; ++i) nj += resp[i][j];
            nj = std::max(nj, 1e-300);
            weight[j] = nj / static_cast<double>(n);
            for (std::size_t c = 0; c < d; ++c) {
                double m = 0.0;
                for (std::size_t i = 0; i < n; ++i) m += resp[i][j] * x[i][c];
                m /= nj;
                double v = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double dx = x[i][c] - m;
                    v += resp[i][j] * dx * dx;
                }
                mean[j][c] = m;
                var[j][c] = std::max(v / nj, kGmmVarianceFloor);
            }
        }

        if (iter > 0 && loglik - prev < tol) break;
        prev = loglik;
    }

    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j)
            if (resp[i][j] > best) {
                best = resp[i][j];
                labels[i] = j;
            }
    }

    ClusterModel model;
    model.kind = ClusterModel::Kind::Gmm;
    model.k = k;
    model.seed = seed;
    model.weights = std::move(weight);
    model.means = std::move(mean);
    model.variances = std::move(var);
    model.loglik_history = std::move(loglik_history);
    return {std::move(model), assignment_to_labeling(pm, labels)};
}

// ---- DTW ---------------------------------------------------------------------

static double dtw_distance(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t n = a.size(), m = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            double cost = std::abs(a[i - 1] - b[j - 1]);
            cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

DistanceMatrix dtw_matrix(const TraceSet& ts, const std::string& channel) {
    DistanceMatrix dm;
    std::vector<std::vector<double>> series;
    for (const auto& [id, tr] : ts.traces) {
        int ch = tr.channel_index(channel);
        if (ch < 0) throw ContractError("dtw_matrix: unknown channel '" + channel + "'");
        std::vector<double> s(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) s[i] = tr.values[i][ch];
        dm.ids.push_back(id);
        series.push_back(std::move(s));
    }
    std::size_t n = dm.ids.size();
    dm.d.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dm.d[i][j] = dm.d[j][i] = dtw_distance(series[i], series[j]);
    return dm;
}

DistanceMatrix euclidean_matrix(const ProjectionMatrix& pm) {
    DistanceMatrix dm;
    dm.ids = pm.ids;
    std::size_t n = pm.n_rows();
    dm.d.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dm.d[i][j] = dm.d[j][i] = std::sqrt(sq_dist(pm.rows[i], pm.rows[j]));
    return dm;
}

// ---- k-medoids -----------------------------------------------------------------

std::pair<ClusterModel, Labeling> k_medoids(const DistanceMatrix& dist, int k,
                                            std::uint64_t seed, int max_iter) {
    std::size_t n = dist.ids.size();
    if (dist.d.size() != n) throw ContractError("k_medoids: non-square matrix");
    for (const auto& row : dist.d)
        if (row.size() != n) throw ContractError("k_medoids: non-square matrix");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ContractError("k_medoids: need 1 <= k <= n");

    Rng rng(seed);
    // seeded draw of k distinct medoids (partial Fisher-Yates)
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int j = 0; j < k; ++j) {
        std::size_t pick = j + rng.index(n - j);
        std::swap(order[j], order[pick]);
    }
    std::vector<std::size_t> medoids(order.begin(), order.begin() + k);
    std::sort(medoids.begin(), medoids.end());

    auto total_cost = [&](const std::vector<std::size_t>& meds) {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t m : meds) best = std::min(best, dist.d[i][m]);
            cost += best;
        }
        return cost;
    };

    double cost = total_cost(medoids);
    for (int iter = 0; iter < max_iter; ++iter) {
        double best_cost = cost;
        int best_slot = -1;
        std::size_t best_other = 0;
        for (int s = 0; s < k; ++s) {
            for (std::size_t o = 0; o < n; ++o) {
                if (std::find(medoids.begin(), medoids.end(), o) != medoids.end()) continue;
                std::vector<std::size_t> trial = medoids;
                trial[s] = o;
                double c = total_cost(trial);
                if (c < best_cost) {
                    best_cost = c;
                    best_slot = s;
                    best_other = o;
                }
            }
        }
        if (best_slot < 0) break;
        medoids[best_slot] = best_other;
        cost = best_cost;
    }
    std::sort(medoids.begin(), medoids.end());

    std::vector<int> assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j)
            if (dist.d[i][medoids[j]] < best) {
                best = dist.d[i][medoids[j]];
                assign[i] = j;
            }
    }

    ClusterModel model;
    model.kind = ClusterModel::Kind::KMedoids;
    model.k = k;
    model.seed = seed;
    model.inertia = cost;
    for (std::size_t m : medoids) model.medoids.push_back(static_cast<int>(m));

    Labeling lb;
    for (std::size_t i = 0; i < n; ++i) lb.labels[dist.ids[i]] = {std::to_string(assign[i])};
    return {std::move(model), std::move(lb)};
}

// ---- adjusted Rand index --------------------------------------------------------

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ContractError("ARI: length mismatch");
    std::size_t n = a.size();
    if (n == 0) return 1.0;
    std::map<int, std::size_t> ia, ib;
    for (int v : a) ia.emplace(v, ia.size());
    for (int v : b) ib.emplace(v, ib.size());
    std::vector<std::vector<std::size_t>> table(ia.size(), std::vector<std::size_t>(ib.size(), 0));
    for (std::size_t i = 0; i < n; ++i) ++table[ia[a[i]]][ib[b[i]]];

    auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < ia.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < ib.size(); ++j) {
            sum_ij += choose2(static_cast<double>(table[i][j]));
            row += static_cast<double>(table[i][j]);
        }
        sum_a += choose2(row);
    }
    for (std::size_t j = 0; j < ib.size(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < ia.size(); ++i) col += static_cast<double>(table[i][j]);
        sum_b += choose2(col);
    }
    double expected = sum_a * sum_b / choose2(static_cast<double>(n));
    double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;
    return (sum_ij - expected) / (max_index - expected);
}

// ---- CSV ----------------------------------------------------------------------

void save_labeling_csv(const Labeling& labeling, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "trace_id,label\n";
    for (const auto& [id, ls] : labeling.labels)
        for (const auto& l : ls) out << id << ',' << l << '\n';
}

Labeling load_labeling_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "trace_id,label")
        throw ParseError(path, 1, "bad labeling header");
    Labeling lb;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != 2) throw ParseError(path, lineno, "expected 'trace_id,label'");
        lb.labels[cells[0]].insert(cells[1]);
    }
    return lb;
}

void save_distance_csv(const DistanceMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    for (std::size_t i = 0; i < m.ids.size(); ++i) out << (i ? "," : "") << m.ids[i];
    out << '\n';
    for (const auto& row : m.d) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
}

}  // namespace stlmine
