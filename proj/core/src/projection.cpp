#include "stlmine/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "detail_util.hpp"
#include "stlmine/semantics.hpp"

namespace stlmine {

using detail::format_double;
using detail::parse_double;
using detail::split;
using detail::trim;

// ---- ParameterSpace ----------------------------------------------------------

int ParameterSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    return -1;
}

double ParameterSpace::weak_bound(std::size_t i) const {
    const auto& d = params_[i];
    return d.polarity > 0 ? d.hi : d.lo;
}

double ParameterSpace::strong_bound(std::size_t i) const {
    const auto& d = params_[i];
    return d.polarity > 0 ? d.lo : d.hi;
}

Valuation ParameterSpace::weakest() const {
    std::vector<double> v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) v[i] = weak_bound(i);
    return Valuation::point(std::move(v));
}

Valuation ParameterSpace::strongest() const {
    std::vector<double> v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) v[i] = strong_bound(i);
    return Valuation::point(std::move(v));
}

bool ParameterSpace::leq1(std::size_t i, double a, double b) const {
    return params_[i].polarity > 0 ? a <= b : a >= b;
}

double ParameterSpace::toward_weak(std::size_t i, double v, double delta) const {
    return params_[i].polarity > 0 ? v + delta : v - delta;
}

double ParameterSpace::toward_strong(std::size_t i, double v, double delta) const {
    return params_[i].polarity > 0 ? v - delta : v + delta;
}

double ParameterSpace::clamp(std::size_t i, double v) const {
    return std::min(std::max(v, params_[i].lo), params_[i].hi);
}

bool ParameterSpace::contains(const Valuation& v) const {
    if (v.is_sentinel()) return false;
    if (v.size() != params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (v[i] < params_[i].lo || v[i] > params_[i].hi) return false;
    return true;
}

std::map<std::string, double> ParameterSpace::to_map(const Valuation& v) const {
    if (v.size() != params_.size()) throw ContractError("valuation arity mismatch");
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < params_.size(); ++i) m[params_[i].name] = v[i];
    return m;
}

Valuation ParameterSpace::from_map(const std::map<std::string, double>& m) const {
    std::vector<double> v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto it = m.find(params_[i].name);
        if (it == m.end())
            throw ContractError("missing assignment for parameter '" + params_[i].name + "'");
        v[i] = it->second;
    }
    if (m.size() != params_.size()) throw ContractError("extra parameter assignments");
    return Valuation::point(std::move(v));
}

// ---- orders -------------------------------------------------------------------

bool param_leq(const Valuation& v1, const Valuation& v2, const ParameterSpace& ps) {
    if (v1.is_bot() || v2.is_top()) return true;
    if (v1.is_top()) return v2.is_top();
    if (v2.is_bot()) return v1.is_bot();
    if (v1.size() != v2.size() || v1.size() != ps.size())
        throw ContractError("mismatched parameter sets");
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (!ps.leq1(i, v1[i], v2[i])) return false;
    return true;
}

bool lex_leq(const Valuation& v1, const Valuation& v2, const ParameterSpace& ps) {
    if (v1.is_bot() || v2.is_top()) return true;
    if (v1.is_top()) return v2.is_top();
    if (v2.is_bot()) return v1.is_bot();
    if (v1.size() != v2.size() || v1.size() != ps.size())
        throw ContractError("mismatched parameter sets");
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (v1[i] == v2[i]) continue;
        return ps.leq1(i, v1[i], v2[i]);
    }
    return true;  // equal
}

// ---- lexicographic projection ---------------------------------------------------

Projection project_lex(const TimedTrace& x, const PSTLTemplate& tpl) {
    ParameterSpace ps(tpl);
    int queries = 0;
    auto sat = [&](const Valuation& v) {
        ++queries;
        return satisfies(x, instantiate(tpl, v));
    };

    Valuation weakest = ps.weakest();
    if (!sat(weakest)) return {Valuation::top(), queries};
    if (sat(ps.strongest())) return {Valuation::bot(), queries};

    // Per parameter in priority order: bisect between the strong and weak
    // bound with earlier parameters pinned to their converged values and
    // later ones at their weakest. The weak side of the interval is always
    // the satisfying side, so the final valuation satisfies by construction.
    Valuation result = weakest;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        double weak = ps.weak_bound(i);
        double strong = ps.strong_bound(i);
        const double eps = ps.decl(i).epsilon;
        while (std::abs(weak - strong) > eps) {
            double mid = 0.5 * (weak + strong);
            if (mid == weak || mid == strong) break;  // fp exhaustion
            result.values()[i] = mid;
            if (sat(result))
                weak = mid;
            else
                strong = mid;
        }
        result.values()[i] = weak;
    }
    return {result, queries};
}

// ---- scalarization projection -----------------------------------------------

Valuation project_scalar(const TimedTrace& x, const PSTLTemplate& tpl,
                         const std::vector<double>& weights,
                         const std::vector<double>& grid_step) {
    ParameterSpace ps(tpl);
    std::size_t n = ps.size();
    if (weights.size() != n || grid_step.size() != n)
        throw ContractError("weights/grid_step arity mismatch");
    for (double w : weights)
        if (!std::isfinite(w)) throw ContractError("non-finite weight");
    for (double g : grid_step)
        if (!(g > 0)) throw ContractError("grid_step must be > 0");

    std::vector<std::vector<double>> grids(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = ps.decl(i);
        for (double v = d.lo; v <= d.hi + 1e-12; v += grid_step[i]) grids[i].push_back(std::min(v, d.hi));
        if (grids[i].back() < d.hi) grids[i].push_back(d.hi);
    }

    auto sat = [&](const Valuation& v) { return satisfies(x, instantiate(tpl, v)); };

    // One grid step toward stronger in every coordinate, clamped to the
    // domain; a satisfied point whose strengthening fails (or cannot move)
    // sits on the validity boundary.
    auto strengthened = [&](const Valuation& v) {
        Valuation s = v;
        for (std::size_t i = 0; i < n; ++i)
            s.values()[i] = ps.clamp(i, ps.toward_strong(i, v[i], grid_step[i]));
        return s;
    };

    bool found = false;
    Valuation best;
    double best_cost = 0.0;
    std::vector<std::size_t> idx(n, 0);
    Valuation v = Valuation::point(std::vector<double>(n, 0.0));
    while (true) {
        for (std::size_t i = 0; i < n; ++i) v.values()[i] = grids[i][idx[i]];
        if (sat(v)) {
            Valuation s = strengthened(v);
            if (s == v || !sat(s)) {
                double cost = 0.0;
                for (std::size_t i = 0; i < n; ++i) cost += weights[i] * v[i];
                if (!found || cost < best_cost ||
                    (cost == best_cost && lex_leq(v, best, ps) && !(v == best))) {
                    found = true;
                    best = v;
                    best_cost = cost;
                }
            }
        }
        // advance the odometer
        std::size_t i = 0;
        for (; i < n; ++i) {
            if (++idx[i] < grids[i].size()) break;
            idx[i] = 0;
        }
        if (i == n) break;
    }
    return found ? best : Valuation::top();
}

// ---- trace-set projection ------------------------------------------------------

ProjectionTable project_all(const TraceSet& ts, const PSTLTemplate& tpl, int threads) {
    ProjectionTable table;
    table.ids.reserve(ts.size());
    std::vector<const TimedTrace*> traces;
    for (const auto& [id, tr] : ts.traces) {
        table.ids.push_back(id);
        traces.push_back(&tr);
    }
    table.rows.resize(traces.size());

    std::vector<std::string> errs(traces.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                table.rows[i] = project_lex(*traces[i], tpl);
            } catch (const std::exception& e) {
                errs[i] = e.what();
            }
        }
    };

    if (threads <= 1 || traces.size() < 2) {
        work(0, traces.size());
    } else {
        std::size_t nthreads = std::min<std::size_t>(threads, traces.size());
        std::vector<std::thread> pool;
        std::size_t chunk = (traces.size() + nthreads - 1) / nthreads;
        for (std::size_t t = 0; t < nthreads; ++t) {
            std::size_t b = t * chunk;
            std::size_t e = std::min(b + chunk, traces.size());
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < traces.size(); ++i)
        if (!errs[i].empty()) table.errors[table.ids[i]] = errs[i];
    return table;
}

// ---- projection table CSV ------------------------------------------------------

void save_projection_csv(const ProjectionTable& table, const ParameterSpace& ps,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "trace_id";
    for (const auto& d : ps.decls()) out << ',' << d.name;
    out << ",sentinel,queries\n";
    for (std::size_t r = 0; r < table.ids.size(); ++r) {
        if (table.errors.count(table.ids[r])) continue;
        const Projection& p = table.rows[r];
        out << table.ids[r];
        if (p.value.is_sentinel()) {
            for (std::size_t i = 0; i < ps.size(); ++i) out << ',';
            out << ',' << (p.value.is_top() ? "top" : "bot");
        } else {
            for (std::size_t i = 0; i < ps.size(); ++i) out << ',' << format_double(p.value[i]);
            out << ",none";
        }
        out << ',' << p.queries << '\n';
    }
}

LoadedProjection load_projection_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
    auto header = split(trim(line), ',');
    if (header.size() < 3 || header.front() != "trace_id" ||
        header[header.size() - 2] != "sentinel" || header.back() != "queries")
        throw ParseError(path, 1, "bad projection header");

    LoadedProjection lp;
    lp.param_names.assign(header.begin() + 1, header.end() - 2);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != header.size())
            throw ParseError(path, lineno, "wrong cell count");
        Projection p;
        const std::string& sentinel = cells[cells.size() - 2];
        double q = 0;
        if (!parse_double(cells.back(), q)) throw ParseError(path, lineno, "bad query count");
        p.queries = static_cast<int>(q);
        if (sentinel == "top") {
            p.value = Valuation::top();
        } else if (sentinel == "bot") {
            p.value = Valuation::bot();
        } else if (sentinel == "none") {
            std::vector<double> v(lp.param_names.size());
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!parse_double(cells[i + 1], v[i]))
                    throw ParseError(path, lineno, "bad parameter value '" + cells[i + 1] + "'");
            p.value = Valuation::point(std::move(v));
        } else {
            throw ParseError(path, lineno, "bad sentinel '" + sentinel + "'");
        }
        lp.table.ids.push_back(cells[0]);
        lp.table.rows.push_back(std::move(p));
    }
    return lp;
}

}  // namespace stlmine
