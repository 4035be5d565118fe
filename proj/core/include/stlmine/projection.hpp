#pragma once

#include <map>
#include <string>
#include <vector>

#include "stlmine/formula.hpp"
#include "stlmine/trace.hpp"
#include "stlmine/valuation.hpp"

namespace stlmine {

// A template's ordered parameter declarations, with the polarity-aware
// partial order and its lexicographic linearization.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<ParameterDecl> params) : params_(std::move(params)) {}
    explicit ParameterSpace(const PSTLTemplate& tpl) : params_(tpl.params) {}

    std::size_t size() const { return params_.size(); }
    const ParameterDecl& decl(std::size_t i) const { return params_[i]; }
    const std::vector<ParameterDecl>& decls() const { return params_; }
    int index_of(std::string_view name) const;

    // Domain corner that satisfies most easily (sup under the order) and its
    // opposite (inf): per parameter hi for polarity +, lo for polarity -.
    Valuation weakest() const;
    Valuation strongest() const;
    double weak_bound(std::size_t i) const;
    double strong_bound(std::size_t i) const;

    // a "stronger or equal" b in coordinate i.
    bool leq1(std::size_t i, double a, double b) const;

    // Move v by delta >= 0 toward the weak / strong end (unclamped).
    double toward_weak(std::size_t i, double v, double delta) const;
    double toward_strong(std::size_t i, double v, double delta) const;
    double clamp(std::size_t i, double v) const;

    bool contains(const Valuation& v) const;

    std::map<std::string, double> to_map(const Valuation& v) const;
    Valuation from_map(const std::map<std::string, double>& m) const;

private:
    std::vector<ParameterDecl> params_;
};

// Componentwise polarity order; BOT is below and TOP above everything.
// Throws on mismatched parameter counts.
bool param_leq(const Valuation& v1, const Valuation& v2, const ParameterSpace& ps);

// Lexicographic linearization in declaration-priority order (total on
// non-sentinel valuations).
bool lex_leq(const Valuation& v1, const Valuation& v2, const ParameterSpace& ps);

struct Projection {
    Valuation value;
    int queries = 0;  // satisfaction queries spent
};

// Iterated binary search onto the validity boundary of tpl for trace x.
// Returns TOP when even the weakest corner fails, BOT when the strongest
// corner already satisfies; otherwise per parameter, in priority order,
// bisects between the strong and weak bound (arithmetic midpoint, keeping
// parameters before fixed and parameters after at their weakest) until the
// gap is within the declared epsilon, and returns the satisfying side.
// Non-sentinel results always satisfy the instantiated formula.
Projection project_lex(const TimedTrace& x, const PSTLTemplate& tpl);

// Reference scalarization projection: exhaustively scans the domain grid,
// keeps satisfied valuations whose one-grid-step strengthening fails (the
// boundary set), and returns the one minimizing sum_i weights[i] * v[i],
// breaking ties by the lexicographic order. Empty boundary set => TOP.
Valuation project_scalar(const TimedTrace& x, const PSTLTemplate& tpl,
                         const std::vector<double>& weights,
                         const std::vector<double>& grid_step);

struct ProjectionTable {
    std::vector<std::string> ids;
    std::vector<Projection> rows;               // aligned with ids
    std::map<std::string, std::string> errors;  // trace id -> message
};

// Element-wise project_lex over the set; result is independent of the
// number of worker threads. Per-trace errors are collected, not fail-fast.
ProjectionTable project_all(const TraceSet& ts, const PSTLTemplate& tpl, int threads = 1);

// CSV: trace_id,<param...>,sentinel,queries with empty parameter cells on
// sentinel rows and sentinel in {none, top, bot}.
void save_projection_csv(const ProjectionTable& table, const ParameterSpace& ps,
                         const std::string& path);

struct LoadedProjection {
    ProjectionTable table;
    std::vector<std::string> param_names;
};

LoadedProjection load_projection_csv(const std::string& path);

}  // namespace stlmine
