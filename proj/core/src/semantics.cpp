// Boolean STL semantics over finite traces. Temporal operators quantify over
// the trace's sample times plus the shifted window endpoints, with windows
// truncated at the trace end; atom expressions between samples are linearly
// interpolated (a linear expression of linearly interpolated channels equals
// the interpolation of the expression, so each atom is precomputed as one
// series over the samples).

#include "stlmine/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace stlmine {

namespace {

class Evaluator {
public:
    Evaluator(const TimedTrace& x, const FormulaPtr& phi) : x_(x), root_(phi) {
        collect_atoms(phi);
    }

    bool at(double t) const { return eval(*root_, t); }

private:
    void collect_atoms(const FormulaPtr& f) {
        if (!f) return;
        if (f->op == Op::Atom) {
            const Atom& a = *f->atom;
            std::vector<int> idx;
            idx.reserve(a.expr.terms.size());
            for (const auto& term : a.expr.terms) {
                int ch = -1;
                if (!term.channel.empty()) {
                    ch = x_.channel_index(term.channel);
                    if (ch < 0) throw ContractError("unknown channel '" + term.channel + "'");
                }
                idx.push_back(ch);
            }
            std::vector<double> series(x_.size());
            for (std::size_t i = 0; i < x_.size(); ++i) {
                double v = 0.0;
                for (std::size_t k = 0; k < a.expr.terms.size(); ++k) {
                    double base = idx[k] < 0 ? 1.0 : x_.values[i][idx[k]];
                    v += a.expr.terms[k].coef * base;
                }
                series[i] = v;
            }
            series_.emplace(f.get(), std::move(series));
        }
        collect_atoms(f->lhs);
        collect_atoms(f->rhs);
    }

    double series_at(const Formula* node, double t) const {
        const std::vector<double>& s = series_.at(node);
        const auto& times = x_.times;
        if (t <= times.front()) return s.front();
        if (t >= times.back()) return s.back();
        auto it = std::lower_bound(times.begin(), times.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - times.begin());
        if (times[hi] == t) return s[hi];
        std::size_t lo = hi - 1;
        double frac = (t - times[lo]) / (times[hi] - times[lo]);
        return s[lo] + frac * (s[hi] - s[lo]);
    }

    bool eval_atom(const Formula& f, double t) const {
        double lhs = series_at(&f, t);
        double rhs = f.atom->rhs.value;
        switch (f.atom->cmp) {
            case Cmp::Ge: return lhs >= rhs;
            case Cmp::Le: return lhs <= rhs;
            case Cmp::Gt: return lhs > rhs;
            case Cmp::Lt: return lhs < rhs;
            case Cmp::Eq: return lhs == rhs;
        }
        return false;
    }

    // Candidate instants of t (+) window, clipped to the trace span: the
    // shifted endpoints plus every sample strictly inside. Open ends drop
    // their exact endpoint; an endpoint clipped to the span counts as
    // closed. Returns ascending, deduplicated times (empty when the shifted
    // window misses [0, span]).
    std::vector<double> candidates(const Interval& w, double t) const {
        std::vector<double> out;
        double span = x_.span();
        double lo = t + w.lo.value;
        double hi_raw = t + w.hi.value;
        if (lo > span || hi_raw < lo) return out;
        bool lo_excluded = w.lo_open;
        if (lo < 0.0) {  // window reaching before the trace start clips closed
            lo = 0.0;
            lo_excluded = false;
        }
        double hi = std::min(hi_raw, span);
        if (hi < lo) return out;
        bool hi_excluded = w.hi_open && hi_raw <= span;
        if (lo == hi) {
            if (!lo_excluded && !hi_excluded) out.push_back(lo);
            return out;
        }
        if (!lo_excluded) out.push_back(lo);
        const auto& times = x_.times;
        auto first = std::upper_bound(times.begin(), times.end(), lo);
        auto last = std::lower_bound(times.begin(), times.end(), hi);
        for (auto it = first; it != last; ++it) out.push_back(*it);
        if (!hi_excluded) out.push_back(hi);
        return out;
    }

    bool eval(const Formula& f, double t) const {
        switch (f.op) {
            case Op::True:
                return true;
            case Op::Atom:
                return eval_atom(f, t);
            case Op::Not:
                return !eval(*f.lhs, t);
            case Op::And:
                return eval(*f.lhs, t) && eval(*f.rhs, t);
            case Op::Or:
                return eval(*f.lhs, t) || eval(*f.rhs, t);
            case Op::Finally: {
                for (double u : candidates(*f.window, t))
                    if (eval(*f.lhs, u)) return true;
                return false;
            }
            case Op::Globally: {
                for (double u : candidates(*f.window, t))
                    if (!eval(*f.lhs, u)) return false;
                return true;
            }
            case Op::Until: {
                // exists t1 in the window with rhs at t1 and lhs at t and at
                // every sample in (t, t1)
                std::vector<double> cand = candidates(*f.window, t);
                if (cand.empty()) return false;
                const auto& times = x_.times;
                auto cursor = std::upper_bound(times.begin(), times.end(), t);
                bool lhs_at_t_known = false, lhs_at_t = false;
                for (double t1 : cand) {
                    if (t1 > t) {
                        if (!lhs_at_t_known) {
                            lhs_at_t = eval(*f.lhs, t);
                            lhs_at_t_known = true;
                        }
                        if (!lhs_at_t) return false;
                    }
                    bool prefix_broken = false;
                    while (cursor != times.end() && *cursor < t1) {
                        if (!eval(*f.lhs, *cursor)) {
                            prefix_broken = true;
                            break;
                        }
                        ++cursor;
                    }
                    if (prefix_broken) return false;  // no later t1 can recover
                    if (eval(*f.rhs, t1)) return true;
                }
                return false;
            }
        }
        return false;
    }

    const TimedTrace& x_;
    FormulaPtr root_;
    std::unordered_map<const Formula*, std::vector<double>> series_;
};

}  // namespace

bool satisfies(const TimedTrace& x, const FormulaPtr& phi, double t) {
    if (!phi) throw ContractError("null formula");
    if (!is_ground(phi)) throw ContractError("formula is not ground");
    x.validate();
    if (!std::binary_search(x.times.begin(), x.times.end(), t))
        throw ContractError("start time is not a sample time of the trace");
    Evaluator ev(x, phi);
    return ev.at(t);
}

}  // namespace stlmine
