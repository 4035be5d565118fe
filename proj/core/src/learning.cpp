#include "stlmine/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stlmine/rng.hpp"

namespace stlmine {

// ---- hyperbox ----------------------------------------------------------------

bool Hyperbox::contains(const Valuation& v, const ParameterSpace& ps) const {
    if (v.is_sentinel()) return false;
    std::size_t n = ps.size();
    if (v.size() != n) throw ContractError("hyperbox: valuation arity mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (!ps.leq1(i, nu_s[i], v[i])) return false;  // strong faces closed
        if (closed_at_weak[i]) {
            if (!ps.leq1(i, v[i], nu_w[i])) return false;
        } else {
            if (!ps.leq1(i, v[i], nu_w[i]) || v[i] == nu_w[i]) return false;  // open
        }
    }
    return true;
}

Hyperbox make_hyperbox(const Valuation& nu_s, const Valuation& nu_w, const ParameterSpace& ps) {
    if (nu_s.is_sentinel() || nu_w.is_sentinel())
        throw ContractError("hyperbox extremes must be points");
    if (!param_leq(nu_s, nu_w, ps)) throw ContractError("hyperbox needs nu_s <= nu_w");
    Hyperbox box;
    box.nu_s = nu_s;
    box.nu_w = nu_w;
    box.closed_at_weak.resize(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i)
        box.closed_at_weak[i] = nu_w[i] == ps.weak_bound(i);
    return box;
}

Hyperbox bounding_hyperbox(const std::vector<Valuation>& points, const std::vector<double>& eps,
                           const std::set<std::string>& open_dims, const ParameterSpace& ps) {
    if (points.empty()) throw ContractError("bounding_hyperbox: empty point set");
    std::size_t n = ps.size();
    if (eps.size() != n) throw ContractError("bounding_hyperbox: eps arity mismatch");
    for (const auto& p : points) {
        if (p.is_sentinel()) throw ContractError("bounding_hyperbox: sentinel point");
        if (p.size() != n) throw ContractError("bounding_hyperbox: point arity mismatch");
    }
    for (const auto& name : open_dims)
        if (ps.index_of(name) < 0)
            throw ContractError("bounding_hyperbox: unknown open dimension '" + name + "'");

    std::vector<double> s(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = points[0][i];
        w[i] = points[0][i];
        for (const auto& p : points) {
            if (ps.leq1(i, p[i], s[i])) s[i] = p[i];
            if (ps.leq1(i, w[i], p[i])) w[i] = p[i];
        }
        // Only the weak faces must be open, so only they are relaxed; eps
        // keeps every input point strictly inside, clamped to the domain.
        w[i] = ps.clamp(i, ps.toward_weak(i, w[i], eps[i]));
        if (open_dims.count(ps.decl(i).name)) w[i] = ps.weak_bound(i);
    }
    return make_hyperbox(Valuation::point(std::move(s)), Valuation::point(std::move(w)), ps);
}

// ---- corners ---------------------------------------------------------------

std::vector<Valuation> essential_corners(const Hyperbox& box, const ParameterSpace& ps) {
    std::size_t n = ps.size();
    std::vector<Valuation> corners;
    corners.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v = box.nu_w.values();
        v[i] = box.nu_s[i];
        corners.push_back(Valuation::point(std::move(v)));
    }
    return corners;
}

CornerSubset::CornerSubset(std::size_t width, std::vector<std::uint32_t> masks)
    : width_(width), masks_(std::move(masks)) {
    if (width_ == 0 || width_ > 31) throw ContractError("corner subset: bad width");
    std::uint32_t all = (width_ >= 32 ? 0xffffffffu : ((1u << width_) - 1u));
    for (auto m : masks_) {
        if (m > all) throw ContractError("corner bit-vector wider than the parameter count");
        if (m == all) throw ContractError("corner subset must exclude the all-ones corner");
    }
    std::sort(masks_.begin(), masks_.end());
    masks_.erase(std::unique(masks_.begin(), masks_.end()), masks_.end());
}

CornerSubset CornerSubset::essential(std::size_t width) {
    std::uint32_t all = (1u << width) - 1u;
    std::vector<std::uint32_t> masks;
    for (std::size_t i = 0; i < width; ++i) masks.push_back(all & ~(1u << i));
    return CornerSubset(width, std::move(masks));
}

CornerSubset CornerSubset::none(std::size_t width) { return CornerSubset(width, {}); }

CornerSubset CornerSubset::from_strings(const std::vector<std::string>& bits) {
    if (bits.empty()) throw ContractError("corner subset: no bit-vectors");
    std::size_t width = bits.front().size();
    std::vector<std::uint32_t> masks;
    for (const auto& b : bits) {
        if (b.size() != width) throw ContractError("corner bit-vectors differ in width");
        std::uint32_t m = 0;
        for (std::size_t i = 0; i < width; ++i) {
            if (b[i] == '1')
                m |= (1u << i);
            else if (b[i] != '0')
                throw ContractError("corner bit-vector must be 0/1, got '" + b + "'");
        }
        masks.push_back(m);
    }
    return CornerSubset(width, std::move(masks));
}

std::vector<std::string> CornerSubset::to_strings() const {
    std::vector<std::string> out;
    for (auto m : masks_) {
        std::string s(width_, '0');
        for (std::size_t i = 0; i < width_; ++i)
            if (m & (1u << i)) s[i] = '1';
        out.push_back(std::move(s));
    }
    return out;
}

Valuation corner_valuation(const Hyperbox& box, std::uint32_t mask, std::size_t width) {
    std::vector<double> v(width);
    for (std::size_t i = 0; i < width; ++i)
        v[i] = (mask & (1u << i)) ? box.nu_w[i] : box.nu_s[i];
    return Valuation::point(std::move(v));
}

// ---- formula synthesis ---------------------------------------------------------

SynthesizedFormula synthesize_formula(const PSTLTemplate& tpl, const Hyperbox& box,
                                      const CornerSubset& corners) {
    ParameterSpace ps(tpl);
    if (corners.width() != ps.size())
        throw ContractError("corner subset width != parameter count");
    if (!ps.contains(box.nu_s) || !ps.contains(box.nu_w))
        throw ContractError("hyperbox extremes outside the parameter domain");

    // Corners sorted by descending bit-string (first coordinate most
    // significant) give a stable conjunct order.
    std::vector<std::uint32_t> order = corners.masks();
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t i = 0; i < corners.width(); ++i) {
            std::uint32_t ba = a & (1u << i), bb = b & (1u << i);
            if (ba != bb) return ba > bb;
        }
        return false;
    });

    FormulaPtr psi = instantiate(tpl, box.nu_w);
    for (std::uint32_t mask : order) {
        Valuation corner = corner_valuation(box, mask, corners.width());
        if (!ps.contains(corner)) throw ContractError("corner outside the parameter domain");
        psi = Formula::conjunction(std::move(psi), Formula::negation(instantiate(tpl, corner)));
    }

    SynthesizedFormula out;
    out.psi = std::move(psi);
    out.box = box;
    out.corners = corners;
    out.size = node_count(out.psi);
    return out;
}

int formula_size(const SynthesizedFormula& f) { return node_count(f.psi); }

// ---- hyperbox labeling -----------------------------------------------------------

std::set<std::string> label_by_hyperbox(const Valuation& projection,
                                        const std::map<std::string, Hyperbox>& boxes,
                                        const ParameterSpace& ps) {
    std::set<std::string> out;
    if (projection.is_top()) return {kTopLabel};
    if (projection.is_bot()) return {kBotLabel};
    for (const auto& [label, box] : boxes)
        if (box.contains(projection, ps)) out.insert(label);
    return out;
}

// ---- comparable convexity ----------------------------------------------------

ConvexityReport check_comparable_convexity(const RegionFn& region, const ParameterSpace& ps,
                                           const std::vector<double>& range_lo,
                                           const std::vector<double>& range_hi, int n_samples,
                                           std::uint64_t seed) {
    std::size_t n = ps.size();
    if (range_lo.size() != n || range_hi.size() != n)
        throw ContractError("convexity: range arity mismatch");

    Rng rng(seed);
    auto draw_inside = [&](Valuation& out) {
        for (int tries = 0; tries < 20000; ++tries) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform(range_lo[i], range_hi[i]);
            Valuation cand = Valuation::point(std::move(v));
            if (region(cand)) {
                out = std::move(cand);
                return true;
            }
        }
        return false;
    };

    ConvexityReport report;
    int made = 0;
    for (int s = 0; s < n_samples * 50 && made < n_samples; ++s) {
        Valuation a, b;
        if (!draw_inside(a) || !draw_inside(b)) break;
        Valuation lo = a, hi = b;
        if (param_leq(a, b, ps)) {
            // a <= b
        } else if (param_leq(b, a, ps)) {
            std::swap(lo, hi);
        } else {
            continue;  // incomparable pair, resample
        }
        ++made;
        ++report.pairs_checked;
        for (int step = 0; step <= 10; ++step) {
            double lambda = step / 10.0;
            std::vector<double> mix(n);
            for (std::size_t i = 0; i < n; ++i)
                mix[i] = (1.0 - lambda) * lo[i] + lambda * hi[i];
            Valuation combo = Valuation::point(std::move(mix));
            if (!region(combo)) {
                report.pass = false;
                report.counterexample = ConvexityCounterexample{lo, hi, lambda, combo};
                return report;
            }
        }
    }
    return report;
}

ConvexityReport check_comparable_convexity(const Hyperbox& box, const CornerSubset& corners,
                                           const ParameterSpace& ps, int n_samples,
                                           std::uint64_t seed) {
    std::size_t n = ps.size();
    std::vector<Valuation> corner_vals;
    for (auto m : corners.masks()) corner_vals.push_back(corner_valuation(box, m, n));

    // Region of psi_B: downward closure of nu_w minus the corners' downward
    // closures, inside the domain.
    RegionFn region = [&, corner_vals](const Valuation& v) {
        if (!ps.contains(v)) return false;
        if (!param_leq(v, box.nu_w, ps)) return false;
        for (const auto& c : corner_vals)
            if (param_leq(v, c, ps)) return false;
        return true;
    };

    std::vector<double> lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = std::min(ps.strong_bound(i), box.nu_w[i]);
        hi[i] = std::max(ps.strong_bound(i), box.nu_w[i]);
    }
    return check_comparable_convexity(region, ps, lo, hi, n_samples, seed);
}

// ---- representatives ------------------------------------------------------------

Representatives representatives(const ProjectionMatrix& pm, const Labeling& labeling,
                                const std::string& label) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < pm.ids.size(); ++i) {
        auto it = labeling.labels.find(pm.ids[i]);
        if (it != labeling.labels.end() && it->second.count(label)) members.push_back(i);
    }
    if (members.empty()) throw ContractError("representatives: no member rows for label '" + label + "'");

    // id-sorted scan makes ties deterministic
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return pm.ids[a] < pm.ids[b]; });

    std::size_t d = pm.n_cols();
    std::vector<double> strong_corner(d), weak_corner(d), center(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        bool strong_is_min = pm.column_polarity[c] > 0;
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t m : members) {
            mn = std::min(mn, pm.rows[m][c]);
            mx = std::max(mx, pm.rows[m][c]);
            center[c] += pm.rows[m][c];
        }
        center[c] /= static_cast<double>(members.size());
        strong_corner[c] = strong_is_min ? mn : mx;
        weak_corner[c] = strong_is_min ? mx : mn;
    }

    auto nearest = [&](const std::vector<double>& target) {
        std::size_t best = members.front();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t m : members) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double dx = pm.rows[m][c] - target[c];
                s += dx * dx;
            }
            if (s < best_d) {
                best_d = s;
                best = m;
            }
        }
        return pm.ids[best];
    };

    return Representatives{nearest(strong_corner), nearest(weak_corner), nearest(center)};
}

std::set<std::string> suggest_open_dims(const ProjectionMatrix& pm, const Labeling& labeling,
                                        const std::string& label) {
    std::vector<std::size_t> members, others;
    for (std::size_t i = 0; i < pm.ids.size(); ++i) {
        auto it = labeling.labels.find(pm.ids[i]);
        bool mine = it != labeling.labels.end() && it->second.count(label);
        (mine ? members : others).push_back(i);
    }
    std::set<std::string> out;
    if (members.empty()) return out;
    for (std::size_t c = 0; c < pm.n_cols(); ++c) {
        bool weak_is_max = pm.column_polarity[c] > 0;
        double weak_extreme = weak_is_max ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
        for (std::size_t m : members)
            weak_extreme = weak_is_max ? std::max(weak_extreme, pm.rows[m][c])
                                       : std::min(weak_extreme, pm.rows[m][c]);
        bool blocked = false;
        for (std::size_t o : others) {
            double v = pm.rows[o][c];
            if (weak_is_max ? v > weak_extreme : v < weak_extreme) {
                blocked = true;
                break;
            }
        }
        if (!blocked) out.insert(pm.columns[c]);
    }
    return out;
}

}  // namespace stlmine
