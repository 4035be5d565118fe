#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stlmine/clustering.hpp"
#include "stlmine/formula.hpp"
#include "stlmine/projection.hpp"
#include "stlmine/valuation.hpp"

namespace stlmine {

// Axis-aligned region between a strong extreme nu_s (infimum under the
// polarity order) and a weak extreme nu_w (supremum). Faces touching nu_s
// are closed; faces touching nu_w are open unless they sit on the weak
// domain bound.
struct Hyperbox {
    Valuation nu_s;
    Valuation nu_w;
    std::vector<bool> closed_at_weak;

    bool contains(const Valuation& v, const ParameterSpace& ps) const;
};

// Direct construction; validates nu_s <= nu_w and derives face openness.
Hyperbox make_hyperbox(const Valuation& nu_s, const Valuation& nu_w, const ParameterSpace& ps);

// Componentwise extremes of the points, weak faces pushed outward by eps
// (clamped to the domain) so every input point is strictly inside the open
// faces. Parameters in open_dims get their weak face moved to the weak
// domain bound (face becomes closed).
Hyperbox bounding_hyperbox(const std::vector<Valuation>& points, const std::vector<double>& eps,
                           const std::set<std::string>& open_dims, const ParameterSpace& ps);

// The n corners with exactly one coordinate at nu_s; the i-th returned
// corner has coordinate i strong.
std::vector<Valuation> essential_corners(const Hyperbox& box, const ParameterSpace& ps);

// Subset of box corners in bit-vector form: bit i set means coordinate i at
// nu_w. The all-ones corner (nu_w itself) is never a member.
class CornerSubset {
public:
    CornerSubset() = default;
    CornerSubset(std::size_t width, std::vector<std::uint32_t> masks);

    static CornerSubset essential(std::size_t width);
    static CornerSubset none(std::size_t width);
    static CornerSubset from_strings(const std::vector<std::string>& bits);

    std::size_t width() const { return width_; }
    const std::vector<std::uint32_t>& masks() const { return masks_; }
    std::vector<std::string> to_strings() const;  // bit i = i-th character

private:
    std::size_t width_ = 0;
    std::vector<std::uint32_t> masks_;
};

Valuation corner_valuation(const Hyperbox& box, std::uint32_t mask, std::size_t width);

struct SynthesizedFormula {
    FormulaPtr psi;
    Hyperbox box;
    CornerSubset corners;
    int size = 0;  // operator-plus-atom count
};

// psi_B = phi(nu_w) & AND_{c in corners} !phi(c), corners emitted in
// descending bit-vector order (first character most significant).
SynthesizedFormula synthesize_formula(const PSTLTemplate& tpl, const Hyperbox& box,
                                      const CornerSubset& corners);

int formula_size(const SynthesizedFormula& f);

// Every label whose box contains the projection (face openness honored).
// Sentinel projections map to the reserved labels only.
std::set<std::string> label_by_hyperbox(const Valuation& projection,
                                        const std::map<std::string, Hyperbox>& boxes,
                                        const ParameterSpace& ps);

// ---- comparable convexity ---------------------------------------------------

struct ConvexityCounterexample {
    Valuation nu, nu_prime;
    double lambda = 0.0;
    Valuation combination;
};

struct ConvexityReport {
    bool pass = true;
    std::optional<ConvexityCounterexample> counterexample;
    int pairs_checked = 0;
};

using RegionFn = std::function<bool(const Valuation&)>;

// Samples n_samples comparable pairs inside the region (rejection sampling
// over the given coordinate ranges) and tests 11 evenly spaced convex
// combinations of each pair for membership.
ConvexityReport check_comparable_convexity(const RegionFn& region, const ParameterSpace& ps,
                                           const std::vector<double>& range_lo,
                                           const std::vector<double>& range_hi, int n_samples,
                                           std::uint64_t seed);

// The region psi_B describes: downward closure of nu_w minus the downward
// closures of the chosen corners, intersected with the domain.
ConvexityReport check_comparable_convexity(const Hyperbox& box, const CornerSubset& corners,
                                           const ParameterSpace& ps, int n_samples,
                                           std::uint64_t seed);

// ---- representatives -------------------------------------------------------

struct Representatives {
    std::string strong, weak, center;
};

// Within the label's rows of pm (normalized coordinates): the point closest
// in Euclidean distance to the members' strong extreme, to their weak
// extreme, and to their componentwise mean. Ties break by trace-id order.
Representatives representatives(const ProjectionMatrix& pm, const Labeling& labeling,
                                const std::string& label);

// Advisory: dimensions of `label`'s cluster with no other cluster's point
// lying strictly weaker than its weak extreme (candidates for open_dims).
std::set<std::string> suggest_open_dims(const ProjectionMatrix& pm, const Labeling& labeling,
                                        const std::string& label);

}  // namespace stlmine
