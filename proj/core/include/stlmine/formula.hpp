#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stlmine/errors.hpp"
#include "stlmine/trace.hpp"
#include "stlmine/valuation.hpp"

namespace stlmine {

// ---- AST -------------------------------------------------------------------

// Constant or reference to a declared parameter (interval bound / atom rhs).
struct Operand {
    double value = 0.0;
    std::string param;  // nonempty => parameter reference

    bool is_param() const { return !param.empty(); }

    static Operand number(double v) { return Operand{v, ""}; }
    static Operand parameter(std::string name) { return Operand{0.0, std::move(name)}; }

    bool operator==(const Operand&) const = default;
};

// One term of a linear expression; empty channel means a plain constant.
struct Term {
    double coef = 1.0;
    std::string channel;

    bool operator==(const Term&) const = default;
};

struct LinExpr {
    std::vector<Term> terms;

    bool operator==(const LinExpr&) const = default;
};

enum class Cmp { Ge, Le, Gt, Lt, Eq };

struct Atom {
    LinExpr expr;
    Cmp cmp = Cmp::Gt;
    Operand rhs;

    bool operator==(const Atom&) const = default;
};

// Temporal window. hi may be +infinity (bare F/G over the rest of the trace).
struct Interval {
    Operand lo = Operand::number(0.0);
    Operand hi = Operand::number(0.0);
    bool lo_open = false;
    bool hi_open = false;

    static Interval unbounded();
    bool is_unbounded() const;

    bool operator==(const Interval&) const = default;
};

enum class Op { True, Atom, Not, And, Or, Finally, Globally, Until };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable formula node. Children: Not/Finally/Globally use lhs only,
// And/Or/Until use lhs and rhs.
class Formula {
public:
    Op op = Op::True;
    std::optional<Atom> atom;        // op == Atom
    std::optional<Interval> window;  // Finally / Globally / Until
    FormulaPtr lhs, rhs;

    static FormulaPtr truth();
    static FormulaPtr make_atom(Atom a);
    static FormulaPtr negation(FormulaPtr f);
    static FormulaPtr conjunction(FormulaPtr l, FormulaPtr r);
    static FormulaPtr disjunction(FormulaPtr l, FormulaPtr r);
    static FormulaPtr finally(Interval w, FormulaPtr f);
    static FormulaPtr globally(Interval w, FormulaPtr f);
    static FormulaPtr until(Interval w, FormulaPtr l, FormulaPtr r);
};

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b);

// Operator-plus-atom symbol count (one per AST node).
int node_count(const FormulaPtr& f);

bool is_ground(const FormulaPtr& f);
std::set<std::string> referenced_params(const FormulaPtr& f);
std::set<std::string> referenced_channels(const FormulaPtr& f);

// Canonical text form; parsing it back yields a structurally identical AST.
std::string pretty_print(const FormulaPtr& f);
std::string to_string(const Atom& a);

// ---- templates ---------------------------------------------------------------

enum class ParamKind { Value, Time };

struct ParameterDecl {
    std::string name;
    ParamKind kind = ParamKind::Value;
    int polarity = +1;  // +1: larger is weaker, -1: larger is stronger
    double lo = 0.0;
    double hi = 1.0;
    double epsilon = 0.01;  // bisection precision
};

// PSTL template: formula with parameter references plus the declarations,
// whose order is the lexicographic priority (first = highest).
struct PSTLTemplate {
    std::string name;
    FormulaPtr formula;
    std::vector<ParameterDecl> params;

    int param_index(std::string_view name) const;
};

// Builds and validates a template from formula text plus declarations.
// Errors: syntax error with position, undeclared parameter, unreferenced
// declaration, reversed constant interval bounds, bad domains/epsilon,
// empty declaration list.
PSTLTemplate make_template(std::string name, std::string_view formula_text,
                           std::vector<ParameterDecl> decls);

// Parses the template file format: optional comment lines (#...), a
// `params:` block of `name kind polarity lo hi epsilon` lines in priority
// order, then `formula:` followed by the formula text.
PSTLTemplate parse_template(std::string_view text, std::string name = "");
PSTLTemplate load_template(const std::string& path);

// Parses a ground formula (no parameter references allowed).
FormulaPtr parse_formula(std::string_view text);

// ---- instantiation -------------------------------------------------------

// Substitutes parameter values into every reference; purely syntactic.
// Requires a non-sentinel valuation covering all declared parameters with
// in-domain values.
FormulaPtr instantiate(const PSTLTemplate& tpl, const Valuation& v);

// Substitution on a bare formula; missing names throw. Used internally and
// by tests that instantiate subtrees.
FormulaPtr instantiate_formula(const FormulaPtr& f, const std::map<std::string, double>& values);

// ---- empirical polarity check ---------------------------------------------

struct PolarityCounterexample {
    std::string trace_id;
    Valuation nu;        // stronger valuation (satisfied)
    Valuation nu_prime;  // weaker valuation (violated)
};

struct PolarityReport {
    bool pass = true;
    std::vector<PolarityCounterexample> counterexamples;  // capped at 16
    std::vector<std::string> warnings;
    int pairs_checked = 0;

    std::string summary() const;
};

// Samples comparable valuation pairs (a coarse 3-point lattice per parameter
// plus n_samples random pairs per the seed) and checks that satisfaction
// transports from the stronger to the weaker valuation on every trace.
// Absence of a counterexample is evidence, not proof. n_samples must be >= 1.
PolarityReport validate_polarity(const PSTLTemplate& tpl, const TraceSet& ts, int n_samples,
                                 std::uint64_t seed);

}  // namespace stlmine
