#include "stlmine/formula.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "detail_util.hpp"
#include "parser_internal.hpp"
#include "stlmine/projection.hpp"
#include "stlmine/rng.hpp"
#include "stlmine/semantics.hpp"

namespace stlmine {

using detail::format_double;

// ---- node constructors ------------------------------------------------------

Interval Interval::unbounded() {
    Interval w;
    w.lo = Operand::number(0.0);
    w.hi = Operand::number(std::numeric_limits<double>::infinity());
    w.lo_open = false;
    w.hi_open = true;
    return w;
}

bool Interval::is_unbounded() const {
    return !lo.is_param() && !hi.is_param() && lo.value == 0.0 && !lo_open &&
           std::isinf(hi.value) && hi_open;
}

static FormulaPtr make_node(Formula f) { return std::make_shared<const Formula>(std::move(f)); }

FormulaPtr Formula::truth() { return make_node(Formula{Op::True, {}, {}, nullptr, nullptr}); }

FormulaPtr Formula::make_atom(Atom a) {
    return make_node(Formula{Op::Atom, std::move(a), {}, nullptr, nullptr});
}

FormulaPtr Formula::negation(FormulaPtr f) {
    return make_node(Formula{Op::Not, {}, {}, std::move(f), nullptr});
}

FormulaPtr Formula::conjunction(FormulaPtr l, FormulaPtr r) {
    return make_node(Formula{Op::And, {}, {}, std::move(l), std::move(r)});
}

FormulaPtr Formula::disjunction(FormulaPtr l, FormulaPtr r) {
    return make_node(Formula{Op::Or, {}, {}, std::move(l), std::move(r)});
}

FormulaPtr Formula::finally(Interval w, FormulaPtr f) {
    return make_node(Formula{Op::Finally, {}, std::move(w), std::move(f), nullptr});
}

FormulaPtr Formula::globally(Interval w, FormulaPtr f) {
    return make_node(Formula{Op::Globally, {}, std::move(w), std::move(f), nullptr});
}

FormulaPtr Formula::until(Interval w, FormulaPtr l, FormulaPtr r) {
    return make_node(Formula{Op::Until, {}, std::move(w), std::move(l), std::move(r)});
}

// ---- traversals -------------------------------------------------------------

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op != b->op) return false;
    if (a->atom != b->atom) return false;
    if (a->window != b->window) return false;
    return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
}

int node_count(const FormulaPtr& f) {
    if (!f) return 0;
    return 1 + node_count(f->lhs) + node_count(f->rhs);
}

template <typename Fn>
static void visit(const FormulaPtr& f, Fn&& fn) {
    if (!f) return;
    fn(*f);
    visit(f->lhs, fn);
    visit(f->rhs, fn);
}

bool is_ground(const FormulaPtr& f) { return referenced_params(f).empty(); }

std::set<std::string> referenced_params(const FormulaPtr& f) {
    std::set<std::string> out;
    visit(f, [&](const Formula& n) {
        if (n.atom && n.atom->rhs.is_param()) out.insert(n.atom->rhs.param);
        if (n.window) {
            if (n.window->lo.is_param()) out.insert(n.window->lo.param);
            if (n.window->hi.is_param()) out.insert(n.window->hi.param);
        }
    });
    return out;
}

std::set<std::string> referenced_channels(const FormulaPtr& f) {
    std::set<std::string> out;
    visit(f, [&](const Formula& n) {
        if (n.atom)
            for (const auto& t : n.atom->expr.terms)
                if (!t.channel.empty()) out.insert(t.channel);
    });
    return out;
}

// ---- pretty printing ----------------------------------------------------------

static std::string operand_text(const Operand& o) {
    return o.is_param() ? o.param : format_double(o.value);
}

static std::string interval_text(const Interval& w) {
    std::string s;
    s += w.lo_open ? '(' : '[';
    s += operand_text(w.lo);
    s += ", ";
    s += operand_text(w.hi);
    s += w.hi_open ? ')' : ']';
    return s;
}

static std::string expr_text(const LinExpr& e) {
    if (e.terms.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < e.terms.size(); ++i) {
        const Term& t = e.terms[i];
        double c = t.coef;
        if (i == 0) {
            if (c < 0) s += "-";
        } else {
            s += c < 0 ? " - " : " + ";
        }
        double mag = std::abs(c);
        if (t.channel.empty()) {
            s += format_double(mag);
        } else if (mag == 1.0) {
            s += t.channel;
        } else {
            s += format_double(mag) + "*" + t.channel;
        }
    }
    return s;
}

static const char* cmp_text(Cmp c) {
    switch (c) {
        case Cmp::Ge: return ">=";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Lt: return "<";
        case Cmp::Eq: return "=";
    }
    return "?";
}

std::string to_string(const Atom& a) {
    return expr_text(a.expr) + " " + cmp_text(a.cmp) + " " + operand_text(a.rhs);
}

// precedence: | = 1, & = 2, everything else binds tighter
static int precedence(const Formula& f) {
    switch (f.op) {
        case Op::Or: return 1;
        case Op::And: return 2;
        default: return 3;
    }
}

static std::string print(const Formula& f);

static std::string print_child(const FormulaPtr& child, int min_prec) {
    std::string s = print(*child);
    if (precedence(*child) < min_prec) return "(" + s + ")";
    return s;
}

static std::string print(const Formula& f) {
    switch (f.op) {
        case Op::True:
            return "true";
        case Op::Atom:
            return to_string(*f.atom);
        case Op::Not:
            return "!(" + print(*f.lhs) + ")";
        case Op::And:
            // right And child keeps parens so the printed tree re-parses with
            // the same association
            return print_child(f.lhs, 2) + " & " +
                   (f.rhs->op == Op::And ? "(" + print(*f.rhs) + ")" : print_child(f.rhs, 2));
        case Op::Or:
            return print_child(f.lhs, 1) + " | " +
                   (f.rhs->op == Op::Or ? "(" + print(*f.rhs) + ")" : print_child(f.rhs, 1));
        case Op::Finally:
        case Op::Globally: {
            std::string head = f.op == Op::Finally ? "F" : "G";
            if (!f.window->is_unbounded()) head += interval_text(*f.window);
            return head + "(" + print(*f.lhs) + ")";
        }
        case Op::Until:
            return "U" + interval_text(*f.window) + "(" + print(*f.lhs) + ", " + print(*f.rhs) +
                   ")";
    }
    return "?";
}

std::string pretty_print(const FormulaPtr& f) {
    if (!f) throw ContractError("null formula");
    return print(*f);
}

// ---- template assembly ---------------------------------------------------------

int PSTLTemplate::param_index(std::string_view name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return static_cast<int>(i);
    return -1;
}

static void validate_decl(const ParameterDecl& d) {
    if (d.name.empty()) throw ContractError("parameter with empty name");
    if (d.polarity != +1 && d.polarity != -1)
        throw ContractError("parameter '" + d.name + "': polarity must be + or -");
    if (!(d.lo < d.hi))
        throw ContractError("parameter '" + d.name + "': domain needs lo < hi");
    if (!(d.epsilon > 0.0))
        throw ContractError("parameter '" + d.name + "': epsilon must be > 0");
    if (!(d.epsilon < d.hi - d.lo))
        throw ContractError("parameter '" + d.name + "': epsilon must be < hi - lo");
}

PSTLTemplate make_template(std::string name, std::string_view formula_text,
                           std::vector<ParameterDecl> decls) {
    if (decls.empty()) throw ContractError("no parameters declared");
    for (const auto& d : decls) validate_decl(d);
    for (std::size_t i = 0; i < decls.size(); ++i)
        for (std::size_t j = i + 1; j < decls.size(); ++j)
            if (decls[i].name == decls[j].name)
                throw ContractError("parameter '" + decls[i].name + "' declared twice");

    PSTLTemplate tpl;
    tpl.name = std::move(name);
    tpl.params = std::move(decls);
    tpl.formula = parse_formula_with_params(formula_text, tpl.params);

    auto used = referenced_params(tpl.formula);
    for (const auto& d : tpl.params)
        if (!used.count(d.name))
            throw ContractError("declared parameter '" + d.name + "' is never referenced");
    return tpl;
}

// ---- instantiation ----------------------------------------------------------

static Operand subst(const Operand& o, const std::map<std::string, double>& values) {
    if (!o.is_param()) return o;
    auto it = values.find(o.param);
    if (it == values.end())
        throw ContractError("missing assignment for parameter '" + o.param + "'");
    return Operand::number(it->second);
}

FormulaPtr instantiate_formula(const FormulaPtr& f, const std::map<std::string, double>& values) {
    if (!f) return nullptr;
    Formula out;
    out.op = f->op;
    if (f->atom) {
        Atom a = *f->atom;
        a.rhs = subst(a.rhs, values);
        out.atom = std::move(a);
    }
    if (f->window) {
        Interval w = *f->window;
        w.lo = subst(w.lo, values);
        w.hi = subst(w.hi, values);
        out.window = w;
    }
    out.lhs = instantiate_formula(f->lhs, values);
    out.rhs = instantiate_formula(f->rhs, values);
    return std::make_shared<const Formula>(std::move(out));
}

FormulaPtr instantiate(const PSTLTemplate& tpl, const Valuation& v) {
    if (v.is_sentinel()) throw ContractError("cannot instantiate a sentinel valuation");
    if (v.size() != tpl.params.size())
        throw ContractError("valuation covers " + std::to_string(v.size()) + " of " +
                            std::to_string(tpl.params.size()) + " parameters");
    std::map<std::string, double> values;
    for (std::size_t i = 0; i < tpl.params.size(); ++i) {
        const auto& d = tpl.params[i];
        double x = v[i];
        if (x < d.lo || x > d.hi)
            throw ContractError("parameter '" + d.name + "' value " + format_double(x) +
                                " outside domain [" + format_double(d.lo) + ", " +
                                format_double(d.hi) + "]");
        values[d.name] = x;
    }
    return instantiate_formula(tpl.formula, values);
}

// ---- empirical polarity check --------------------------------------------------

std::string PolarityReport::summary() const {
    std::ostringstream os;
    if (pass)
        os << "no violation found (" << pairs_checked << " pairs)";
    else
        os << counterexamples.size() << " counterexample(s) in " << pairs_checked << " pairs";
    for (const auto& w : warnings) os << "\nwarning: " << w;
    return os.str();
}

PolarityReport validate_polarity(const PSTLTemplate& tpl, const TraceSet& ts, int n_samples,
                                 std::uint64_t seed) {
    if (n_samples < 1) throw ContractError("validate_polarity: n_samples must be >= 1");

    PolarityReport report;
    visit(tpl.formula, [&](const Formula& n) {
        if (n.atom && n.atom->cmp == Cmp::Eq && n.atom->rhs.is_param())
            report.warnings.push_back("equality atom on parameter '" + n.atom->rhs.param +
                                      "' is polarity-hostile");
    });

    ParameterSpace ps(tpl);
    std::size_t n = ps.size();

    // Coarse deterministic lattice (lo/mid/hi per parameter, 2-point when
    // wide) to pin obvious violations regardless of the seed.
    std::vector<std::vector<double>> levels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = ps.decl(i);
        levels[i] = {d.lo, 0.5 * (d.lo + d.hi), d.hi};
        if (n > 5) levels[i] = {d.lo, d.hi};
    }
    std::vector<Valuation> lattice;
    std::vector<double> cur(n, 0.0);
    std::function<void(std::size_t)> build = [&](std::size_t i) {
        if (lattice.size() >= 243) return;
        if (i == n) {
            lattice.push_back(Valuation::point(cur));
            return;
        }
        for (double v : levels[i]) {
            cur[i] = v;
            build(i + 1);
        }
    };
    build(0);

    std::vector<std::pair<Valuation, Valuation>> pairs;
    for (std::size_t i = 0; i < lattice.size() && pairs.size() < 256; ++i)
        for (std::size_t j = i + 1; j < lattice.size() && pairs.size() < 256; ++j) {
            if (param_leq(lattice[i], lattice[j], ps))
                pairs.emplace_back(lattice[i], lattice[j]);
            else if (param_leq(lattice[j], lattice[i], ps))
                pairs.emplace_back(lattice[j], lattice[i]);
        }

    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& d = ps.decl(i);
            a[i] = rng.uniform(d.lo, d.hi);
            // Slide toward the weak bound: guarantees nu <= nu'.
            b[i] = a[i] + rng.uniform() * (ps.weak_bound(i) - a[i]);
        }
        pairs.emplace_back(Valuation::point(std::move(a)), Valuation::point(std::move(b)));
    }

    report.pairs_checked = static_cast<int>(pairs.size());
    for (const auto& [nu, nu_prime] : pairs) {
        FormulaPtr strong = instantiate(tpl, nu);
        FormulaPtr weak = instantiate(tpl, nu_prime);
        for (const auto& [id, trace] : ts.traces) {
            if (satisfies(trace, strong) && !satisfies(trace, weak)) {
                report.pass = false;
                if (report.counterexamples.size() < 16)
                    report.counterexamples.push_back({id, nu, nu_prime});
            }
        }
    }
    return report;
}

}  // namespace stlmine
