// Recursive-descent parser for the formula grammar and the template file
// format. Precedence: ! > & > |. F/G take an optional interval, U a
// mandatory one; open/closed ends via ( ) vs [ ].

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "detail_util.hpp"
#include "parser_internal.hpp"
#include "stlmine/formula.hpp"

namespace stlmine {

using detail::split;
using detail::trim;

namespace {

enum class Tok {
    End, LParen, RParen, LBracket, RBracket, Comma, Amp, Pipe, Bang,
    Plus, Minus, Star, Ge, Le, Gt, Lt, Eq, Ident, Number
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { tokenize(); }

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = idx_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }
    Token next() {
        Token t = peek();
        if (idx_ < tokens_.size() - 1) ++idx_;
        return t;
    }
    std::size_t mark() const { return idx_; }
    void rewind(std::size_t m) { idx_ = m; }

private:
    void tokenize() {
        std::size_t i = 0;
        while (i < src_.size()) {
            char c = src_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            Token t;
            t.pos = i;
            auto single = [&](Tok k) {
                t.kind = k;
                ++i;
            };
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && i + 1 < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
                const char* start = src_.data() + i;
                char* end = nullptr;
                t.number = std::strtod(start, &end);
                t.kind = Tok::Number;
                t.text.assign(start, static_cast<std::size_t>(end - start));
                i += static_cast<std::size_t>(end - start);
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t j = i;
                while (j < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_' ||
                        src_[j] == '.'))
                    ++j;
                t.kind = Tok::Ident;
                t.text = std::string(src_.substr(i, j - i));
                i = j;
            } else {
                switch (c) {
                    case '(': single(Tok::LParen); break;
                    case ')': single(Tok::RParen); break;
                    case '[': single(Tok::LBracket); break;
                    case ']': single(Tok::RBracket); break;
                    case ',': single(Tok::Comma); break;
                    case '&': single(Tok::Amp); break;
                    case '|': single(Tok::Pipe); break;
                    case '!': single(Tok::Bang); break;
                    case '+': single(Tok::Plus); break;
                    case '-': single(Tok::Minus); break;
                    case '*': single(Tok::Star); break;
                    case '>':
                        if (i + 1 < src_.size() && src_[i + 1] == '=') {
                            t.kind = Tok::Ge;
                            i += 2;
                        } else {
                            single(Tok::Gt);
                        }
                        break;
                    case '<':
                        if (i + 1 < src_.size() && src_[i + 1] == '=') {
                            t.kind = Tok::Le;
                            i += 2;
                        } else {
                            single(Tok::Lt);
                        }
                        break;
                    case '=': single(Tok::Eq); break;
                    default:
                        throw SyntaxError(i, std::string("unexpected character '") + c + "'");
                }
            }
            tokens_.push_back(std::move(t));
        }
        Token end;
        end.kind = Tok::End;
        end.pos = src_.size();
        tokens_.push_back(end);
    }

    std::string_view src_;
    std::vector<Token> tokens_;
    std::size_t idx_ = 0;
};

class Parser {
public:
    Parser(std::string_view text, const std::vector<ParameterDecl>* decls)
        : lex_(text), decls_(decls) {}

    FormulaPtr parse() {
        FormulaPtr f = parse_or();
        const Token& t = lex_.peek();
        if (t.kind != Tok::End) throw SyntaxError(t.pos, "trailing input");
        return f;
    }

private:
    [[noreturn]] void fail(const Token& t, const std::string& msg) {
        throw SyntaxError(t.pos, msg);
    }

    Token expect(Tok kind, const char* what) {
        Token t = lex_.next();
        if (t.kind != kind) fail(t, std::string("expected ") + what);
        return t;
    }

    bool is_param(const std::string& name) const {
        if (!decls_) return false;
        for (const auto& d : *decls_)
            if (d.name == name) return true;
        return false;
    }

    FormulaPtr parse_or() {
        FormulaPtr f = parse_and();
        while (lex_.peek().kind == Tok::Pipe) {
            lex_.next();
            f = Formula::disjunction(std::move(f), parse_and());
        }
        return f;
    }

    FormulaPtr parse_and() {
        FormulaPtr f = parse_unary();
        while (lex_.peek().kind == Tok::Amp) {
            lex_.next();
            f = Formula::conjunction(std::move(f), parse_unary());
        }
        return f;
    }

    FormulaPtr parse_unary() {
        if (lex_.peek().kind == Tok::Bang) {
            lex_.next();
            return Formula::negation(parse_unary());
        }
        return parse_primary();
    }

    FormulaPtr parse_primary() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Ident) {
            if (t.text == "true") {
                lex_.next();
                return Formula::truth();
            }
            if (t.text == "F" || t.text == "G") {
                bool is_f = t.text == "F";
                lex_.next();
                Interval w = parse_optional_interval();
                expect(Tok::LParen, "'('");
                FormulaPtr body = parse_or();
                expect(Tok::RParen, "')'");
                return is_f ? Formula::finally(w, std::move(body))
                            : Formula::globally(w, std::move(body));
            }
            if (t.text == "U") {
                lex_.next();
                Interval w = parse_interval();
                expect(Tok::LParen, "'('");
                FormulaPtr l = parse_or();
                expect(Tok::Comma, "','");
                FormulaPtr r = parse_or();
                expect(Tok::RParen, "')'");
                return Formula::until(w, std::move(l), std::move(r));
            }
            return parse_atom();
        }
        if (t.kind == Tok::LParen) {
            lex_.next();
            FormulaPtr f = parse_or();
            expect(Tok::RParen, "')'");
            return f;
        }
        if (t.kind == Tok::Number || t.kind == Tok::Minus) return parse_atom();
        fail(t, "expected formula");
    }

    // F and G may carry an interval; "F(" is ambiguous between an open-left
    // interval and an un-windowed body, so try the interval and back off.
    Interval parse_optional_interval() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::LBracket) return parse_interval();
        if (t.kind == Tok::LParen) {
            std::size_t m = lex_.mark();
            try {
                Interval w = parse_interval();
                if (lex_.peek().kind == Tok::LParen) return w;
            } catch (const SyntaxError&) {
            }
            lex_.rewind(m);
        }
        return Interval::unbounded();
    }

    Interval parse_interval() {
        Token open = lex_.next();
        if (open.kind != Tok::LBracket && open.kind != Tok::LParen)
            fail(open, "expected '[' or '('");
        Interval w;
        w.lo_open = open.kind == Tok::LParen;
        w.lo = parse_bound();
        expect(Tok::Comma, "','");
        w.hi = parse_bound();
        Token close = lex_.next();
        if (close.kind != Tok::RBracket && close.kind != Tok::RParen)
            fail(close, "expected ']' or ')'");
        w.hi_open = close.kind == Tok::RParen;
        if (!w.lo.is_param() && !w.hi.is_param()) {
            if (w.lo.value > w.hi.value) fail(close, "reversed interval bounds");
            if (w.lo.value == w.hi.value && (w.lo_open || w.hi_open))
                fail(close, "empty interval (equal bounds with an open end)");
            if (w.lo.value < 0.0) fail(close, "negative interval bound");
        }
        return w;
    }

    Operand parse_bound() {
        Token t = lex_.next();
        if (t.kind == Tok::Number) return Operand::number(t.number);
        if (t.kind == Tok::Ident) {
            if (!is_param(t.text))
                fail(t, decls_ ? "undeclared parameter '" + t.text + "'"
                               : "unknown parameter '" + t.text + "' in ground formula");
            return Operand::parameter(t.text);
        }
        fail(t, "expected number or parameter");
    }

    FormulaPtr parse_atom() {
        Atom a;
        a.expr = parse_expr();
        Token t = lex_.next();
        switch (t.kind) {
            case Tok::Ge: a.cmp = Cmp::Ge; break;
            case Tok::Le: a.cmp = Cmp::Le; break;
            case Tok::Gt: a.cmp = Cmp::Gt; break;
            case Tok::Lt: a.cmp = Cmp::Lt; break;
            case Tok::Eq: a.cmp = Cmp::Eq; break;
            default: fail(t, "expected comparison operator");
        }
        a.rhs = parse_rhs();
        return Formula::make_atom(std::move(a));
    }

    Operand parse_rhs() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Minus) {
            lex_.next();
            Token num = expect(Tok::Number, "number");
            return Operand::number(-num.number);
        }
        if (t.kind == Tok::Number) return Operand::number(lex_.next().number);
        if (t.kind == Tok::Ident) {
            Token id = lex_.next();
            if (!is_param(id.text)) {
                if (decls_) throw SyntaxError(id.pos, "undeclared parameter '" + id.text + "'");
                throw SyntaxError(id.pos, "unknown parameter '" + id.text + "' in ground formula");
            }
            return Operand::parameter(id.text);
        }
        fail(t, "expected number or parameter");
    }

    LinExpr parse_expr() {
        LinExpr e;
        bool neg = false;
        if (lex_.peek().kind == Tok::Minus) {
            lex_.next();
            neg = true;
        }
        e.terms.push_back(parse_term(neg));
        while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
            bool minus = lex_.next().kind == Tok::Minus;
            e.terms.push_back(parse_term(minus));
        }
        return e;
    }

    Term parse_term(bool negated) {
        Token t = lex_.next();
        Term term;
        if (t.kind == Tok::Number) {
            term.coef = t.number;
            if (lex_.peek().kind == Tok::Star) {
                lex_.next();
                Token id = expect(Tok::Ident, "channel name");
                term.channel = id.text;
            }
        } else if (t.kind == Tok::Ident) {
            term.coef = 1.0;
            term.channel = t.text;
        } else {
            fail(t, "expected term");
        }
        if (negated) term.coef = -term.coef;
        return term;
    }

    Lexer lex_;
    const std::vector<ParameterDecl>* decls_;  // nullptr => ground
};

}  // namespace

FormulaPtr parse_formula_with_params(std::string_view text,
                                     const std::vector<ParameterDecl>& decls) {
    Parser parser(text, &decls);
    return parser.parse();
}

FormulaPtr parse_formula(std::string_view text) {
    Parser parser(text, nullptr);
    return parser.parse();
}

// ---- template file format --------------------------------------------------

PSTLTemplate parse_template(std::string_view text, std::string name) {
    std::vector<ParameterDecl> decls;
    std::string formula_text;
    bool in_params = false, in_formula = false;

    std::size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(raw);
        if (in_formula) {
            formula_text += raw;
            formula_text += '\n';
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (line == "params:") {
            in_params = true;
            continue;
        }
        if (line == "formula:") {
            in_formula = true;
            continue;
        }
        if (!in_params) throw ParseError(name, lineno, "expected 'params:' block");

        std::istringstream fields(line);
        ParameterDecl d;
        std::string kind, polarity;
        if (!(fields >> d.name >> kind >> polarity >> d.lo >> d.hi >> d.epsilon))
            throw ParseError(name, lineno,
                             "expected 'name kind polarity lo hi epsilon', got '" + line + "'");
        std::string rest;
        if (fields >> rest) throw ParseError(name, lineno, "trailing field '" + rest + "'");
        if (kind == "value")
            d.kind = ParamKind::Value;
        else if (kind == "time")
            d.kind = ParamKind::Time;
        else
            throw ParseError(name, lineno, "kind must be 'value' or 'time', got '" + kind + "'");
        if (polarity == "+")
            d.polarity = +1;
        else if (polarity == "-")
            d.polarity = -1;
        else
            throw ParseError(name, lineno, "polarity must be '+' or '-', got '" + polarity + "'");
        decls.push_back(std::move(d));
    }
    if (!in_formula) throw ParseError(name, lineno, "missing 'formula:' section");
    return make_template(std::move(name), trim(formula_text), std::move(decls));
}

PSTLTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open template file");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string stem = path;
    if (auto slash = stem.find_last_of("/\\"); slash != std::string::npos)
        stem = stem.substr(slash + 1);
    if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
    try {
        return parse_template(buf.str(), stem);
    } catch (const SyntaxError& e) {
        throw ParseError(path, 0, e.what());
    } catch (const ContractError& e) {
        throw ParseError(path, 0, e.what());
    }
}

}  // namespace stlmine
