#include <fkit/mtl.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include <fkit/error.hpp>
#include <fkit/feature_space.hpp>

#include "lexer.hpp"

namespace fkit {

struct Formula::Node {
    Op op;
    Predicate predicate;
    TimeInterval window;
    std::vector<Formula> operands;
};

double Predicate::value(const Trace& trace, std::size_t i) const
{
    double v = constant;
    for (const auto& t : terms)
        v += t.coefficient * trace.signal(t.signal)[i];
    return v;
}

namespace {

void check_window(const TimeInterval& w)
{
    if (!(w.lo >= 0.0) || std::isnan(w.hi) || !(w.lo <= w.hi) || std::isinf(w.lo))
        throw Error(ErrorKind::InvalidArgument, "time window must satisfy 0 <= a <= b");
}

} // namespace

Formula Formula::atom(Predicate p)
{
    for (const auto& t : p.terms)
        if (t.signal.empty())
            throw Error(ErrorKind::InvalidArgument, "signal names must be non-empty");
    return Formula(std::make_shared<Node>(Node{Op::Atom, std::move(p), {}, {}}));
}

Formula Formula::negation(Formula f)
{
    return Formula(std::make_shared<Node>(Node{Op::Not, {}, {}, {std::move(f)}}));
}

Formula Formula::conjunction(Formula a, Formula b)
{
    return Formula(std::make_shared<Node>(Node{Op::And, {}, {}, {std::move(a), std::move(b)}}));
}

Formula Formula::disjunction(Formula a, Formula b)
{
    return Formula(std::make_shared<Node>(Node{Op::Or, {}, {}, {std::move(a), std::move(b)}}));
}

Formula Formula::implication(Formula a, Formula b)
{
    return Formula(std::make_shared<Node>(Node{Op::Implies, {}, {}, {std::move(a), std::move(b)}}));
}

Formula Formula::globally(TimeInterval window, Formula f)
{
    check_window(window);
    return Formula(std::make_shared<Node>(Node{Op::Globally, {}, window, {std::move(f)}}));
}

Formula Formula::eventually(TimeInterval window, Formula f)
{
    check_window(window);
    return Formula(std::make_shared<Node>(Node{Op::Eventually, {}, window, {std::move(f)}}));
}

Formula Formula::until(TimeInterval window, Formula lhs, Formula rhs)
{
    check_window(window);
    return Formula(std::make_shared<Node>(Node{Op::Until, {}, window, {std::move(lhs), std::move(rhs)}}));
}

Formula::Op Formula::op() const { return node_->op; }
const Predicate& Formula::predicate() const { return node_->predicate; }
const TimeInterval& Formula::window() const { return node_->window; }
const std::vector<Formula>& Formula::operands() const { return node_->operands; }

bool operator==(const Formula& a, const Formula& b)
{
    if (a.node_ == b.node_)
        return true;
    return a.op() == b.op() && a.predicate() == b.predicate() && a.window() == b.window() &&
           a.operands() == b.operands();
}

std::set<std::string> Formula::signals() const
{
    std::set<std::string> out;
    if (op() == Op::Atom)
        for (const auto& t : predicate().terms)
            out.insert(t.signal);
    for (const auto& f : operands())
        out.merge(f.signals());
    return out;
}

std::size_t Formula::depth() const
{
    std::size_t d = 0;
    for (const auto& f : operands())
        d = std::max(d, f.depth());
    return d + 1;
}

namespace {

std::string window_text(const TimeInterval& w)
{
    return "[" + format_real(w.lo) + "," + (std::isinf(w.hi) ? std::string("inf") : format_real(w.hi)) + "]";
}

} // namespace

std::string Formula::to_string() const
{
    switch (op()) {
    case Op::Atom: {
        const Predicate& p = predicate();
        std::string s = "(" + format_real(p.constant);
        for (const auto& t : p.terms)
            s += " + " + format_real(t.coefficient) + " * " + t.signal;
        return s + (p.strict ? " > 0)" : " >= 0)");
    }
    case Op::Not: return "!" + operands()[0].to_string();
    case Op::And: return "(" + operands()[0].to_string() + " & " + operands()[1].to_string() + ")";
    case Op::Or: return "(" + operands()[0].to_string() + " | " + operands()[1].to_string() + ")";
    case Op::Implies: return "(" + operands()[0].to_string() + " -> " + operands()[1].to_string() + ")";
    case Op::Globally: return "G" + window_text(window()) + " " + operands()[0].to_string();
    case Op::Eventually: return "F" + window_text(window()) + " " + operands()[0].to_string();
    case Op::Until:
        return "(" + operands()[0].to_string() + " U" + window_text(window()) + " " + operands()[1].to_string() + ")";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Parser

namespace {

using detail::TokenKind;

struct Affine {
    std::vector<LinearTerm> terms;
    double constant = 0.0;

    bool is_constant() const { return terms.empty(); }

    Affine scaled(double k) const
    {
        Affine r{terms, constant * k};
        for (auto& t : r.terms)
            t.coefficient *= k;
        r.prune();
        return r;
    }

    void add(const Affine& o, double sign)
    {
        constant += sign * o.constant;
        for (const auto& t : o.terms) {
            auto it = std::find_if(terms.begin(), terms.end(), [&](const LinearTerm& x) { return x.signal == t.signal; });
            if (it == terms.end())
                terms.push_back({t.signal, sign * t.coefficient});
            else
                it->coefficient += sign * t.coefficient;
        }
        prune();
    }

    void prune()
    {
        std::erase_if(terms, [](const LinearTerm& t) { return t.coefficient == 0.0; });
    }
};

struct Side {
    Affine expr;
    bool abs = false;
};

class FormulaParser {
public:
    explicit FormulaParser(std::string_view text) : text_(text), cur_(detail::tokenize(text)) {}

    Formula parse()
    {
        Formula f = parse_implies();
        if (cur_.peek().kind != TokenKind::End)
            cur_.fail("unexpected trailing input");
        return f;
    }

private:
    Formula parse_implies()
    {
        Formula lhs = parse_or();
        if (cur_.accept("->"))
            return Formula::implication(lhs, parse_implies());
        return lhs;
    }

    Formula parse_or()
    {
        Formula lhs = parse_and();
        while (cur_.accept("|") || cur_.accept("||"))
            lhs = Formula::disjunction(lhs, parse_and());
        return lhs;
    }

    Formula parse_and()
    {
        Formula lhs = parse_until();
        while (cur_.accept("&") || cur_.accept("&&"))
            lhs = Formula::conjunction(lhs, parse_until());
        return lhs;
    }

    Formula parse_until()
    {
        Formula lhs = parse_unary();
        while (cur_.at_ident("U")) {
            cur_.next();
            TimeInterval w = parse_window();
            lhs = Formula::until(w, lhs, parse_unary());
        }
        return lhs;
    }

    Formula parse_unary()
    {
        if (cur_.accept("!"))
            return Formula::negation(parse_unary());
        if (cur_.at_ident("G") || cur_.at_ident("F")) {
            const bool always = cur_.next().text == "G";
            TimeInterval w = parse_window();
            Formula f = parse_unary();
            return always ? Formula::globally(w, f) : Formula::eventually(w, f);
        }
        const detail::Token& t = cur_.peek();
        if (t.kind == TokenKind::Ident && t.text != "abs" && t.text != "inf" &&
            (cur_.peek(1).kind == TokenKind::Punct && (cur_.peek(1).text == "[" || cur_.peek(1).text == "(")))
            throw ParseError(ErrorKind::UnknownOperator, "unknown operator '" + t.text + "'", t.pos);
        if (t.kind == TokenKind::Ident && (t.text == "U"))
            throw ParseError(ErrorKind::ParseError, "'U' needs a left operand", t.pos);
        return parse_primary();
    }

    Formula parse_primary()
    {
        if (cur_.at_punct("(")) {
            // Either a parenthesised formula or a comparison whose left side
            // starts with '('. Try the comparison first.
            detail::TokenCursor saved = cur_;
            try {
                return parse_comparison();
            } catch (const ParseError&) {
                cur_ = saved;
            }
            cur_.expect("(");
            Formula f = parse_implies();
            cur_.expect(")");
            return f;
        }
        return parse_comparison();
    }

    TimeInterval parse_window()
    {
        TimeInterval w;
        if (!cur_.accept("["))
            return w;
        w.lo = parse_bound();
        cur_.expect(",");
        w.hi = parse_bound();
        cur_.expect("]");
        if (!(w.lo <= w.hi) || std::isinf(w.lo))
            cur_.fail("time window needs 0 <= a <= b");
        return w;
    }

    double parse_bound()
    {
        const detail::Token& t = cur_.peek();
        if (t.kind == TokenKind::Number)
            return cur_.next().number;
        if (t.kind == TokenKind::Ident && t.text == "inf") {
            cur_.next();
            return kInfinity;
        }
        cur_.fail("expected a non-negative time bound");
    }

    Formula parse_comparison()
    {
        const std::size_t pos = cur_.peek().pos;
        Side lhs = parse_side();
        std::string rel;
        for (std::string_view r : {"<=", ">=", "<", ">"}) {
            if (cur_.accept(r)) {
                rel = r;
                break;
            }
        }
        if (rel.empty()) {
            if (cur_.at_punct("==") || cur_.at_punct("!="))
                throw ParseError(ErrorKind::UnknownOperator, "equality is not an MTL atom", cur_.peek().pos);
            cur_.fail("expected a comparison operator");
        }
        Side rhs = parse_side();
        if (lhs.abs && rhs.abs)
            throw ParseError(ErrorKind::ParseError, "abs() on both sides is not affine", pos);

        const bool strict = rel == "<" || rel == ">";
        const bool greater = rel[0] == '>';
        // Normalise to: big REL' small where REL' is > / >=.
        Side big = greater ? lhs : rhs;
        Side small = greater ? rhs : lhs;
        auto pred = [strict](const Affine& hi, const Affine& lo) {
            Affine d = hi;
            d.add(lo, -1.0);
            return Formula::atom(Predicate{d.terms, d.constant, strict});
        };
        if (big.abs) {
            // |e| > s  <=>  e > s  |  -e > s
            return Formula::disjunction(pred(big.expr, small.expr), pred(big.expr.scaled(-1.0), small.expr));
        }
        if (small.abs) {
            // b > |e|  <=>  b > e  &  b > -e
            return Formula::conjunction(pred(big.expr, small.expr), pred(big.expr, small.expr.scaled(-1.0)));
        }
        return pred(big.expr, small.expr);
    }

    Side parse_side()
    {
        if (cur_.at_ident("abs")) {
            const std::size_t pos = cur_.peek().pos;
            cur_.next();
            cur_.expect("(");
            Affine inner = parse_sum();
            cur_.expect(")");
            if (cur_.at_punct("+") || cur_.at_punct("-") || cur_.at_punct("*") || cur_.at_punct("/"))
                throw ParseError(ErrorKind::ParseError, "abs() must form a whole side of a comparison", pos);
            return {inner, true};
        }
        return {parse_sum(), false};
    }

    Affine parse_sum()
    {
        Affine lhs = parse_product();
        for (;;) {
            if (cur_.accept("+"))
                lhs.add(parse_product(), 1.0);
            else if (cur_.accept("-"))
                lhs.add(parse_product(), -1.0);
            else
                return lhs;
        }
    }

    Affine parse_product()
    {
        Affine lhs = parse_factor();
        for (;;) {
            const std::size_t pos = cur_.peek().pos;
            if (cur_.accept("*")) {
                Affine rhs = parse_factor();
                if (lhs.is_constant())
                    lhs = rhs.scaled(lhs.constant);
                else if (rhs.is_constant())
                    lhs = lhs.scaled(rhs.constant);
                else
                    throw ParseError(ErrorKind::ParseError, "product of two signals is not affine", pos);
            } else if (cur_.accept("/")) {
                Affine rhs = parse_factor();
                if (!rhs.is_constant() || rhs.constant == 0.0)
                    throw ParseError(ErrorKind::ParseError, "division must be by a non-zero constant", pos);
                lhs = lhs.scaled(1.0 / rhs.constant);
            } else {
                return lhs;
            }
        }
    }

    Affine parse_factor()
    {
        if (cur_.accept("-"))
            return parse_factor().scaled(-1.0);
        if (cur_.accept("+"))
            return parse_factor();
        const detail::Token& t = cur_.peek();
        if (t.kind == TokenKind::Number)
            return Affine{{}, cur_.next().number};
        if (t.kind == TokenKind::Ident) {
            if (t.text == "G" || t.text == "F" || t.text == "U")
                cur_.fail("temporal operator inside an arithmetic expression");
            if (t.text == "abs")
                throw ParseError(ErrorKind::ParseError, "abs() must form a whole side of a comparison", t.pos);
            if (cur_.peek(1).kind == TokenKind::Punct && cur_.peek(1).text == "(")
                throw ParseError(ErrorKind::UnknownOperator, "unknown function '" + t.text + "'", t.pos);
            return Affine{{{cur_.next().text, 1.0}}, 0.0};
        }
        if (cur_.accept("(")) {
            Affine inner = parse_sum();
            cur_.expect(")");
            return inner;
        }
        cur_.fail("expected a number, signal name or '('");
    }

    std::string_view text_;
    detail::TokenCursor cur_;
};

} // namespace

Formula parse_formula(std::string_view text)
{
    return FormulaParser(text).parse();
}

// ---------------------------------------------------------------------------
// Semantics

namespace {

void check_inputs(const Formula& phi, const Trace& trace, std::optional<std::size_t> t_index)
{
    if (trace.size() == 0)
        throw Error(ErrorKind::EmptyTrace, "trace has no samples");
    for (const auto& s : phi.signals())
        if (!trace.has_signal(s))
            throw Error(ErrorKind::UnknownSignal, "formula references signal '" + s + "' absent from the trace");
    if (t_index && *t_index >= trace.size())
        throw Error(ErrorKind::IndexOutOfRange,
                    "index " + std::to_string(*t_index) + " beyond trace of length " + std::to_string(trace.size()));
}

// Bottom-up evaluation over all sample indices. Window membership is decided
// on the exact difference times[j] - times[i].
template <typename T, typename Combine>
std::vector<T> window_fold(const Trace& trace, const TimeInterval& w, const std::vector<T>& s, T init, Combine combine)
{
    const auto& t = trace.times();
    const std::size_t n = t.size();
    std::vector<T> out(n, init);
    for (std::size_t i = 0; i < n; ++i) {
        T acc = init;
        for (std::size_t j = i; j < n; ++j) {
            const double d = t[j] - t[i];
            if (d > w.hi)
                break;
            if (d >= w.lo)
                acc = combine(acc, s[j]);
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> eval_robustness(const Formula& phi, const Trace& trace)
{
    const std::size_t n = trace.size();
    std::vector<double> out(n);
    const auto& ops = phi.operands();
    switch (phi.op()) {
    case Formula::Op::Atom:
        for (std::size_t i = 0; i < n; ++i)
            out[i] = phi.predicate().value(trace, i);
        return out;
    case Formula::Op::Not: {
        auto a = eval_robustness(ops[0], trace);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = -a[i];
        return out;
    }
    case Formula::Op::And:
    case Formula::Op::Or:
    case Formula::Op::Implies: {
        auto a = eval_robustness(ops[0], trace);
        auto b = eval_robustness(ops[1], trace);
        for (std::size_t i = 0; i < n; ++i) {
            if (phi.op() == Formula::Op::And)
                out[i] = std::min(a[i], b[i]);
            else if (phi.op() == Formula::Op::Or)
                out[i] = std::max(a[i], b[i]);
            else
                out[i] = std::max(-a[i], b[i]);
        }
        return out;
    }
    case Formula::Op::Globally:
        return window_fold(trace, phi.window(), eval_robustness(ops[0], trace), kInfinity,
                           [](double x, double y) { return std::min(x, y); });
    case Formula::Op::Eventually:
        return window_fold(trace, phi.window(), eval_robustness(ops[0], trace), -kInfinity,
                           [](double x, double y) { return std::max(x, y); });
    case Formula::Op::Until: {
        auto a = eval_robustness(ops[0], trace);
        auto b = eval_robustness(ops[1], trace);
        const auto& t = trace.times();
        const TimeInterval& w = phi.window();
        for (std::size_t i = 0; i < n; ++i) {
            double best = -kInfinity;
            double prefix = kInfinity; // min of lhs over [i, j)
            for (std::size_t j = i; j < n; ++j) {
                const double d = t[j] - t[i];
                if (d > w.hi)
                    break;
                if (d >= w.lo)
                    best = std::max(best, std::min(b[j], prefix));
                prefix = std::min(prefix, a[j]);
            }
            out[i] = best;
        }
        return out;
    }
    }
    return out;
}

std::vector<char> eval_boolean(const Formula& phi, const Trace& trace)
{
    const std::size_t n = trace.size();
    std::vector<char> out(n);
    const auto& ops = phi.operands();
    switch (phi.op()) {
    case Formula::Op::Atom:
        for (std::size_t i = 0; i < n; ++i) {
            const double v = phi.predicate().value(trace, i);
            out[i] = phi.predicate().strict ? v > 0.0 : v >= 0.0;
        }
        return out;
    case Formula::Op::Not: {
        auto a = eval_boolean(ops[0], trace);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = !a[i];
        return out;
    }
    case Formula::Op::And:
    case Formula::Op::Or:
    case Formula::Op::Implies: {
        auto a = eval_boolean(ops[0], trace);
        auto b = eval_boolean(ops[1], trace);
        for (std::size_t i = 0; i < n; ++i) {
            if (phi.op() == Formula::Op::And)
                out[i] = a[i] && b[i];
            else if (phi.op() == Formula::Op::Or)
                out[i] = a[i] || b[i];
            else
                out[i] = !a[i] || b[i];
        }
        return out;
    }
    case Formula::Op::Globally:
        return window_fold<char>(trace, phi.window(), eval_boolean(ops[0], trace), 1,
                                 [](char x, char y) -> char { return x && y; });
    case Formula::Op::Eventually:
        return window_fold<char>(trace, phi.window(), eval_boolean(ops[0], trace), 0,
                                 [](char x, char y) -> char { return x || y; });
    case Formula::Op::Until: {
        auto a = eval_boolean(ops[0], trace);
        auto b = eval_boolean(ops[1], trace);
        const auto& t = trace.times();
        const TimeInterval& w = phi.window();
        for (std::size_t i = 0; i < n; ++i) {
            char holds = 0;
            for (std::size_t j = i; j < n && !holds; ++j) {
                const double d = t[j] - t[i];
                if (d > w.hi)
                    break;
                if (d >= w.lo && b[j])
                    holds = 1;
                if (!a[j])
                    break;
            }
            out[i] = holds;
        }
        return out;
    }
    }
    return out;
}

} // namespace

std::vector<double> robustness_signal(const Formula& phi, const Trace& trace)
{
    check_inputs(phi, trace, std::nullopt);
    return eval_robustness(phi, trace);
}

double robustness(const Formula& phi, const Trace& trace, std::size_t t_index)
{
    check_inputs(phi, trace, t_index);
    return eval_robustness(phi, trace)[t_index];
}

bool satisfies(const Formula& phi, const Trace& trace, std::size_t t_index)
{
    check_inputs(phi, trace, t_index);
    return eval_boolean(phi, trace)[t_index] != 0;
}

} // namespace fkit
