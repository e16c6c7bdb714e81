#include <fkit/feature_space.hpp>

#include <cmath>
#include <set>

#include <fkit/error.hpp>

#include "lexer.hpp"

namespace fkit {

struct ConstraintNode {
    enum class Kind { Number, String, Ref, Neg, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or, Not };

    Kind kind;
    double number = 0.0;
    std::string text; // string literal or leaf path
    std::vector<std::shared_ptr<const ConstraintNode>> args;

    bool is_boolean() const
    {
        return kind >= Kind::Lt;
    }
};

namespace {

using Node = ConstraintNode;
using NodePtr = std::shared_ptr<const Node>;
using detail::TokenKind;

NodePtr make(Node::Kind k, std::vector<NodePtr> args)
{
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
}

class ConstraintParser {
public:
    explicit ConstraintParser(std::string_view text) : cur_(detail::tokenize(text)) {}

    NodePtr parse()
    {
        NodePtr root = parse_or();
        if (cur_.peek().kind != TokenKind::End)
            cur_.fail("unexpected trailing input");
        if (!root->is_boolean())
            throw ParseError(ErrorKind::ParseError, "constraint must be a comparison or boolean combination", 0);
        return root;
    }

private:
    NodePtr boolean(NodePtr n, std::size_t pos)
    {
        if (!n->is_boolean())
            throw ParseError(ErrorKind::ParseError, "expected a boolean operand", pos);
        return n;
    }
    NodePtr value(NodePtr n, std::size_t pos)
    {
        if (n->is_boolean())
            throw ParseError(ErrorKind::ParseError, "expected an arithmetic operand", pos);
        return n;
    }

    NodePtr parse_or()
    {
        std::size_t pos = cur_.peek().pos;
        NodePtr lhs = parse_and();
        while (cur_.at_punct("|") || cur_.at_punct("||") || cur_.at_ident("or")) {
            cur_.next();
            std::size_t rpos = cur_.peek().pos;
            NodePtr rhs = parse_and();
            lhs = make(Node::Kind::Or, {boolean(lhs, pos), boolean(rhs, rpos)});
        }
        return lhs;
    }

    NodePtr parse_and()
    {
        std::size_t pos = cur_.peek().pos;
        NodePtr lhs = parse_not();
        while (cur_.at_punct("&") || cur_.at_punct("&&") || cur_.at_ident("and")) {
            cur_.next();
            std::size_t rpos = cur_.peek().pos;
            NodePtr rhs = parse_not();
            lhs = make(Node::Kind::And, {boolean(lhs, pos), boolean(rhs, rpos)});
        }
        return lhs;
    }

    NodePtr parse_not()
    {
        if (cur_.accept("!") || (cur_.at_ident("not") && (cur_.next(), true))) {
            std::size_t pos = cur_.peek().pos;
            return make(Node::Kind::Not, {boolean(parse_not(), pos)});
        }
        return parse_comparison();
    }

    NodePtr parse_comparison()
    {
        std::size_t pos = cur_.peek().pos;
        NodePtr lhs = parse_sum();
        static const std::pair<std::string_view, Node::Kind> ops[] = {
            {"<", Node::Kind::Lt}, {"<=", Node::Kind::Le}, {">", Node::Kind::Gt},
            {">=", Node::Kind::Ge}, {"==", Node::Kind::Eq}, {"!=", Node::Kind::Ne}};
        for (auto [text, kind] : ops) {
            if (cur_.accept(text)) {
                std::size_t rpos = cur_.peek().pos;
                NodePtr rhs = parse_sum();
                return make(kind, {value(lhs, pos), value(rhs, rpos)});
            }
        }
        return lhs;
    }

    NodePtr parse_sum()
    {
        std::size_t pos = cur_.peek().pos;
        NodePtr lhs = parse_product();
        for (;;) {
            Node::Kind k;
            if (cur_.accept("+"))
                k = Node::Kind::Add;
            else if (cur_.accept("-"))
                k = Node::Kind::Sub;
            else
                return lhs;
            std::size_t rpos = cur_.peek().pos;
            NodePtr rhs = parse_product();
            lhs = make(k, {value(lhs, pos), value(rhs, rpos)});
        }
    }

    NodePtr parse_product()
    {
        std::size_t pos = cur_.peek().pos;
        NodePtr lhs = parse_unary();
        for (;;) {
            Node::Kind k;
            if (cur_.accept("*"))
                k = Node::Kind::Mul;
            else if (cur_.accept("/"))
                k = Node::Kind::Div;
            else
                return lhs;
            std::size_t rpos = cur_.peek().pos;
            NodePtr rhs = parse_unary();
            lhs = make(k, {value(lhs, pos), value(rhs, rpos)});
        }
    }

    NodePtr parse_unary()
    {
        if (cur_.accept("-")) {
            std::size_t pos = cur_.peek().pos;
            return make(Node::Kind::Neg, {value(parse_unary(), pos)});
        }
        return parse_primary();
    }

    NodePtr parse_primary()
    {
        const detail::Token& t = cur_.peek();
        if (t.kind == TokenKind::Number) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Number;
            n->number = cur_.next().number;
            return n;
        }
        if (t.kind == TokenKind::String) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::String;
            n->text = cur_.next().text;
            return n;
        }
        if (t.kind == TokenKind::Ident) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Ref;
            n->text = cur_.next().text;
            return n;
        }
        if (cur_.accept("(")) {
            NodePtr inner = parse_or();
            cur_.expect(")");
            return inner;
        }
        cur_.fail("expected a number, string, leaf path or '('");
    }

    detail::TokenCursor cur_;
};

using Value = std::variant<double, Atom>;

Value eval_value(const Node& n, const Point& p)
{
    auto num = [&](const NodePtr& a) {
        Value v = eval_value(*a, p);
        if (auto d = std::get_if<double>(&v))
            return *d;
        const Atom& atom = std::get<Atom>(v);
        if (atom.is_number())
            return atom.as_number();
        throw Error(ErrorKind::InvalidArgument, "arithmetic on non-numeric atom '" + atom.to_string() + "'");
    };
    switch (n.kind) {
    case Node::Kind::Number: return n.number;
    case Node::Kind::String: return Atom(n.text);
    case Node::Kind::Ref: {
        auto it = p.values.find(n.text);
        if (it == p.values.end())
            throw Error(ErrorKind::PointSpaceMismatch, "constraint references missing leaf '" + n.text + "'");
        if (auto d = std::get_if<double>(&it->second))
            return *d;
        return std::get<Atom>(it->second);
    }
    case Node::Kind::Neg: return -num(n.args[0]);
    case Node::Kind::Add: return num(n.args[0]) + num(n.args[1]);
    case Node::Kind::Sub: return num(n.args[0]) - num(n.args[1]);
    case Node::Kind::Mul: return num(n.args[0]) * num(n.args[1]);
    case Node::Kind::Div: return num(n.args[0]) / num(n.args[1]);
    default: break;
    }
    throw Error(ErrorKind::InvalidArgument, "boolean node used as a value");
}

bool values_equal(const Value& a, const Value& b)
{
    auto as_atom = [](const Value& v) {
        if (auto d = std::get_if<double>(&v))
            return Atom(*d);
        return std::get<Atom>(v);
    };
    return as_atom(a) == as_atom(b);
}

bool eval_bool(const Node& n, const Point& p)
{
    auto num = [&](const NodePtr& a) {
        Value v = eval_value(*a, p);
        if (auto d = std::get_if<double>(&v))
            return *d;
        const Atom& atom = std::get<Atom>(v);
        if (atom.is_number())
            return atom.as_number();
        throw Error(ErrorKind::InvalidArgument, "ordering comparison on non-numeric atom");
    };
    switch (n.kind) {
    case Node::Kind::Lt: return num(n.args[0]) < num(n.args[1]);
    case Node::Kind::Le: return num(n.args[0]) <= num(n.args[1]);
    case Node::Kind::Gt: return num(n.args[0]) > num(n.args[1]);
    case Node::Kind::Ge: return num(n.args[0]) >= num(n.args[1]);
    case Node::Kind::Eq: return values_equal(eval_value(*n.args[0], p), eval_value(*n.args[1], p));
    case Node::Kind::Ne: return !values_equal(eval_value(*n.args[0], p), eval_value(*n.args[1], p));
    case Node::Kind::And: return eval_bool(*n.args[0], p) && eval_bool(*n.args[1], p);
    case Node::Kind::Or: return eval_bool(*n.args[0], p) || eval_bool(*n.args[1], p);
    case Node::Kind::Not: return !eval_bool(*n.args[0], p);
    default: break;
    }
    throw Error(ErrorKind::InvalidArgument, "value node used as a predicate");
}

// Classifies references: a Ref that takes part in arithmetic or an ordering
// comparison must be numeric; a Ref compared for equality with a string
// literal or used only in equalities with another Ref / number is recorded as
// categorical when the other side is a string.
void collect(const Node& n, bool numeric_context, std::set<LeafPath>& numeric, std::set<LeafPath>& categorical)
{
    switch (n.kind) {
    case Node::Kind::Ref:
        if (numeric_context)
            numeric.insert(n.text);
        return;
    case Node::Kind::Number:
    case Node::Kind::String: return;
    case Node::Kind::Eq:
    case Node::Kind::Ne: {
        const Node& a = *n.args[0];
        const Node& b = *n.args[1];
        for (auto [x, y] : {std::pair{&a, &b}, std::pair{&b, &a}}) {
            if (x->kind == Node::Kind::Ref && y->kind == Node::Kind::String)
                categorical.insert(x->text);
            else if (x->kind == Node::Kind::String && y->kind != Node::Kind::Ref)
                throw Error(ErrorKind::InvalidArgument, "string literal compared with arithmetic");
            else if (x->kind != Node::Kind::Ref)
                collect(*x, true, numeric, categorical);
        }
        return;
    }
    default: break;
    }
    const bool arithmetic = !n.is_boolean() || (n.kind >= Node::Kind::Lt && n.kind <= Node::Kind::Ge);
    for (const auto& a : n.args) {
        if (arithmetic && a->kind == Node::Kind::String)
            throw Error(ErrorKind::InvalidArgument, "string literal used arithmetically");
        collect(*a, arithmetic, numeric, categorical);
    }
}

void collect_all(const Node& n, std::set<LeafPath>& out)
{
    if (n.kind == Node::Kind::Ref)
        out.insert(n.text);
    for (const auto& a : n.args)
        collect_all(*a, out);
}

} // namespace

Constraint Constraint::parse(std::string_view text)
{
    ConstraintParser parser(text);
    NodePtr root = parser.parse();
    std::set<LeafPath> numeric, categorical;
    try {
        collect(*root, false, numeric, categorical);
    } catch (const Error& e) {
        throw ParseError(ErrorKind::ParseError, e.what(), 0);
    }
    return Constraint(std::move(root), std::string(text));
}

bool Constraint::holds(const Point& point) const
{
    return eval_bool(*root_, point);
}

std::vector<LeafPath> Constraint::numeric_references() const
{
    std::set<LeafPath> numeric, categorical;
    collect(*root_, false, numeric, categorical);
    return {numeric.begin(), numeric.end()};
}

std::vector<LeafPath> Constraint::references() const
{
    std::set<LeafPath> all;
    collect_all(*root_, all);
    return {all.begin(), all.end()};
}

std::vector<LeafPath> Constraint::categorical_references() const
{
    std::set<LeafPath> numeric, categorical;
    collect(*root_, false, numeric, categorical);
    return {categorical.begin(), categorical.end()};
}

} // namespace fkit
