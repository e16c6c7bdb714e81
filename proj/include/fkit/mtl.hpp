#ifndef FKIT_MTL_HPP
#define FKIT_MTL_HPP

#include <cstddef>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fkit/trace.hpp>

namespace fkit {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Closed time window [lo, hi] in seconds, hi may be infinite.
struct TimeInterval {
    double lo = 0.0;
    double hi = kInfinity;

    bool contains(double dt) const { return dt >= lo && dt <= hi; }
    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

struct LinearTerm {
    std::string signal;
    double coefficient;
    friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

/// Atomic proposition `constant + sum(coefficient * signal) > 0` (or >= 0 when
/// not strict). The strictness only matters for the Boolean verdict at 0.
struct Predicate {
    std::vector<LinearTerm> terms;
    double constant = 0.0;
    bool strict = true;

    /// Left-to-right: constant, then each term in order.
    double value(const Trace& trace, std::size_t i) const;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Bounded metric temporal logic over named real signals. Immutable; subtrees
/// are shared.
class Formula {
public:
    enum class Op { Atom, Not, And, Or, Implies, Globally, Eventually, Until };

    static Formula atom(Predicate p);
    static Formula negation(Formula f);
    static Formula conjunction(Formula a, Formula b);
    static Formula disjunction(Formula a, Formula b);
    static Formula implication(Formula a, Formula b);
    static Formula globally(TimeInterval window, Formula f);
    static Formula eventually(TimeInterval window, Formula f);
    static Formula until(TimeInterval window, Formula lhs, Formula rhs);

    Op op() const;
    const Predicate& predicate() const;
    const TimeInterval& window() const;
    /// Operands: one for Not/Globally/Eventually, two otherwise (none for Atom).
    const std::vector<Formula>& operands() const;

    std::set<std::string> signals() const;
    std::size_t depth() const;

    /// Text accepted back by parse_formula.
    std::string to_string() const;

    friend bool operator==(const Formula& a, const Formula& b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    std::shared_ptr<const Node> node_;
};

/// Grammar, loosest binding first:
///
///     phi := phi -> phi | phi '|' phi | phi & phi | phi U[a,b] phi
///          | !phi | G[a,b] phi | F[a,b] phi | (phi) | cmp
///     cmp := expr (< | <= | > | >=) expr
///
/// Arithmetic must be affine in the signals. `abs(e) <= c` is accepted and
/// expands to a conjunction (disjunction for >). Windows default to [0, inf].
Formula parse_formula(std::string_view text);

/// Quantitative (space) robustness at sample t_index. Empty windows give
/// +inf for G and -inf for F and U.
double robustness(const Formula& phi, const Trace& trace, std::size_t t_index = 0);
/// Robustness at every sample index.
std::vector<double> robustness_signal(const Formula& phi, const Trace& trace);

/// Boolean semantics, computed directly.
bool satisfies(const Formula& phi, const Trace& trace, std::size_t t_index = 0);

} // namespace fkit

#endif
