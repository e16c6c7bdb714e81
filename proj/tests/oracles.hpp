// Independent reference implementations used to check the library.
// Deliberately naive: direct recursion, brute force, textbook formulas.
#ifndef FKIT_TESTS_ORACLES_HPP
#define FKIT_TESTS_ORACLES_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <fkit/mtl.hpp>
#include <fkit/random.hpp>
#include <fkit/trace.hpp>

namespace oracle {

// Digit reversal via the textual base-b representation of the index.
inline double radical_inverse(std::uint64_t index, unsigned base)
{
    char buf[80];
    auto res = std::to_chars(buf, buf + sizeof buf, index, static_cast<int>(base));
    std::string digits(buf, res.ptr);
    if (digits == "0")
        return 0.0;
    std::reverse(digits.begin(), digits.end());
    std::uint64_t numerator = 0;
    std::from_chars(digits.data(), digits.data() + digits.size(), numerator, static_cast<int>(base));
    std::uint64_t denominator = 1;
    for (std::size_t i = 0; i < digits.size(); ++i)
        denominator *= base;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

// ---------------------------------------------------------------------------
// MTL: recursive evaluation straight from the definitions.

inline double atom_value(const fkit::Predicate& p, const fkit::Trace& tr, std::size_t i)
{
    double v = p.constant;
    for (const auto& term : p.terms)
        v += term.coefficient * tr.signal(term.signal)[i];
    return v;
}

inline bool in_window(const fkit::TimeInterval& w, double dt)
{
    return dt >= w.lo && dt <= w.hi;
}

inline double rob(const fkit::Formula& f, const fkit::Trace& tr, std::size_t i)
{
    using Op = fkit::Formula::Op;
    const double inf = std::numeric_limits<double>::infinity();
    const auto& t = tr.times();
    switch (f.op()) {
    case Op::Atom:
        return atom_value(f.predicate(), tr, i);
    case Op::Not:
        return -rob(f.operands()[0], tr, i);
    case Op::And:
        return std::min(rob(f.operands()[0], tr, i), rob(f.operands()[1], tr, i));
    case Op::Or:
        return std::max(rob(f.operands()[0], tr, i), rob(f.operands()[1], tr, i));
    case Op::Implies:
        return std::max(-rob(f.operands()[0], tr, i), rob(f.operands()[1], tr, i));
    case Op::Globally: {
        double r = inf;
        for (std::size_t j = i; j < t.size(); ++j)
            if (in_window(f.window(), t[j] - t[i]))
                r = std::min(r, rob(f.operands()[0], tr, j));
        return r;
    }
    case Op::Eventually: {
        double r = -inf;
        for (std::size_t j = i; j < t.size(); ++j)
            if (in_window(f.window(), t[j] - t[i]))
                r = std::max(r, rob(f.operands()[0], tr, j));
        return r;
    }
    case Op::Until: {
        double r = -inf;
        for (std::size_t j = i; j < t.size(); ++j) {
            if (!in_window(f.window(), t[j] - t[i]))
                continue;
            double v = rob(f.operands()[1], tr, j);
            for (std::size_t k = i; k < j; ++k)
                v = std::min(v, rob(f.operands()[0], tr, k));
            r = std::max(r, v);
        }
        return r;
    }
    }
    return 0.0;
}

inline bool sat(const fkit::Formula& f, const fkit::Trace& tr, std::size_t i)
{
    using Op = fkit::Formula::Op;
    const auto& t = tr.times();
    switch (f.op()) {
    case Op::Atom: {
        const double v = atom_value(f.predicate(), tr, i);
        return f.predicate().strict ? v > 0 : v >= 0;
    }
    case Op::Not:
        return !sat(f.operands()[0], tr, i);
    case Op::And:
        return sat(f.operands()[0], tr, i) && sat(f.operands()[1], tr, i);
    case Op::Or:
        return sat(f.operands()[0], tr, i) || sat(f.operands()[1], tr, i);
    case Op::Implies:
        return !sat(f.operands()[0], tr, i) || sat(f.operands()[1], tr, i);
    case Op::Globally:
        for (std::size_t j = i; j < t.size(); ++j)
            if (in_window(f.window(), t[j] - t[i]) && !sat(f.operands()[0], tr, j))
                return false;
        return true;
    case Op::Eventually:
        for (std::size_t j = i; j < t.size(); ++j)
            if (in_window(f.window(), t[j] - t[i]) && sat(f.operands()[0], tr, j))
                return true;
        return false;
    case Op::Until:
        for (std::size_t j = i; j < t.size(); ++j) {
            if (!in_window(f.window(), t[j] - t[i]) || !sat(f.operands()[1], tr, j))
                continue;
            bool held = true;
            for (std::size_t k = i; k < j; ++k)
                held = held && sat(f.operands()[0], tr, k);
            if (held)
                return true;
        }
        return false;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Random corpora

inline const std::vector<std::string>& signal_names()
{
    static const std::vector<std::string> names = {"x", "y", "z"};
    return names;
}

// Small integer-valued samples and times make exact ties (robustness 0)
// and window-edge hits common.
inline fkit::Trace random_trace(fkit::Rng& rng, std::size_t max_len = 20)
{
    const std::size_t n = 1 + rng.index(max_len);
    std::vector<double> times;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        times.push_back(t);
        t += 0.5 * static_cast<double>(1 + rng.index(3));
    }
    std::map<std::string, std::vector<double>> signals;
    for (const auto& name : signal_names()) {
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i)
            v.push_back(static_cast<double>(static_cast<int>(rng.index(11)) - 5) * 0.5);
        signals[name] = std::move(v);
    }
    return fkit::Trace(std::move(times), std::move(signals));
}

inline fkit::TimeInterval random_window(fkit::Rng& rng)
{
    const double lo = 0.5 * static_cast<double>(rng.index(4));
    if (rng.index(3) == 0)
        return {lo, fkit::kInfinity};
    return {lo, lo + 0.5 * static_cast<double>(rng.index(6))};
}

inline fkit::Formula random_formula(fkit::Rng& rng, std::size_t depth)
{
    using fkit::Formula;
    if (depth <= 1 || rng.index(4) == 0) {
        fkit::Predicate p;
        const std::size_t nterms = 1 + rng.index(2);
        // distinct signals, nonzero coefficients: the canonical form the parser produces
        const std::size_t first = rng.index(3);
        for (std::size_t k = 0; k < nterms; ++k) {
            const double c = static_cast<double>(static_cast<int>(rng.index(4)) - 2);
            p.terms.push_back({signal_names()[(first + k) % 3], c >= 0 ? c + 1 : c});
        }
        p.constant = 0.5 * static_cast<double>(static_cast<int>(rng.index(9)) - 4);
        p.strict = rng.index(2) == 0;
        return Formula::atom(std::move(p));
    }
    const std::size_t d = depth - 1;
    const std::size_t op = rng.index(8);
    // operands drawn in a fixed order
    Formula a = random_formula(rng, d);
    if (op == 0)
        return Formula::negation(a);
    if (op == 4)
        return Formula::globally(random_window(rng), a);
    if (op == 5)
        return Formula::eventually(random_window(rng), a);
    Formula b = random_formula(rng, d);
    switch (op) {
    case 1:
        return Formula::conjunction(a, b);
    case 2:
        return Formula::disjunction(a, b);
    case 3:
        return Formula::implication(a, b);
    default:
        return Formula::until(random_window(rng), a, b);
    }
}

// ---------------------------------------------------------------------------
// Linear algebra

// Eigenpairs of a symmetric 2x2 matrix [[a, b], [b, c]], larger eigenvalue first.
struct Eigen2 {
    double lambda1, lambda2;
    double v1x, v1y; // unit eigenvector of lambda1
};

inline Eigen2 symmetric_eigen2(double a, double b, double c)
{
    const double mean = 0.5 * (a + c);
    const double r = std::hypot(0.5 * (a - c), b);
    Eigen2 e{mean + r, mean - r, 1.0, 0.0};
    if (b != 0.0) {
        e.v1x = e.lambda1 - c;
        e.v1y = b;
    } else if (c > a) {
        e.v1x = 0.0;
        e.v1y = 1.0;
    }
    const double n = std::hypot(e.v1x, e.v1y);
    e.v1x /= n;
    e.v1y /= n;
    return e;
}

// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col]))
                piv = r;
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k)
                a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k)
            s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

// 1-D GP posterior mean with an SE kernel and a zero prior mean; targets are
// scaled by their root mean square, so the noise term acts in those units.
inline double gp_mean_1d(const std::vector<double>& xs, const std::vector<double>& ys, double length_scale,
                         double noise, double x)
{
    const std::size_t n = xs.size();
    double ms = 0.0;
    for (double y : ys)
        ms += y * y;
    ms /= static_cast<double>(n);
    const double scale = ms > 0 ? std::sqrt(ms) : 1.0;
    auto k = [&](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b) / (length_scale * length_scale)); };
    std::vector<std::vector<double>> K(n, std::vector<double>(n));
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            K[i][j] = k(xs[i], xs[j]) + (i == j ? noise : 0.0);
        rhs[i] = ys[i] / scale;
    }
    const auto alpha = solve(K, rhs);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m += k(xs[i], x) * alpha[i];
    return scale * m;
}

} // namespace oracle

#endif
