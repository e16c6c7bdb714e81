#include <doctest.h>

#include <cmath>

#include <fkit/error.hpp>
#include <fkit/mtl.hpp>

#include "oracles.hpp"

using namespace fkit;

namespace {

Trace xtrace(std::vector<double> x, std::vector<double> times = {})
{
    if (times.empty())
        for (std::size_t i = 0; i < x.size(); ++i)
            times.push_back(static_cast<double>(i));
    return Trace(std::move(times), {{"x", std::move(x)}});
}

template <typename F>
ErrorKind kind_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an fkit::Error");
    return ErrorKind::InvalidArgument;
}

Predicate pred(std::vector<LinearTerm> terms, double c, bool strict = true)
{
    return Predicate{std::move(terms), c, strict};
}

} // namespace

TEST_CASE("comparisons desugar to positive atoms")
{
    const Formula f = parse_formula("G (x < 2.4 & y < 12)");
    const Formula expected = Formula::globally(
        {0, kInfinity}, Formula::conjunction(Formula::atom(pred({{"x", -1}}, 2.4)), Formula::atom(pred({{"y", -1}}, 12))));
    CHECK(f == expected);

    CHECK(parse_formula("F[0,5] (d > 15)") ==
          Formula::eventually({0, 5}, Formula::atom(pred({{"d", 1}}, -15))));
    CHECK(parse_formula("x >= 1") == Formula::atom(pred({{"x", 1}}, -1, false)));
    CHECK(parse_formula("2*x - y/2 + 1 < 3 - x").predicate() == pred({{"x", -3}, {"y", 0.5}}, 2));
}

TEST_CASE("parse errors")
{
    CHECK(kind_of([] { parse_formula("G[2,"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_formula("x >"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_formula("(x > 0"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_formula("G[3,1] x > 0"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_formula("x * y > 0"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_formula("H[0,1] x > 0"); }) == ErrorKind::UnknownOperator);
    CHECK(kind_of([] { parse_formula("x == 0"); }) == ErrorKind::UnknownOperator);
    CHECK(kind_of([] { parse_formula("x > 0 ^ y > 0"); }) == ErrorKind::UnknownOperator);
    try {
        parse_formula("x > 0 & & y > 1");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 8);
    }
}

TEST_CASE("printing round-trips through the parser")
{
    Rng rng(77);
    for (int i = 0; i < 300; ++i) {
        const Formula f = oracle::random_formula(rng, 4);
        CHECK(parse_formula(f.to_string()) == f);
    }
}

TEST_CASE("robustness examples")
{
    const Trace t = xtrace({1, 2, 3});
    CHECK(robustness(parse_formula("G(x > 0)"), t) == 1.0);
    CHECK(robustness(parse_formula("F(x > 2.5)"), t) == 0.5);
    CHECK(satisfies(parse_formula("G(x > 0)"), t));
    CHECK(robustness(parse_formula("G[1,1](x > 0)"), t) == 2.0);
    CHECK(robustness(parse_formula("x > 0 U[0,2] x > 2.5"), t) == 0.5);
    CHECK(robustness(parse_formula("x > 1.5 U x > 2.5"), t) == -0.5);
    CHECK(robustness(parse_formula("x > 0 -> x > 5"), t) == -1.0);
    CHECK(robustness(parse_formula("abs(x - 2) <= 0.5"), t) == -0.5);
    CHECK(robustness(parse_formula("abs(x) > 0.5"), t) == 0.5);
}

TEST_CASE("strictness decides the Boolean verdict at zero")
{
    const Trace t = xtrace({1});
    CHECK(robustness(parse_formula("x > 1"), t) == 0.0);
    CHECK_FALSE(satisfies(parse_formula("x > 1"), t));
    CHECK(satisfies(parse_formula("x >= 1"), t));
}

TEST_CASE("empty windows are vacuous")
{
    const Trace t = xtrace({1, 1, 1, 1, 1, 1});
    const Formula f = parse_formula("F[10,20](x > 0)");
    CHECK(std::isinf(robustness(f, t)));
    CHECK(robustness(f, t) < 0);
    CHECK_FALSE(satisfies(f, t));
    const Formula g = parse_formula("G[10,20](x > 5)");
    CHECK(robustness(g, t) == kInfinity);
    CHECK(satisfies(g, t));
    CHECK(robustness(parse_formula("x > 0 U[10,20] x > 0"), t) == -kInfinity);
}

TEST_CASE("evaluation errors")
{
    const Trace t = xtrace({1, 2});
    CHECK(kind_of([&] { robustness(parse_formula("y > 0"), t); }) == ErrorKind::UnknownSignal);
    CHECK(kind_of([&] { robustness(parse_formula("x > 0"), t, 2); }) == ErrorKind::IndexOutOfRange);
    CHECK(kind_of([] { Trace({}, {}); }) == ErrorKind::EmptyTrace);
    CHECK(kind_of([] { Trace({0, 0}, {{"x", {1, 2}}}); }) == ErrorKind::InvalidTrace);
    CHECK(kind_of([] { Trace({0, 1}, {{"x", {1}}}); }) == ErrorKind::InvalidTrace);
    CHECK(kind_of([] { Trace({0}, {{"x", {NAN}}}); }) == ErrorKind::InvalidTrace);
}

TEST_CASE("agreement with the recursive oracle at every index")
{
    Rng rng(2024);
    for (int n = 0; n < 400; ++n) {
        const Formula f = oracle::random_formula(rng, 4);
        const Trace t = oracle::random_trace(rng);
        const auto sig = robustness_signal(f, t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double expected = oracle::rob(f, t, i);
            REQUIRE(sig[i] == expected);
            CHECK(robustness(f, t, i) == expected);
            CHECK(satisfies(f, t, i) == oracle::sat(f, t, i));
            if (expected > 0)
                CHECK(satisfies(f, t, i));
            if (expected < 0)
                CHECK_FALSE(satisfies(f, t, i));
        }
    }
}

TEST_CASE("algebraic laws")
{
    Rng rng(99);
    for (int n = 0; n < 300; ++n) {
        const Formula a = oracle::random_formula(rng, 3);
        const Formula b = oracle::random_formula(rng, 3);
        const Trace t = oracle::random_trace(rng);
        CHECK(robustness(Formula::negation(a), t) == -robustness(a, t));
        CHECK(robustness(Formula::negation(Formula::conjunction(a, b)), t) ==
              robustness(Formula::disjunction(Formula::negation(a), Formula::negation(b)), t));
        const double lo = 0.5 * static_cast<double>(rng.index(3));
        const double hi = lo + 0.5 * static_cast<double>(rng.index(4));
        const double wider = hi + 1.0;
        CHECK(robustness(Formula::globally({lo, wider}, a), t) <= robustness(Formula::globally({lo, hi}, a), t));
        CHECK(robustness(Formula::eventually({lo, wider}, a), t) >= robustness(Formula::eventually({lo, hi}, a), t));
    }
}

TEST_CASE("shifting every signal shifts unit-coefficient robustness")
{
    Rng rng(5);
    for (int n = 0; n < 200; ++n) {
        // G/F nestings of atoms x - k > 0
        Formula f = Formula::atom(pred({{"x", 1}}, -0.5 * static_cast<double>(rng.index(5))));
        for (int d = 0; d < 3; ++d) {
            const auto w = oracle::random_window(rng);
            const Formula g = Formula::atom(pred({{"y", 1}}, -0.5 * static_cast<double>(rng.index(5))));
            switch (rng.index(4)) {
            case 0:
                f = Formula::globally(w, f);
                break;
            case 1:
                f = Formula::eventually(w, f);
                break;
            case 2:
                f = Formula::conjunction(f, g);
                break;
            default:
                f = Formula::disjunction(f, g);
            }
        }
        const Trace t = oracle::random_trace(rng);
        const double r = robustness(f, t);
        if (std::isinf(r))
            continue;
        std::map<std::string, std::vector<double>> shifted = t.signals();
        for (auto& [name, v] : shifted)
            for (double& s : v)
                s += 0.25;
        CHECK(robustness(f, Trace(t.times(), shifted)) == r + 0.25);
    }
}
