#include <doctest.h>

#include <cmath>

#include <fkit/error.hpp>
#include <fkit/linalg.hpp>
#include <fkit/samplers.hpp>

#include "oracles.hpp"

using namespace fkit;

namespace {

FeatureSpace unit_box(std::size_t d)
{
    return FeatureSpace::build(Domain::box(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)));
}

FeatureSpace mixed_space()
{
    auto root = Domain::structure({{"pos", Domain::box({0, -2}, {1, 2})},
                                   {"color", Domain::finite_set({"red", "green", "blue"})}});
    return FeatureSpace::build(root, {}, {Constraint::parse("pos.0 + pos.1 < 1")});
}

Point one_d(const FeatureSpace& space, double x)
{
    Eigen::VectorXd v(1);
    v << x;
    return space.unflatten(v, {});
}

std::vector<SamplerSpec> all_specs()
{
    return {UniformSpec{}, HaltonSpec{}, AnnealingSpec{}, CrossEntropySpec{}, BayesOptSpec{}};
}

double score_of(const Point& p)
{
    double s = 0.0;
    for (const auto& [path, v] : p.values)
        if (const double* x = std::get_if<double>(&v))
            s += (*x - 0.3) * (*x - 0.3);
    return s;
}

} // namespace

TEST_CASE("halton matches the digit-reversal oracle")
{
    const auto space = unit_box(3);
    Sampler s(HaltonSpec{}, space, Rng(0));
    for (std::uint64_t k = 1; k <= 1000; ++k) {
        const FlatPoint p = space.flatten(s.next());
        REQUIRE(p.reals[0] == oracle::radical_inverse(k, 2));
        REQUIRE(p.reals[1] == oracle::radical_inverse(k, 3));
        REQUIRE(p.reals[2] == oracle::radical_inverse(k, 5));
        for (int i = 0; i < 3; ++i) {
            CHECK(p.reals[i] >= 0.0);
            CHECK(p.reals[i] < 1.0);
        }
    }
}

TEST_CASE("halton first points")
{
    CHECK(radical_inverse(1, 2) == 0.5);
    CHECK(radical_inverse(2, 2) == 0.25);
    CHECK(radical_inverse(3, 2) == 0.75);
    CHECK(radical_inverse(1, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(first_primes(5) == std::vector<std::uint32_t>{2, 3, 5, 7, 11});
}

TEST_CASE("halton maps an extra coordinate through the categorical CDF")
{
    const auto space = FeatureSpace::build(Domain::structure(
        {{"x", Domain::interval(0, 1)}, {"c", Domain::finite_set({"a", "b"})}}));
    Sampler s(HaltonSpec{}, space, Rng(0));
    for (std::uint64_t k = 1; k <= 20; ++k) {
        const Point p = s.next();
        const Atom expected = oracle::radical_inverse(k, 3) < 0.5 ? Atom("a") : Atom("b");
        CHECK(p.atom("c") == expected);
    }
}

TEST_CASE("degenerate categorical weights always pick the same value")
{
    auto root = Domain::finite_set({"a", "b"});
    const auto space = FeatureSpace::build(root, {{"root", CategoricalDistribution{{1.0, 0.0}}}});
    Sampler s(UniformSpec{}, space, Rng(3));
    for (int i = 0; i < 200; ++i)
        CHECK(s.next().atom("root") == Atom("a"));
}

TEST_CASE("passive samplers ignore feedback")
{
    const auto space = mixed_space();
    for (const SamplerSpec& spec : {SamplerSpec{UniformSpec{}}, SamplerSpec{HaltonSpec{}}}) {
        CHECK_FALSE(is_active(spec));
        SamplerState st = make_sampler_state(spec, space, Rng(11));
        for (int i = 0; i < 10; ++i) {
            auto [p, next] = next_point(st, space);
            const SamplerState after = observe(next, space, {p, -3.0 + i});
            CHECK(after == next);
            st = after;
        }
    }
    CHECK(is_active(AnnealingSpec{}));
    CHECK(is_active(CrossEntropySpec{}));
    CHECK(is_active(BayesOptSpec{}));
}

TEST_CASE("every sampler is deterministic and respects constraints")
{
    const auto space = mixed_space();
    for (const auto& spec : all_specs()) {
        CAPTURE(sampler_kind(spec));
        Sampler a(spec, space, Rng(42));
        Sampler b(spec, space, Rng(42));
        for (int i = 0; i < 60; ++i) {
            const Point pa = a.next();
            const Point pb = b.next();
            REQUIRE(pa == pb);
            CHECK(space.contains(pa));
            CHECK(space.satisfies_constraints(pa));
            a.observe({pa, score_of(pa)});
            b.observe({pb, score_of(pb)});
        }
        CHECK(a.state() == b.state());
    }
}

TEST_CASE("cross-entropy refit uses the lowest-scoring elite")
{
    const auto space = unit_box(1);
    CrossEntropySpec spec;
    spec.batch = 4;
    spec.elite_fraction = 0.5;
    spec.smoothing = 1.0;
    SamplerState st = make_sampler_state(spec, space, Rng(1));
    const double xs[] = {0.0, 0.1, 0.9, 1.0};
    const double ss[] = {5, 1, 9, 10};
    for (int i = 0; i < 4; ++i)
        st = observe(st, space, {one_d(space, xs[i]), ss[i]});
    const auto& ce = std::get<CrossEntropyState>(st);
    REQUIRE(ce.fitted);
    CHECK(ce.mean[0] == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(ce.stddev[0] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("cross-entropy stddev never drops below the floor")
{
    const auto space = FeatureSpace::build(Domain::box({0, 0}, {10, 10}));
    CrossEntropySpec spec;
    spec.batch = 5;
    spec.smoothing = 1.0;
    SamplerState st = make_sampler_state(spec, space, Rng(1));
    Eigen::VectorXd v(2);
    v << 3.0, 7.0;
    for (int i = 0; i < 5; ++i)
        st = observe(st, space, {space.unflatten(v, {}), double(i)});
    const auto& ce = std::get<CrossEntropyState>(st);
    CHECK(ce.mean[0] == doctest::Approx(0.3));
    CHECK(ce.mean[1] == doctest::Approx(0.7));
    CHECK(ce.stddev.minCoeff() >= spec.stddev_floor);
}

TEST_CASE("cross-entropy refit matches a hand-enumerated elite on random batches")
{
    const auto space = unit_box(2);
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        CrossEntropySpec spec;
        spec.batch = 10;
        spec.elite_fraction = 0.3;
        spec.smoothing = 1.0;
        SamplerState st = make_sampler_state(spec, space, Rng(trial));
        std::vector<std::pair<double, Eigen::VectorXd>> batch;
        for (int i = 0; i < 10; ++i) {
            Eigen::VectorXd v(2);
            v << rng.uniform(), rng.uniform();
            const double s = rng.uniform(-1, 1);
            batch.emplace_back(s, v);
            st = observe(st, space, {space.unflatten(v, {}), s});
        }
        std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Eigen::VectorXd m = (batch[0].second + batch[1].second + batch[2].second) / 3.0;
        const auto& ce = std::get<CrossEntropyState>(st);
        CHECK(ce.mean[0] == doctest::Approx(m[0]).epsilon(1e-12));
        CHECK(ce.mean[1] == doctest::Approx(m[1]).epsilon(1e-12));
    }
}

TEST_CASE("smoothed cross-entropy refit blends with the previous proposal")
{
    const auto space = unit_box(1);
    CrossEntropySpec spec;
    spec.batch = 4;
    spec.elite_fraction = 0.5;
    spec.smoothing = 0.7;
    SamplerState st = make_sampler_state(spec, space, Rng(1));
    const double xs[] = {0.0, 0.1, 0.9, 1.0};
    const double ss[] = {5, 1, 9, 10};
    for (int i = 0; i < 4; ++i)
        st = observe(st, space, {one_d(space, xs[i]), ss[i]});
    const auto& ce = std::get<CrossEntropyState>(st);
    CHECK(ce.mean[0] == doctest::Approx(0.7 * 0.05 + 0.3 * 0.5));
    CHECK(ce.stddev[0] == doctest::Approx(0.7 * 0.05 + 0.3 * 0.5));
}

TEST_CASE("metropolis acceptance")
{
    CHECK(metropolis_acceptance(0.0, 1.0) == 1.0);
    CHECK(metropolis_acceptance(-2.0, 1e-300) == 1.0);
    CHECK(metropolis_acceptance(0.5, 2.0) == doctest::Approx(std::exp(-0.25)));
    CHECK(metropolis_acceptance(1.0, 1e-300) == 0.0);
    CHECK(metropolis_acceptance(1.0, 0.0) == 0.0);
    CHECK(metropolis_acceptance(1.0, 1e300) == doctest::Approx(1.0));
    CHECK(metropolis_acceptance(1.0, INFINITY) == 1.0);
}

TEST_CASE("cold annealing never accepts a worse score")
{
    const auto space = unit_box(1);
    AnnealingSpec spec;
    spec.warmup = 1;
    SamplerState st = make_sampler_state(spec, space, Rng(4));
    st = observe(st, space, {one_d(space, 0.5), 1.0});
    std::get<AnnealingState>(st).temperature = 1e-300;
    for (int i = 0; i < 100; ++i) {
        st = observe(st, space, {one_d(space, 0.01 * i), 1.0 + 1e-3 * (i + 1)});
        CHECK(std::get<AnnealingState>(st).current_score == 1.0);
    }
    st = observe(st, space, {one_d(space, 0.9), 0.5});
    CHECK(std::get<AnnealingState>(st).current_score == 0.5);
}

TEST_CASE("annealing warmup sets the initial temperature")
{
    const auto space = unit_box(1);
    SamplerState st = make_sampler_state(AnnealingSpec{}, space, Rng(4));
    const double scores[] = {1, -2, 3, -4, 5};
    for (int i = 0; i < 5; ++i)
        st = observe(st, space, {one_d(space, 0.1 * i), scores[i]});
    const auto& a = std::get<AnnealingState>(st);
    CHECK(a.temperature == doctest::Approx(3.0));
    CHECK(a.current_score == -4.0);
}

TEST_CASE("bayesian optimization proposals")
{
    const auto space = FeatureSpace::build(Domain::interval(-1, 3));
    SUBCASE("single observation stays in bounds")
    {
        BayesOptState st = std::get<BayesOptState>(make_sampler_state(BayesOptSpec{}, space, Rng(2)));
        st.inputs.push_back(Eigen::VectorXd::Constant(1, 0.25));
        st.scores.push_back(1.0);
        const Eigen::VectorXd x = bo_propose(st, space);
        CHECK(x[0] >= -1.0);
        CHECK(x[0] <= 3.0);
    }
    SUBCASE("duplicate inputs with different scores")
    {
        BayesOptState st = std::get<BayesOptState>(make_sampler_state(BayesOptSpec{}, space, Rng(2)));
        for (double s : {1.0, 2.0, 3.0}) {
            st.inputs.push_back(Eigen::VectorXd::Constant(1, 0.5));
            st.scores.push_back(s);
        }
        CHECK_NOTHROW(bo_propose(st, space));
    }
}

TEST_CASE("GP posterior mean agrees with a direct linear-algebra oracle")
{
    const std::vector<double> xs = {0.0, 1.0};
    const std::vector<double> ys = {0.09, 0.49};
    GaussianProcess<double> gp(Eigen::VectorXd::Constant(1, 0.2), 1e-6);
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 1.0;
    Eigen::VectorXd y(2);
    y << 0.09, 0.49;
    gp.fit(x, y);
    for (int i = 0; i <= 1000; ++i) {
        const double g = i / 1000.0;
        const double expected = oracle::gp_mean_1d(xs, ys, 0.2, gp.jitter(), g);
        CHECK(gp.mean(Eigen::VectorXd::Constant(1, g)) == doctest::Approx(expected).epsilon(1e-9));
    }
    const double at = oracle::gp_mean_1d(xs, ys, 0.2, gp.jitter(), 0.3);
    CHECK(at < 0.09);
    CHECK(gp.mean(Eigen::VectorXd::Constant(1, 0.3)) < 0.09);
}

TEST_CASE("GP interpolates training scores")
{
    // inputs on a coarse grid so the kernel matrix is well conditioned
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 9;
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = 0.5 * (i % 3);
            x(i, 1) = 0.5 * (i / 3);
            y[i] = rng.uniform(-1, 1);
        }
        GaussianProcess<double> gp(Eigen::VectorXd::Constant(2, 0.2), 1e-8);
        gp.fit(x, y);
        const double scale = std::sqrt(y.squaredNorm() / n);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(gp.mean(x.row(i).transpose()) - y[i]) <= 10 * gp.jitter() * scale);
    }
}

TEST_CASE("GP fails with SingularKernel when jitter cannot help")
{
    GaussianProcess<double> gp(Eigen::VectorXd::Constant(1, 0.2), 1e-6, 1e-6);
    Eigen::MatrixXd x(2, 1);
    x << NAN, 0.0;
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    try {
        gp.fit(x, y);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularKernel);
    }
}

TEST_CASE("invalid sampler parameters are rejected")
{
    const auto space = unit_box(1);
    CrossEntropySpec ce;
    ce.batch = 1;
    CHECK_THROWS_AS(make_sampler_state(ce, space, Rng(0)), Error);
    ce = CrossEntropySpec{};
    ce.smoothing = 0.0;
    CHECK_THROWS_AS(make_sampler_state(ce, space, Rng(0)), Error);
    AnnealingSpec an;
    an.cooling = 1.5;
    CHECK_THROWS_AS(make_sampler_state(an, space, Rng(0)), Error);
    BayesOptSpec bo;
    bo.length_scale = 0;
    CHECK_THROWS_AS(make_sampler_state(bo, space, Rng(0)), Error);
}
