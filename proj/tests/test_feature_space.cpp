#include <doctest.h>

#include <fkit/error.hpp>
#include <fkit/feature_space.hpp>

using namespace fkit;

namespace {

FeatureSpace pos_color_space(std::vector<Constraint> constraints = {})
{
    auto root = Domain::structure({{"pos", Domain::box({0, 0}, {1, 1})},
                                   {"color", Domain::finite_set({"red", "orange"})}});
    return FeatureSpace::build(root, {}, std::move(constraints));
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

} // namespace

TEST_CASE("struct of box and set gets uniform defaults on three leaves")
{
    const auto space = pos_color_space();
    REQUIRE(space.ordered().size() == 2);
    REQUIRE(space.unordered().size() == 1);
    for (const auto& leaf : space.ordered())
        CHECK(std::holds_alternative<UniformDistribution>(leaf.distribution));
    CHECK(space.unordered()[0].weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("domain validation")
{
    CHECK(kind_of([] { Domain::box({1}, {1}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::box({0, 0}, {1}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::box({0}, {INFINITY}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::finite_set({}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::finite_set({"a", "a"}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::array(Domain::interval(0, 1), 0); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] { Domain::structure({}); }) == ErrorKind::InvalidDomain);
    CHECK(kind_of([] {
              Domain::structure({{"a", Domain::interval(0, 1)}, {"a", Domain::interval(0, 1)}});
          }) == ErrorKind::InvalidDomain);
}

TEST_CASE("distribution on a missing path is dangling")
{
    auto root = Domain::structure({{"pos", Domain::box({0, 0}, {1, 1})}});
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"pos.z", UniformDistribution{}}}); }) ==
          ErrorKind::DanglingPath);
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"pos", UniformDistribution{}}}); }) == ErrorKind::DanglingPath);
    CHECK(kind_of([&] { FeatureSpace::build(root, {}, {Constraint::parse("pos.2 > 0")}); }) ==
          ErrorKind::DanglingPath);
}

TEST_CASE("distribution parameters are validated")
{
    auto root = Domain::structure({{"v", Domain::interval(0, 1)}, {"c", Domain::finite_set({"a", "b"})}});
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"v.0", TruncatedNormalDistribution{0.5, 0.0}}}); }) ==
          ErrorKind::InvalidDistribution);
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"c", CategoricalDistribution{{1.0}}}}); }) ==
          ErrorKind::InvalidDistribution);
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"c", CategoricalDistribution{{0.0, 0.0}}}}); }) ==
          ErrorKind::InvalidDistribution);
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"c", CategoricalDistribution{{-1.0, 2.0}}}}); }) ==
          ErrorKind::InvalidDistribution);
    CHECK(kind_of([&] { FeatureSpace::build(root, {{"v.0", CategoricalDistribution{{1.0}}}}); }) ==
          ErrorKind::InvalidDistribution);
}

TEST_CASE("dimensions enumerate leaves depth first")
{
    const auto space = pos_color_space();
    const auto dims = space.dimensions();
    CHECK(dims.ordered == std::vector<LeafPath>{"pos.0", "pos.1"});
    CHECK(dims.unordered == std::vector<LeafPath>{"color"});

    const auto arr = FeatureSpace::build(Domain::array(Domain::interval(0, 1), 3));
    CHECK(arr.dimensions().ordered == std::vector<LeafPath>{"0.0", "1.0", "2.0"});
    CHECK(arr.dimensions().unordered.empty());

    const auto set_only = FeatureSpace::build(Domain::finite_set({1.0, 2.0}));
    CHECK(set_only.dimensions().ordered.empty());
    CHECK(set_only.dimensions().unordered == std::vector<LeafPath>{"root"});

    const auto box_root = FeatureSpace::build(Domain::box({0, 0}, {1, 1}));
    CHECK(box_root.dimensions().ordered == std::vector<LeafPath>{"0", "1"});

    auto nested = Domain::structure(
        {{"cars", Domain::array(Domain::structure({{"heading", Domain::interval(-1, 1)},
                                                    {"model", Domain::finite_set({"a", "b"})}}),
                                2)},
         {"time", Domain::interval(0, 24)}});
    const auto ns = FeatureSpace::build(nested);
    CHECK(ns.dimensions().ordered == std::vector<LeafPath>{"cars.0.heading.0", "cars.1.heading.0", "time.0"});
    CHECK(ns.dimensions().unordered == std::vector<LeafPath>{"cars.0.model", "cars.1.model"});
    // stable across calls
    CHECK(ns.dimensions().ordered == ns.dimensions().ordered);
}

TEST_CASE("flatten and unflatten")
{
    const auto space = pos_color_space();
    Point p;
    p.values = {{"pos.0", 0.2}, {"pos.1", 0.7}, {"color", Atom("orange")}};
    const FlatPoint flat = space.flatten(p);
    CHECK(flat.reals.size() == 2);
    CHECK(flat.reals[0] == 0.2);
    CHECK(flat.reals[1] == 0.7);
    CHECK(flat.atoms == std::vector<Atom>{"orange"});
    CHECK(space.unflatten(flat) == p);

    Point missing;
    missing.values = {{"pos.0", 0.2}, {"color", Atom("orange")}};
    CHECK(kind_of([&] { space.flatten(missing); }) == ErrorKind::PointSpaceMismatch);
    Point outside = p;
    outside.values["pos.0"] = 1.5;
    CHECK(kind_of([&] { space.flatten(outside); }) == ErrorKind::PointSpaceMismatch);
    Point bad_atom = p;
    bad_atom.values["color"] = Atom("blue");
    CHECK(kind_of([&] { space.flatten(bad_atom); }) == ErrorKind::PointSpaceMismatch);

    const auto unit = FeatureSpace::build(Domain::box({0}, {1}));
    CHECK(kind_of([&] { unit.unflatten(Eigen::VectorXd::Constant(1, 1.5), {}); }) == ErrorKind::OutOfRange);
    CHECK(kind_of([&] { space.unflatten(Eigen::VectorXd::Constant(1, 0.5), {"red"}); }) ==
          ErrorKind::LengthMismatch);
}

TEST_CASE("round trip over random points")
{
    const auto space = pos_color_space();
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Point p = space.sample_prior(rng);
        CHECK(space.unflatten(space.flatten(p)) == p);
        const FlatPoint f = space.flatten(p);
        CHECK(space.flatten(space.unflatten(f)) == f);
    }
}

TEST_CASE("prior sampling respects ranges and constraints")
{
    const auto unit = FeatureSpace::build(Domain::box({0}, {1}));
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const double v = unit.sample_prior(rng).real("0");
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }

    const auto constrained = pos_color_space({Constraint::parse("pos.0 < pos.1")});
    for (int i = 0; i < 500; ++i) {
        const Point p = constrained.sample_prior(rng);
        CHECK(p.real("pos.0") < p.real("pos.1"));
    }

    const auto impossible = pos_color_space({Constraint::parse("pos.0 < pos.0")});
    CHECK(kind_of([&] { impossible.sample_prior(rng); }) == ErrorKind::RejectionBudgetExhausted);
}

TEST_CASE("truncated normal stays inside the leaf")
{
    auto root = Domain::structure({{"v", Domain::interval(-1, 2)}});
    const auto space = FeatureSpace::build(root, {{"v.0", TruncatedNormalDistribution{1.8, 3.0}}});
    Rng rng(5);
    double sum = 0;
    for (int i = 0; i < 2000; ++i) {
        const double v = space.sample_prior(rng).real("v.0");
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 2.0);
        sum += v;
    }
    CHECK(sum / 2000 > 0.5); // skewed toward the mean 1.8
}

TEST_CASE("degenerate categorical weights")
{
    auto root = Domain::structure({{"c", Domain::finite_set({"a", "b"})}});
    const auto space = FeatureSpace::build(root, {{"c", CategoricalDistribution{{1.0, 0.0}}}});
    Rng rng(1);
    for (int i = 0; i < 100; ++i)
        CHECK(space.sample_prior(rng).atom("c") == Atom("a"));
}

TEST_CASE("categorical constraints compare atoms")
{
    auto root = Domain::structure({{"speed", Domain::interval(0, 10)}, {"weather", Domain::finite_set({"sun", "rain"})}});
    const auto space = FeatureSpace::build(root, {}, {Constraint::parse("weather == \"sun\" | speed.0 < 3")});
    Rng rng(9);
    for (int i = 0; i < 300; ++i) {
        const Point p = space.sample_prior(rng);
        CHECK((p.atom("weather") == Atom("sun") || p.real("speed.0") < 3));
    }
}

TEST_CASE("constraint grammar")
{
    Point p;
    p.values = {{"a.0", 1.0}, {"b.0", 2.0}, {"c", Atom("x")}};
    CHECK(Constraint::parse("a.0 + b.0 * 2 == 5").holds(p));
    CHECK(Constraint::parse("a.0 <= 1 and b.0 >= 2").holds(p));
    CHECK(Constraint::parse("not (a.0 > b.0)").holds(p));
    CHECK(Constraint::parse("!(c != 'x') || a.0 > 5").holds(p));
    CHECK_FALSE(Constraint::parse("-a.0 > 0").holds(p));
    CHECK(Constraint::parse("(a.0 - b.0) / 2 == -0.5").holds(p));
    CHECK(kind_of([] { Constraint::parse("a.0 <"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { Constraint::parse("a.0 < 1 $ 2"); }) == ErrorKind::UnknownOperator);
}

TEST_CASE("signature depends only on the domain tree")
{
    auto root = Domain::structure({{"pos", Domain::box({0, 0}, {1, 1})}, {"color", Domain::finite_set({"red", "orange"})}});
    const auto a = FeatureSpace::build(root);
    const auto b = FeatureSpace::build(root, {{"color", CategoricalDistribution{{1, 3}}}}, {Constraint::parse("pos.0 < 0.5")});
    CHECK(a.signature() == b.signature());
    CHECK(a.signature() == R"(struct{pos:box[0:1,0:1],color:set["red","orange"]})");
    const auto c = FeatureSpace::build(Domain::structure({{"pos", Domain::box({0, 0}, {1, 2})}, {"color", Domain::finite_set({"red", "orange"})}}));
    CHECK(a.signature() != c.signature());
}

TEST_CASE("unit coordinates")
{
    const auto space = FeatureSpace::build(Domain::box({-2, 10}, {2, 20}));
    Eigen::VectorXd x(2);
    x << 0.0, 12.5;
    const Eigen::VectorXd u = space.to_unit(x);
    CHECK(u[0] == doctest::Approx(0.5));
    CHECK(u[1] == doctest::Approx(0.25));
    CHECK(space.from_unit(u)[1] == doctest::Approx(12.5));
    Eigen::VectorXd outside(2);
    outside << 1.5, -0.5;
    const Eigen::VectorXd clamped = space.from_unit(outside);
    CHECK(clamped[0] == 2.0);
    CHECK(clamped[1] == 10.0);
}
