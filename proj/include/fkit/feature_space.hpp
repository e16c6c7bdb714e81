#ifndef FKIT_FEATURE_SPACE_HPP
#define FKIT_FEATURE_SPACE_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include <fkit/random.hpp>

namespace fkit {

/// Element of a finite set: a string or a number. Unordered semantics.
class Atom {
public:
    Atom() = default;
    Atom(std::string s) : value_(std::move(s)) {}
    Atom(const char* s) : value_(std::string(s)) {}
    Atom(double x) : value_(x) {}

    bool is_string() const { return std::holds_alternative<std::string>(value_); }
    bool is_number() const { return std::holds_alternative<double>(value_); }
    const std::string& as_string() const { return std::get<std::string>(value_); }
    double as_number() const { return std::get<double>(value_); }

    /// Printable form: strings verbatim, numbers with 17 significant digits.
    std::string to_string() const;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;

private:
    std::variant<std::string, double> value_;
};

/// Leaf paths are dot-separated field names with zero-based array and box
/// indices, e.g. "cars.2.heading.0". A bare finite set at the root is "root".
using LeafPath = std::string;

inline constexpr std::string_view kRootLeafPath = "root";

class Domain;
using DomainPtr = std::shared_ptr<const Domain>;

/// Hierarchical description of a configuration space. Immutable; subtrees are
/// shared.
class Domain {
public:
    struct Box {
        std::vector<double> lo;
        std::vector<double> hi;
    };
    struct FiniteSet {
        std::vector<Atom> values;
    };
    struct Struct {
        std::vector<std::pair<std::string, DomainPtr>> fields;
    };
    struct Array {
        DomainPtr element;
        std::size_t length;
    };

    /// Factories validate their arguments and throw InvalidDomain.
    static DomainPtr box(std::vector<double> lo, std::vector<double> hi);
    static DomainPtr interval(double lo, double hi) { return box({lo}, {hi}); }
    static DomainPtr finite_set(std::vector<Atom> values);
    static DomainPtr structure(std::vector<std::pair<std::string, DomainPtr>> fields);
    static DomainPtr array(DomainPtr element, std::size_t length);

    const std::variant<Box, FiniteSet, Struct, Array>& node() const { return node_; }

    template <typename T>
    const T* as() const { return std::get_if<T>(&node_); }

private:
    explicit Domain(std::variant<Box, FiniteSet, Struct, Array> node) : node_(std::move(node)) {}

    std::variant<Box, FiniteSet, Struct, Array> node_;
};

struct UniformDistribution {
    friend bool operator==(const UniformDistribution&, const UniformDistribution&) = default;
};
/// Normal restricted to the leaf's [lo, hi] by rejection.
struct TruncatedNormalDistribution {
    double mean;
    double stddev;
    friend bool operator==(const TruncatedNormalDistribution&, const TruncatedNormalDistribution&) = default;
};
struct CategoricalDistribution {
    std::vector<double> weights;
    friend bool operator==(const CategoricalDistribution&, const CategoricalDistribution&) = default;
};

using DistributionSpec =
    std::variant<UniformDistribution, TruncatedNormalDistribution, CategoricalDistribution>;

using LeafValue = std::variant<double, Atom>;

/// Concrete assignment to every leaf of a feature space.
struct Point {
    std::map<LeafPath, LeafValue> values;

    double real(const LeafPath& path) const;
    const Atom& atom(const LeafPath& path) const;

    friend bool operator==(const Point&, const Point&) = default;
};

struct ConstraintNode;

/// Declarative predicate over a Point: arithmetic over box coordinates,
/// comparisons (<, <=, >, >=, ==, !=), and boolean connectives. Equality also
/// applies to finite-set leaves compared with literal atoms.
///
///     pos.0 < pos.1 & (color == "red" | speed.0 * 2 >= 3)
class Constraint {
public:
    static Constraint parse(std::string_view text);

    /// Evaluates on a point whose referenced leaves are present.
    bool holds(const Point& point) const;

    const std::string& text() const { return text_; }

    /// Leaf paths used in arithmetic (must be box coordinates) and in
    /// categorical equalities (must be finite-set leaves).
    std::vector<LeafPath> numeric_references() const;
    std::vector<LeafPath> references() const;
    std::vector<LeafPath> categorical_references() const;

private:
    Constraint(std::shared_ptr<const ConstraintNode> root, std::string text)
        : root_(std::move(root)), text_(std::move(text)) {}

    std::shared_ptr<const ConstraintNode> root_;
    std::string text_;
};

struct OrderedLeaf {
    LeafPath path;
    double lo;
    double hi;
    DistributionSpec distribution;

    double width() const { return hi - lo; }
};

struct UnorderedLeaf {
    LeafPath path;
    std::vector<Atom> values;
    /// Normalized categorical weights (uniform unless overridden).
    std::vector<double> weights;

    std::optional<std::size_t> index_of(const Atom& a) const;
};

struct Dimensions {
    std::vector<LeafPath> ordered;
    std::vector<LeafPath> unordered;
};

/// Real coordinates and categorical atoms of a point, in dimensions() order.
struct FlatPoint {
    Eigen::VectorXd reals;
    std::vector<Atom> atoms;

    friend bool operator==(const FlatPoint& a, const FlatPoint& b)
    {
        return a.reals.size() == b.reals.size() && (a.reals.array() == b.reals.array()).all() &&
               a.atoms == b.atoms;
    }
};

/// Validated search space: domain tree, per-leaf distributions, constraints.
/// Immutable after build and safe to share across threads.
class FeatureSpace {
public:
    static constexpr std::size_t kDefaultRejectionBudget = 10000;

    static FeatureSpace build(DomainPtr root,
                              const std::map<LeafPath, DistributionSpec>& distributions = {},
                              std::vector<Constraint> constraints = {},
                              std::size_t rejection_budget = kDefaultRejectionBudget);

    const Domain& root() const { return *root_; }
    const std::vector<OrderedLeaf>& ordered() const { return ordered_; }
    const std::vector<UnorderedLeaf>& unordered() const { return unordered_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    std::size_t rejection_budget() const { return rejection_budget_; }

    Dimensions dimensions() const;

    /// Throws PointSpaceMismatch when the point does not cover exactly this
    /// space's leaves with values of the right kind and range.
    FlatPoint flatten(const Point& point) const;
    Point unflatten(const Eigen::VectorXd& reals, const std::vector<Atom>& atoms) const;
    Point unflatten(const FlatPoint& flat) const { return unflatten(flat.reals, flat.atoms); }

    bool contains(const Point& point) const;
    bool satisfies_constraints(const Point& point) const;

    /// Product of leaf distributions, rejection-filtered through constraints.
    Point sample_prior(Rng& rng) const;
    /// One draw per leaf, constraints ignored.
    FlatPoint sample_leaves(Rng& rng) const;
    double sample_ordered_leaf(std::size_t i, Rng& rng) const;
    Atom sample_unordered_leaf(std::size_t i, Rng& rng) const;

    /// Coordinates rescaled to [0, 1] per ordered leaf, and back (clamped).
    Eigen::VectorXd to_unit(const Eigen::VectorXd& reals) const;
    Eigen::VectorXd from_unit(const Eigen::VectorXd& unit) const;
    Eigen::VectorXd widths() const;
    Eigen::VectorXd lower_bounds() const;
    Eigen::VectorXd upper_bounds() const;

    /// Canonical text form of the domain tree only.
    std::string signature() const;

private:
    FeatureSpace() = default;

    DomainPtr root_;
    std::vector<OrderedLeaf> ordered_;
    std::vector<UnorderedLeaf> unordered_;
    std::vector<Constraint> constraints_;
    std::size_t rejection_budget_ = kDefaultRejectionBudget;
};

std::string domain_signature(const Domain& domain);

/// %.17g rendering shared by every text output of the toolkit.
std::string format_real(double x);

} // namespace fkit

#endif
