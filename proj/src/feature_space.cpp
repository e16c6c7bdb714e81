#include <fkit/feature_space.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <fkit/error.hpp>

namespace fkit {

std::string format_real(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string Atom::to_string() const
{
    return is_string() ? as_string() : format_real(as_number());
}

double Point::real(const LeafPath& path) const
{
    auto it = values.find(path);
    if (it == values.end() || !std::holds_alternative<double>(it->second))
        throw Error(ErrorKind::PointSpaceMismatch, "no real value at '" + path + "'");
    return std::get<double>(it->second);
}

const Atom& Point::atom(const LeafPath& path) const
{
    auto it = values.find(path);
    if (it == values.end() || !std::holds_alternative<Atom>(it->second))
        throw Error(ErrorKind::PointSpaceMismatch, "no atom at '" + path + "'");
    return std::get<Atom>(it->second);
}

std::optional<std::size_t> UnorderedLeaf::index_of(const Atom& a) const
{
    auto it = std::find(values.begin(), values.end(), a);
    if (it == values.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - values.begin());
}

// ---------------------------------------------------------------------------
// Domain

DomainPtr Domain::box(std::vector<double> lo, std::vector<double> hi)
{
    if (lo.empty() || lo.size() != hi.size())
        throw Error(ErrorKind::InvalidDomain, "box bounds must be non-empty and of equal length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw Error(ErrorKind::InvalidDomain, "box bounds must be finite");
        if (!(lo[i] < hi[i]))
            throw Error(ErrorKind::InvalidDomain,
                        "box dimension " + std::to_string(i) + " has lo >= hi (" +
                            format_real(lo[i]) + ", " + format_real(hi[i]) + ")");
    }
    return DomainPtr(new Domain(Box{std::move(lo), std::move(hi)}));
}

DomainPtr Domain::finite_set(std::vector<Atom> values)
{
    if (values.empty())
        throw Error(ErrorKind::InvalidDomain, "finite set must be non-empty");
    for (const Atom& a : values)
        if (a.is_number() && !std::isfinite(a.as_number()))
            throw Error(ErrorKind::InvalidDomain, "finite set numbers must be finite");
    std::set<Atom> seen(values.begin(), values.end());
    if (seen.size() != values.size())
        throw Error(ErrorKind::InvalidDomain, "finite set values must be pairwise distinct");
    return DomainPtr(new Domain(FiniteSet{std::move(values)}));
}

DomainPtr Domain::structure(std::vector<std::pair<std::string, DomainPtr>> fields)
{
    if (fields.empty())
        throw Error(ErrorKind::InvalidDomain, "struct needs at least one field");
    std::set<std::string> names;
    for (const auto& [name, dom] : fields) {
        if (name.empty() || name.find('.') != std::string::npos)
            throw Error(ErrorKind::InvalidDomain, "invalid field name '" + name + "'");
        if (!dom)
            throw Error(ErrorKind::InvalidDomain, "field '" + name + "' has no domain");
        if (!names.insert(name).second)
            throw Error(ErrorKind::InvalidDomain, "duplicate field name '" + name + "'");
    }
    return DomainPtr(new Domain(Struct{std::move(fields)}));
}

DomainPtr Domain::array(DomainPtr element, std::size_t length)
{
    if (!element)
        throw Error(ErrorKind::InvalidDomain, "array has no element domain");
    if (length < 1)
        throw Error(ErrorKind::InvalidDomain, "array length must be >= 1");
    return DomainPtr(new Domain(Array{std::move(element), length}));
}

namespace {

std::string join_path(const std::string& prefix, const std::string& name)
{
    return prefix.empty() ? name : prefix + "." + name;
}

void collect_leaves(const Domain& d, const std::string& prefix, std::vector<OrderedLeaf>& ordered,
                    std::vector<UnorderedLeaf>& unordered)
{
    if (auto b = d.as<Domain::Box>()) {
        for (std::size_t i = 0; i < b->lo.size(); ++i)
            ordered.push_back({join_path(prefix, std::to_string(i)), b->lo[i], b->hi[i],
                               UniformDistribution{}});
    } else if (auto s = d.as<Domain::FiniteSet>()) {
        const std::size_t n = s->values.size();
        unordered.push_back({prefix.empty() ? std::string(kRootLeafPath) : prefix, s->values,
                             std::vector<double>(n, 1.0 / static_cast<double>(n))});
    } else if (auto st = d.as<Domain::Struct>()) {
        for (const auto& [name, child] : st->fields)
            collect_leaves(*child, join_path(prefix, name), ordered, unordered);
    } else if (auto a = d.as<Domain::Array>()) {
        for (std::size_t i = 0; i < a->length; ++i)
            collect_leaves(*a->element, join_path(prefix, std::to_string(i)), ordered, unordered);
    }
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string domain_signature(const Domain& d)
{
    if (auto b = d.as<Domain::Box>()) {
        std::string out = "box[";
        for (std::size_t i = 0; i < b->lo.size(); ++i) {
            if (i)
                out += ",";
            out += format_real(b->lo[i]) + ":" + format_real(b->hi[i]);
        }
        return out + "]";
    }
    if (auto s = d.as<Domain::FiniteSet>()) {
        std::string out = "set[";
        for (std::size_t i = 0; i < s->values.size(); ++i) {
            if (i)
                out += ",";
            const Atom& a = s->values[i];
            out += a.is_string() ? quote(a.as_string()) : format_real(a.as_number());
        }
        return out + "]";
    }
    if (auto st = d.as<Domain::Struct>()) {
        std::string out = "struct{";
        for (std::size_t i = 0; i < st->fields.size(); ++i) {
            if (i)
                out += ",";
            out += st->fields[i].first + ":" + domain_signature(*st->fields[i].second);
        }
        return out + "}";
    }
    const auto& a = *d.as<Domain::Array>();
    return "array[" + std::to_string(a.length) + "]{" + domain_signature(*a.element) + "}";
}

// ---------------------------------------------------------------------------
// FeatureSpace

FeatureSpace FeatureSpace::build(DomainPtr root,
                                 const std::map<LeafPath, DistributionSpec>& distributions,
                                 std::vector<Constraint> constraints, std::size_t rejection_budget)
{
    if (!root)
        throw Error(ErrorKind::InvalidDomain, "missing root domain");
    if (rejection_budget < 1)
        throw Error(ErrorKind::InvalidArgument, "rejection budget must be >= 1");

    FeatureSpace space;
    space.root_ = std::move(root);
    space.rejection_budget_ = rejection_budget;
    collect_leaves(*space.root_, "", space.ordered_, space.unordered_);

    std::set<LeafPath> paths;
    for (const auto& l : space.ordered_)
        paths.insert(l.path);
    for (const auto& l : space.unordered_)
        if (!paths.insert(l.path).second)
            throw Error(ErrorKind::InvalidDomain, "leaf path collision at '" + l.path + "'");

    auto find_ordered = [&](const LeafPath& p) -> OrderedLeaf* {
        for (auto& l : space.ordered_)
            if (l.path == p)
                return &l;
        return nullptr;
    };
    auto find_unordered = [&](const LeafPath& p) -> UnorderedLeaf* {
        for (auto& l : space.unordered_)
            if (l.path == p)
                return &l;
        return nullptr;
    };

    for (const auto& [path, dist] : distributions) {
        if (auto* o = find_ordered(path)) {
            if (auto tn = std::get_if<TruncatedNormalDistribution>(&dist)) {
                if (!(tn->stddev > 0.0) || !std::isfinite(tn->stddev) || !std::isfinite(tn->mean))
                    throw Error(ErrorKind::InvalidDistribution,
                                "truncated-normal at '" + path + "' needs finite mean and stddev > 0");
            } else if (std::holds_alternative<CategoricalDistribution>(dist)) {
                throw Error(ErrorKind::InvalidDistribution,
                            "categorical distribution on box coordinate '" + path + "'");
            }
            o->distribution = dist;
        } else if (auto* u = find_unordered(path)) {
            if (auto cat = std::get_if<CategoricalDistribution>(&dist)) {
                if (cat->weights.size() != u->values.size())
                    throw Error(ErrorKind::InvalidDistribution,
                                "categorical weights at '" + path + "' must match the set size");
                double total = 0.0;
                for (double w : cat->weights) {
                    if (!(w >= 0.0) || !std::isfinite(w))
                        throw Error(ErrorKind::InvalidDistribution,
                                    "categorical weights at '" + path + "' must be non-negative");
                    total += w;
                }
                if (!(total > 0.0))
                    throw Error(ErrorKind::InvalidDistribution,
                                "categorical weights at '" + path + "' need a positive entry");
                for (std::size_t i = 0; i < cat->weights.size(); ++i)
                    u->weights[i] = cat->weights[i] / total;
            } else if (std::holds_alternative<TruncatedNormalDistribution>(dist)) {
                throw Error(ErrorKind::InvalidDistribution,
                            "truncated-normal distribution on finite set '" + path + "'");
            }
        } else {
            throw Error(ErrorKind::DanglingPath, "distribution path '" + path + "' is not a leaf");
        }
    }

    for (const auto& c : constraints) {
        for (const auto& p : c.references())
            if (!paths.count(p))
                throw Error(ErrorKind::DanglingPath,
                            "constraint '" + c.text() + "' references unknown leaf '" + p + "'");
        for (const auto& p : c.numeric_references())
            if (!find_ordered(p))
                throw Error(ErrorKind::DanglingPath, "constraint '" + c.text() + "' uses '" + p +
                                                         "' arithmetically but it is not a box coordinate");
        for (const auto& p : c.categorical_references())
            if (!find_unordered(p))
                throw Error(ErrorKind::DanglingPath, "constraint '" + c.text() + "' compares '" + p +
                                                         "' to an atom but it is not a finite-set leaf");
    }
    space.constraints_ = std::move(constraints);
    return space;
}

Dimensions FeatureSpace::dimensions() const
{
    Dimensions d;
    for (const auto& l : ordered_)
        d.ordered.push_back(l.path);
    for (const auto& l : unordered_)
        d.unordered.push_back(l.path);
    return d;
}

FlatPoint FeatureSpace::flatten(const Point& point) const
{
    if (point.values.size() != ordered_.size() + unordered_.size())
        throw Error(ErrorKind::PointSpaceMismatch,
                    "point has " + std::to_string(point.values.size()) + " leaves, space has " +
                        std::to_string(ordered_.size() + unordered_.size()));
    FlatPoint flat;
    flat.reals.resize(static_cast<Eigen::Index>(ordered_.size()));
    for (std::size_t i = 0; i < ordered_.size(); ++i) {
        const auto& leaf = ordered_[i];
        auto it = point.values.find(leaf.path);
        if (it == point.values.end() || !std::holds_alternative<double>(it->second))
            throw Error(ErrorKind::PointSpaceMismatch, "point lacks real leaf '" + leaf.path + "'");
        const double x = std::get<double>(it->second);
        if (!(x >= leaf.lo && x <= leaf.hi))
            throw Error(ErrorKind::PointSpaceMismatch,
                        "value " + format_real(x) + " at '" + leaf.path + "' is outside its box");
        flat.reals[static_cast<Eigen::Index>(i)] = x;
    }
    flat.atoms.reserve(unordered_.size());
    for (const auto& leaf : unordered_) {
        auto it = point.values.find(leaf.path);
        if (it == point.values.end() || !std::holds_alternative<Atom>(it->second))
            throw Error(ErrorKind::PointSpaceMismatch, "point lacks atom leaf '" + leaf.path + "'");
        const Atom& a = std::get<Atom>(it->second);
        if (!leaf.index_of(a))
            throw Error(ErrorKind::PointSpaceMismatch,
                        "atom '" + a.to_string() + "' is not a member of '" + leaf.path + "'");
        flat.atoms.push_back(a);
    }
    return flat;
}

Point FeatureSpace::unflatten(const Eigen::VectorXd& reals, const std::vector<Atom>& atoms) const
{
    if (static_cast<std::size_t>(reals.size()) != ordered_.size() || atoms.size() != unordered_.size())
        throw Error(ErrorKind::LengthMismatch,
                    "expected " + std::to_string(ordered_.size()) + " reals and " +
                        std::to_string(unordered_.size()) + " atoms");
    Point p;
    for (std::size_t i = 0; i < ordered_.size(); ++i) {
        const double x = reals[static_cast<Eigen::Index>(i)];
        if (!(x >= ordered_[i].lo && x <= ordered_[i].hi))
            throw Error(ErrorKind::OutOfRange,
                        format_real(x) + " outside [" + format_real(ordered_[i].lo) + ", " +
                            format_real(ordered_[i].hi) + "] at '" + ordered_[i].path + "'");
        p.values.emplace(ordered_[i].path, x);
    }
    for (std::size_t i = 0; i < unordered_.size(); ++i) {
        if (!unordered_[i].index_of(atoms[i]))
            throw Error(ErrorKind::OutOfRange,
                        "'" + atoms[i].to_string() + "' not in set at '" + unordered_[i].path + "'");
        p.values.emplace(unordered_[i].path, atoms[i]);
    }
    return p;
}

bool FeatureSpace::contains(const Point& point) const
{
    try {
        flatten(point);
        return true;
    } catch (const Error&) {
        return false;
    }
}

bool FeatureSpace::satisfies_constraints(const Point& point) const
{
    return std::all_of(constraints_.begin(), constraints_.end(),
                       [&](const Constraint& c) { return c.holds(point); });
}

double FeatureSpace::sample_ordered_leaf(std::size_t i, Rng& rng) const
{
    const OrderedLeaf& leaf = ordered_[i];
    if (auto tn = std::get_if<TruncatedNormalDistribution>(&leaf.distribution)) {
        for (std::size_t attempt = 0; attempt < rejection_budget_; ++attempt) {
            const double x = rng.normal(tn->mean, tn->stddev);
            if (x >= leaf.lo && x <= leaf.hi)
                return x;
        }
        throw Error(ErrorKind::RejectionBudgetExhausted,
                    "truncated-normal at '" + leaf.path + "' has negligible mass inside its box");
    }
    return std::min(leaf.lo + leaf.width() * rng.uniform(), leaf.hi);
}

Atom FeatureSpace::sample_unordered_leaf(std::size_t i, Rng& rng) const
{
    const UnorderedLeaf& leaf = unordered_[i];
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < leaf.weights.size(); ++k) {
        if (leaf.weights[k] <= 0.0)
            continue;
        last_positive = k;
        acc += leaf.weights[k];
        if (u < acc)
            return leaf.values[k];
    }
    return leaf.values[last_positive];
}

FlatPoint FeatureSpace::sample_leaves(Rng& rng) const
{
    FlatPoint flat;
    flat.reals.resize(static_cast<Eigen::Index>(ordered_.size()));
    for (std::size_t i = 0; i < ordered_.size(); ++i)
        flat.reals[static_cast<Eigen::Index>(i)] = sample_ordered_leaf(i, rng);
    for (std::size_t i = 0; i < unordered_.size(); ++i)
        flat.atoms.push_back(sample_unordered_leaf(i, rng));
    return flat;
}

Point FeatureSpace::sample_prior(Rng& rng) const
{
    for (std::size_t attempt = 0; attempt < rejection_budget_; ++attempt) {
        Point p = unflatten(sample_leaves(rng));
        if (satisfies_constraints(p))
            return p;
    }
    throw Error(ErrorKind::RejectionBudgetExhausted,
                std::to_string(rejection_budget_) + " consecutive samples violated the constraints");
}

Eigen::VectorXd FeatureSpace::lower_bounds() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(ordered_.size()));
    for (std::size_t i = 0; i < ordered_.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = ordered_[i].lo;
    return v;
}

Eigen::VectorXd FeatureSpace::upper_bounds() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(ordered_.size()));
    for (std::size_t i = 0; i < ordered_.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = ordered_[i].hi;
    return v;
}

Eigen::VectorXd FeatureSpace::widths() const
{
    return upper_bounds() - lower_bounds();
}

Eigen::VectorXd FeatureSpace::to_unit(const Eigen::VectorXd& reals) const
{
    return ((reals - lower_bounds()).array() / widths().array()).matrix();
}

Eigen::VectorXd FeatureSpace::from_unit(const Eigen::VectorXd& unit) const
{
    const Eigen::VectorXd lo = lower_bounds();
    const Eigen::VectorXd hi = upper_bounds();
    Eigen::VectorXd x = lo + (hi - lo).cwiseProduct(unit.cwiseMax(0.0).cwiseMin(1.0));
    return x.cwiseMax(lo).cwiseMin(hi);
}

std::string FeatureSpace::signature() const
{
    return domain_signature(*root_);
}

} // namespace fkit
