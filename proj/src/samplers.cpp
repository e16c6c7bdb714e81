#include <fkit/samplers.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fkit/error.hpp>
#include <fkit/linalg.hpp>

namespace fkit {

namespace {

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return a.size() == b.size() && (a.array() == b.array()).all();
}

bool same(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same(a[i], b[i]))
            return false;
    return true;
}

double finite_score(double s)
{
    constexpr double big = std::numeric_limits<double>::max();
    if (std::isnan(s))
        return big;
    return std::clamp(s, -big, big);
}

double reflect_unit(double u)
{
    for (int i = 0; i < 8 && (u < 0.0 || u > 1.0); ++i)
        u = u < 0.0 ? -u : 2.0 - u;
    return std::clamp(u, 0.0, 1.0);
}

Atom categorical_draw(const UnorderedLeaf& leaf, const std::vector<double>& weights, double u)
{
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0)
            continue;
        last = k;
        acc += weights[k] / total;
        if (u < acc)
            return leaf.values[k];
    }
    return leaf.values[last];
}

template <typename Propose>
Point rejection_loop(const FeatureSpace& space, Propose propose)
{
    for (std::size_t attempt = 0; attempt < space.rejection_budget(); ++attempt) {
        Point p = propose();
        if (space.satisfies_constraints(p))
            return p;
    }
    throw Error(ErrorKind::RejectionBudgetExhausted,
                std::to_string(space.rejection_budget()) + " consecutive proposals violated the constraints");
}

} // namespace

bool operator==(const AnnealingState& a, const AnnealingState& b)
{
    return a.params == b.params && a.rng == b.rng && a.has_current == b.has_current && same(a.current, b.current) &&
           a.current_atoms == b.current_atoms && a.current_score == b.current_score &&
           a.temperature == b.temperature && a.observed == b.observed && a.warmup_magnitude == b.warmup_magnitude;
}

bool operator==(const CrossEntropyState& a, const CrossEntropyState& b)
{
    if (a.batch.size() != b.batch.size())
        return false;
    for (std::size_t i = 0; i < a.batch.size(); ++i)
        if (!same(a.batch[i].unit, b.batch[i].unit) || a.batch[i].atoms != b.batch[i].atoms ||
            a.batch[i].score != b.batch[i].score)
            return false;
    return a.params == b.params && a.rng == b.rng && a.fitted == b.fitted && same(a.mean, b.mean) &&
           same(a.stddev, b.stddev) && a.weights == b.weights && a.refits == b.refits &&
           a.best_score == b.best_score && a.stagnant_batches == b.stagnant_batches;
}

bool operator==(const BayesOptState& a, const BayesOptState& b)
{
    return a.params == b.params && a.rng == b.rng && same(a.inputs, b.inputs) && a.scores == b.scores;
}

std::string_view sampler_kind(const SamplerSpec& spec)
{
    static constexpr std::string_view names[] = {"uniform", "halton", "annealing", "cross_entropy", "bayes_opt"};
    return names[spec.index()];
}

bool is_active(const SamplerSpec& spec)
{
    return std::holds_alternative<AnnealingSpec>(spec) || std::holds_alternative<CrossEntropySpec>(spec) ||
           std::holds_alternative<BayesOptSpec>(spec);
}

double metropolis_acceptance(double delta, double temperature)
{
    if (delta <= 0.0)
        return 1.0;
    if (!(temperature > 0.0))
        return 0.0;
    if (std::isinf(temperature))
        return 1.0;
    return std::exp(-delta / temperature);
}

SamplerState make_sampler_state(const SamplerSpec& spec, const FeatureSpace& space, Rng rng)
{
    const auto d = static_cast<Eigen::Index>(space.ordered().size());
    return std::visit(
        [&](const auto& s) -> SamplerState {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformSpec>) {
                return UniformState{rng};
            } else if constexpr (std::is_same_v<T, HaltonSpec>) {
                return HaltonState{1, first_primes(space.ordered().size() + space.unordered().size())};
            } else if constexpr (std::is_same_v<T, AnnealingSpec>) {
                if (!(s.step_fraction > 0.0) || !(s.cooling > 0.0 && s.cooling <= 1.0) || s.warmup < 1 ||
                    !(s.redraw_probability >= 0.0 && s.redraw_probability <= 1.0))
                    throw Error(ErrorKind::InvalidArgument, "invalid annealing parameters");
                AnnealingState st;
                st.params = s;
                st.rng = rng;
                return st;
            } else if constexpr (std::is_same_v<T, CrossEntropySpec>) {
                if (s.batch < 2 || !(s.elite_fraction > 0.0 && s.elite_fraction <= 1.0) || s.min_elites < 1 ||
                    !(s.stddev_floor > 0.0) || !(s.categorical_smoothing >= 0.0) ||
                    !(s.smoothing > 0.0 && s.smoothing <= 1.0))
                    throw Error(ErrorKind::InvalidArgument, "invalid cross-entropy parameters");
                CrossEntropyState st;
                st.params = s;
                st.rng = rng;
                st.mean = Eigen::VectorXd::Constant(d, 0.5);
                st.stddev = Eigen::VectorXd::Constant(d, 0.5);
                for (const auto& leaf : space.unordered())
                    st.weights.push_back(leaf.weights);
                return st;
            } else {
                if (!(s.length_scale > 0.0) || !(s.jitter > 0.0) || !(s.max_jitter >= s.jitter) || s.candidates < 1)
                    throw Error(ErrorKind::InvalidArgument, "invalid Bayesian-optimization parameters");
                BayesOptState st;
                st.params = s;
                st.rng = rng;
                return st;
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Proposals

namespace {

Point halton_next(HaltonState& st, const FeatureSpace& space)
{
    const std::size_t d = space.ordered().size();
    return rejection_loop(space, [&] {
        const Eigen::VectorXd u = halton_point<double>(st.index++, st.bases);
        Eigen::VectorXd reals = space.from_unit(u.head(static_cast<Eigen::Index>(d)));
        std::vector<Atom> atoms;
        for (std::size_t k = 0; k < space.unordered().size(); ++k) {
            const auto& leaf = space.unordered()[k];
            atoms.push_back(categorical_draw(leaf, leaf.weights, u[static_cast<Eigen::Index>(d + k)]));
        }
        return space.unflatten(reals, atoms);
    });
}

Point annealing_next(AnnealingState& st, const FeatureSpace& space)
{
    if (!st.has_current || st.observed < st.params.warmup)
        return space.sample_prior(st.rng);
    return rejection_loop(space, [&] {
        Eigen::VectorXd u = st.current;
        for (Eigen::Index i = 0; i < u.size(); ++i)
            u[i] = reflect_unit(u[i] + st.params.step_fraction * st.rng.normal());
        std::vector<Atom> atoms = st.current_atoms;
        for (std::size_t k = 0; k < atoms.size(); ++k)
            if (st.rng.uniform() < st.params.redraw_probability)
                atoms[k] = space.sample_unordered_leaf(k, st.rng);
        return space.unflatten(space.from_unit(u), atoms);
    });
}

Point cross_entropy_next(CrossEntropyState& st, const FeatureSpace& space)
{
    if (!st.fitted)
        return space.sample_prior(st.rng);
    return rejection_loop(space, [&] {
        Eigen::VectorXd u(st.mean.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            double x = st.rng.normal(st.mean[i], st.stddev[i]);
            for (std::size_t attempt = 0; attempt < space.rejection_budget() && (x < 0.0 || x > 1.0); ++attempt)
                x = st.rng.normal(st.mean[i], st.stddev[i]);
            u[i] = std::clamp(x, 0.0, 1.0);
        }
        std::vector<Atom> atoms;
        for (std::size_t k = 0; k < space.unordered().size(); ++k)
            atoms.push_back(categorical_draw(space.unordered()[k], st.weights[k], st.rng.uniform()));
        return space.unflatten(space.from_unit(u), atoms);
    });
}

Point bayes_opt_next(BayesOptState& st, const FeatureSpace& space)
{
    if (st.scores.empty())
        return space.sample_prior(st.rng);
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < space.unordered().size(); ++k)
        atoms.push_back(space.sample_unordered_leaf(k, st.rng));
    Point p = space.unflatten(bo_propose(st, space, atoms), atoms);
    if (space.satisfies_constraints(p))
        return p;
    return space.sample_prior(st.rng);
}

} // namespace

std::pair<Point, SamplerState> next_point(SamplerState state, const FeatureSpace& space)
{
    Point p = std::visit(
        [&](auto& st) -> Point {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, UniformState>)
                return space.sample_prior(st.rng);
            else if constexpr (std::is_same_v<T, HaltonState>)
                return halton_next(st, space);
            else if constexpr (std::is_same_v<T, AnnealingState>)
                return annealing_next(st, space);
            else if constexpr (std::is_same_v<T, CrossEntropyState>)
                return cross_entropy_next(st, space);
            else
                return bayes_opt_next(st, space);
        },
        state);
    return {std::move(p), std::move(state)};
}

// ---------------------------------------------------------------------------
// Feedback

void cross_entropy_refit(CrossEntropyState& st, const FeatureSpace& space)
{
    const std::size_t n = st.batch.size();
    if (n == 0)
        return;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return st.batch[a].score < st.batch[b].score; });

    const auto by_fraction = static_cast<std::size_t>(std::floor(st.params.elite_fraction * static_cast<double>(n) + 1e-9));
    const std::size_t elites = std::min(n, std::max(st.params.min_elites, by_fraction));

    const Eigen::Index d = st.mean.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t e = 0; e < elites; ++e)
        mean += st.batch[order[e]].unit;
    mean /= static_cast<double>(elites);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
    for (std::size_t e = 0; e < elites; ++e)
        var += (st.batch[order[e]].unit - mean).array().square().matrix();
    var /= static_cast<double>(elites);
    const double a = st.params.smoothing;
    st.mean = a * mean + (1.0 - a) * st.mean;
    st.stddev = (a * var.array().sqrt() + (1.0 - a) * st.stddev.array()).max(st.params.stddev_floor).matrix();

    for (std::size_t k = 0; k < space.unordered().size(); ++k) {
        const auto& leaf = space.unordered()[k];
        std::vector<double> w(leaf.values.size(), st.params.categorical_smoothing);
        for (std::size_t e = 0; e < elites; ++e)
            if (auto idx = leaf.index_of(st.batch[order[e]].atoms[k]))
                w[*idx] += 1.0;
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& x : w)
            x /= total;
        st.weights[k] = std::move(w);
    }

    const double batch_best = st.batch[order.front()].score;
    if (batch_best < st.best_score) {
        st.best_score = batch_best;
        st.stagnant_batches = 0;
    } else {
        ++st.stagnant_batches;
    }
    st.fitted = true;
    ++st.refits;
    st.batch.clear();

    if (st.params.restart_after > 0 && st.stagnant_batches >= st.params.restart_after) {
        st.fitted = false;
        st.stagnant_batches = 0;
        for (std::size_t k = 0; k < space.unordered().size(); ++k)
            st.weights[k] = space.unordered()[k].weights;
    }
}

SamplerState observe(SamplerState state, const FeatureSpace& space, const Feedback& fb)
{
    const double score = finite_score(fb.score);
    std::visit(
        [&](auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, AnnealingState>) {
                const FlatPoint flat = space.flatten(fb.point);
                const Eigen::VectorXd u = space.to_unit(flat.reals);
                if (st.observed < st.params.warmup) {
                    ++st.observed;
                    st.warmup_magnitude += std::abs(score);
                    if (!st.has_current || score < st.current_score) {
                        st.has_current = true;
                        st.current = u;
                        st.current_atoms = flat.atoms;
                        st.current_score = score;
                    }
                    if (st.observed == st.params.warmup)
                        st.temperature =
                            std::max(st.warmup_magnitude / static_cast<double>(st.params.warmup), 1e-12);
                    return;
                }
                const double p = metropolis_acceptance(score - st.current_score, st.temperature);
                if (p >= 1.0 || st.rng.uniform() < p) {
                    st.current = u;
                    st.current_atoms = flat.atoms;
                    st.current_score = score;
                }
                st.temperature *= st.params.cooling;
                ++st.observed;
            } else if constexpr (std::is_same_v<T, CrossEntropyState>) {
                const FlatPoint flat = space.flatten(fb.point);
                st.batch.push_back({space.to_unit(flat.reals), flat.atoms, score});
                if (st.batch.size() >= st.params.batch)
                    cross_entropy_refit(st, space);
            } else if constexpr (std::is_same_v<T, BayesOptState>) {
                const FlatPoint flat = space.flatten(fb.point);
                st.inputs.push_back(space.to_unit(flat.reals));
                st.scores.push_back(score);
            }
        },
        state);
    return state;
}

// ---------------------------------------------------------------------------
// Bayesian optimization

Eigen::VectorXd bo_propose(BayesOptState& st, const FeatureSpace& space)
{
    std::vector<Atom> atoms;
    for (std::size_t k = 0; k < space.unordered().size(); ++k)
        atoms.push_back(space.sample_unordered_leaf(k, st.rng));
    return bo_propose(st, space, atoms);
}

Eigen::VectorXd bo_propose(BayesOptState& st, const FeatureSpace& space, const std::vector<Atom>& atoms)
{
    const auto d = static_cast<Eigen::Index>(space.ordered().size());
    if (st.scores.empty())
        return space.flatten(space.sample_prior(st.rng)).reals;
    if (d == 0)
        return Eigen::VectorXd(0);

    const auto n = static_cast<Eigen::Index>(st.scores.size());
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = st.inputs[static_cast<std::size_t>(i)].transpose();
        y[i] = st.scores[static_cast<std::size_t>(i)];
    }
    GaussianProcess<double> gp(Eigen::VectorXd::Constant(d, st.params.length_scale), st.params.jitter,
                               st.params.max_jitter);
    gp.fit(x, y);
    const double best = y.minCoeff();

    auto acquisition = [&](const Eigen::VectorXd& u) {
        return expected_improvement(gp.mean(u), std::sqrt(gp.variance(u)), best);
    };
    auto feasible = [&](const Eigen::VectorXd& u) {
        return space.constraints().empty() || space.satisfies_constraints(space.unflatten(space.from_unit(u), atoms));
    };

    Eigen::VectorXd best_u;
    double best_ei = -1.0;
    for (std::size_t c = 0; c < st.params.candidates; ++c) {
        Eigen::VectorXd u(d);
        for (Eigen::Index i = 0; i < d; ++i)
            u[i] = st.rng.uniform();
        if (!feasible(u))
            continue;
        const double ei = acquisition(u);
        if (ei > best_ei) {
            best_ei = ei;
            best_u = u;
        }
    }
    if (best_u.size() == 0)
        return space.flatten(space.sample_prior(st.rng)).reals;

    double sigma = 0.05;
    for (std::size_t r = 0; r < st.params.refine_rounds; ++r, sigma *= 0.2) {
        const Eigen::VectorXd centre = best_u;
        for (std::size_t k = 0; k < st.params.refine_samples; ++k) {
            Eigen::VectorXd u = centre;
            for (Eigen::Index i = 0; i < d; ++i)
                u[i] = reflect_unit(u[i] + sigma * st.rng.normal());
            if (!feasible(u))
                continue;
            const double ei = acquisition(u);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
    }
    return space.from_unit(best_u);
}

} // namespace fkit
