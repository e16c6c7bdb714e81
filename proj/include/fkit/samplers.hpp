#ifndef FKIT_SAMPLERS_HPP
#define FKIT_SAMPLERS_HPP

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include <fkit/feature_space.hpp>
#include <fkit/random.hpp>

namespace fkit {

/// Score reported back to a sampler. Samplers always minimize: lower means
/// closer to a violation (or, in synthesis, closer to the target).
struct Feedback {
    Point point;
    double score;
};

// ---------------------------------------------------------------------------
// Sampler parameters

struct UniformSpec {
    friend bool operator==(const UniformSpec&, const UniformSpec&) = default;
};

/// Low-discrepancy sequence: the first d primes as bases, one per ordered leaf,
/// then one extra coordinate per unordered leaf pushed through its categorical
/// CDF. Indices start at 1.
struct HaltonSpec {
    friend bool operator==(const HaltonSpec&, const HaltonSpec&) = default;
};

struct AnnealingSpec {
    double step_fraction = 0.1;      ///< proposal stddev as a fraction of leaf width
    double cooling = 0.97;           ///< T <- cooling * T after each post-warmup step
    std::size_t warmup = 5;          ///< prior samples used to pick T0 = mean |score|
    double redraw_probability = 0.2; ///< per unordered leaf, per step
    friend bool operator==(const AnnealingSpec&, const AnnealingSpec&) = default;
};

struct CrossEntropySpec {
    std::size_t batch = 20;
    double elite_fraction = 0.1;
    std::size_t min_elites = 2;
    double stddev_floor = 1e-3;      ///< fraction of leaf width
    double categorical_smoothing = 0.1;
    std::size_t restart_after = 0;   ///< batches without improvement before resetting; 0 = never
    double smoothing = 0.7;          ///< weight of the new elite fit against the previous proposal
    friend bool operator==(const CrossEntropySpec&, const CrossEntropySpec&) = default;
};

struct BayesOptSpec {
    double length_scale = 0.2;       ///< fraction of leaf width
    double jitter = 1e-6;
    double max_jitter = 1e-2;
    std::size_t candidates = 256;
    std::size_t refine_rounds = 3;
    std::size_t refine_samples = 16;
    friend bool operator==(const BayesOptSpec&, const BayesOptSpec&) = default;
};

using SamplerSpec = std::variant<UniformSpec, HaltonSpec, AnnealingSpec, CrossEntropySpec, BayesOptSpec>;

std::string_view sampler_kind(const SamplerSpec& spec);
/// Whether observe() can change the sampler's future proposals.
bool is_active(const SamplerSpec& spec);

// ---------------------------------------------------------------------------
// Sampler state

struct UniformState {
    Rng rng;
    friend bool operator==(const UniformState&, const UniformState&) = default;
};

struct HaltonState {
    std::uint64_t index = 1; ///< next index to emit
    std::vector<std::uint32_t> bases;
    friend bool operator==(const HaltonState&, const HaltonState&) = default;
};

struct AnnealingState {
    AnnealingSpec params;
    Rng rng;
    bool has_current = false;
    Eigen::VectorXd current;          ///< unit coordinates
    std::vector<Atom> current_atoms;
    double current_score = 0.0;
    double temperature = 0.0;
    std::size_t observed = 0;
    double warmup_magnitude = 0.0;    ///< running sum of |score| during warmup

    friend bool operator==(const AnnealingState& a, const AnnealingState& b);
};

struct CrossEntropyState {
    struct Sample {
        Eigen::VectorXd unit;
        std::vector<Atom> atoms;
        double score;
    };

    CrossEntropySpec params;
    Rng rng;
    bool fitted = false;
    Eigen::VectorXd mean;             ///< unit coordinates
    Eigen::VectorXd stddev;           ///< unit coordinates
    std::vector<std::vector<double>> weights; ///< per unordered leaf
    std::vector<Sample> batch;
    std::size_t refits = 0;
    double best_score = kNoScore;
    std::size_t stagnant_batches = 0;

    static constexpr double kNoScore = 1.7976931348623157e308;

    friend bool operator==(const CrossEntropyState& a, const CrossEntropyState& b);
};

struct BayesOptState {
    BayesOptSpec params;
    Rng rng;
    std::vector<Eigen::VectorXd> inputs; ///< unit coordinates
    std::vector<double> scores;

    friend bool operator==(const BayesOptState& a, const BayesOptState& b);
};

using SamplerState = std::variant<UniformState, HaltonState, AnnealingState, CrossEntropyState, BayesOptState>;

SamplerState make_sampler_state(const SamplerSpec& spec, const FeatureSpace& space, Rng rng);

/// Next point to simulate. Constraints are enforced by rejection around the
/// sampler's raw proposal.
std::pair<Point, SamplerState> next_point(SamplerState state, const FeatureSpace& space);

/// Feeds a score back. Identity for passive samplers.
SamplerState observe(SamplerState state, const FeatureSpace& space, const Feedback& feedback);

/// Probability of moving to a state that is worse by `delta` at temperature T.
double metropolis_acceptance(double delta, double temperature);

/// Refit the cross-entropy proposal from a full batch (exposed for tests).
void cross_entropy_refit(CrossEntropyState& state, const FeatureSpace& space);

/// Maximizer of expected improvement (for minimization) under the GP posterior fitted to the
/// history, in the space's coordinates. `atoms` fills the unordered leaves
/// when checking constraints. Falls back to a prior draw when the history is
/// empty.
Eigen::VectorXd bo_propose(BayesOptState& state, const FeatureSpace& space, const std::vector<Atom>& atoms);
Eigen::VectorXd bo_propose(BayesOptState& state, const FeatureSpace& space);

/// Owning convenience wrapper around the functional interface above.
class Sampler {
public:
    Sampler(const SamplerSpec& spec, FeatureSpace space, Rng rng)
        : spec_(spec), space_(std::move(space)), state_(make_sampler_state(spec, space_, std::move(rng)))
    {
    }

    Point next()
    {
        auto [p, s] = next_point(std::move(state_), space_);
        state_ = std::move(s);
        return p;
    }

    void observe(const Feedback& fb) { state_ = fkit::observe(std::move(state_), space_, fb); }

    const SamplerState& state() const { return state_; }
    const SamplerSpec& spec() const { return spec_; }
    bool active() const { return is_active(spec_); }

private:
    SamplerSpec spec_;
    FeatureSpace space_;
    SamplerState state_;
};

} // namespace fkit

#endif
