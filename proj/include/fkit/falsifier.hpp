#ifndef FKIT_FALSIFIER_HPP
#define FKIT_FALSIFIER_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include <fkit/error_table.hpp>
#include <fkit/feature_space.hpp>
#include <fkit/mtl.hpp>
#include <fkit/reference_sims.hpp>
#include <fkit/samplers.hpp>
#include <fkit/socket.hpp>

namespace fkit {

enum class Mode { Falsify, Fuzz, Synthesize };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct InProcessSimulatorSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct SocketSimulatorSpec {
    std::string host = "127.0.0.1";
    std::uint16_t port = kDefaultPort;
    double timeout_s = kDefaultTimeoutSeconds;
};

using SimulatorSpec = std::variant<InProcessSimulatorSpec, SocketSimulatorSpec>;

/// What synthesis maximizes: the property's robustness, or the final value of
/// one signal.
struct Objective {
    enum class Kind { Robustness, SignalFinal };
    Kind kind = Kind::Robustness;
    std::string signal;
};

struct RunConfig {
    FeatureSpace space;
    Formula property;
    SamplerSpec sampler = UniformSpec{};
    Mode mode = Mode::Falsify;
    std::size_t budget = 100;
    bool stop_on_first = false;
    std::uint64_t seed = 0;
    SimulatorSpec simulator = InProcessSimulatorSpec{};
    Objective objective;
};

struct RunRecord {
    std::uint64_t run_id;
    Point point;
    double score;     ///< what the sampler saw; 0 for failed runs
    bool satisfied;   ///< property held (falsify, fuzz) or objective met (synthesize)
    bool failed;      ///< the simulator reported an error for this run
    std::string message;
};

struct RunResult {
    /// Violations (falsify, fuzz) or objective-meeting points (synthesize).
    ErrorTable counterexamples;
    std::vector<RunRecord> all_runs;
    std::optional<Feedback> best;
    std::size_t simulations_used = 0;
    std::size_t failed_runs = 0;
};

/// Throws ConfigInvalid for combinations run() cannot honor.
void validate(const RunConfig& config);

std::unique_ptr<Simulator> make_simulator(const SimulatorSpec& spec);

/// Sampler score for one trace: robustness in falsify and fuzz mode, the
/// negated objective in synthesize mode. Infinite values are clamped to the
/// largest finite double.
double score_trace(const RunConfig& config, const Trace& trace);

RunResult run(const RunConfig& config);
/// Same loop against a caller-provided simulator (opened and closed here).
RunResult run(const RunConfig& config, Simulator& simulator);

struct ReplayResult {
    Trace trace;
    double score;
    bool satisfied;
};

/// One simulation of `point`. Throws PointSpaceMismatch for points outside the space.
ReplayResult replay(const RunConfig& config, const Point& point);
ReplayResult replay(const RunConfig& config, Simulator& simulator, const Point& point);

/// error_table.csv, runs.csv and summary.json under `dir` (created if needed).
void write_artifacts(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir);

/// The summary.json document. Contains no timing so that it is reproducible.
nlohmann::ordered_json summary_json(const RunConfig& config, const RunResult& result);

/// Whether the run reached its goal: counterexamples found (falsify, fuzz)
/// or objective met (synthesize).
bool goal_reached(const RunResult& result);

} // namespace fkit

#endif
