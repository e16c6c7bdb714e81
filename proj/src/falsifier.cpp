#include <fkit/falsifier.hpp>

#include <cmath>
#include <fstream>
#include <limits>

#include <fkit/error.hpp>

namespace fkit {

std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::Falsify:
        return "falsify";
    case Mode::Fuzz:
        return "fuzz";
    case Mode::Synthesize:
        return "synthesize";
    }
    return "?";
}

std::optional<Mode> parse_mode(std::string_view text)
{
    if (text == "falsify")
        return Mode::Falsify;
    if (text == "fuzz")
        return Mode::Fuzz;
    if (text == "synthesize")
        return Mode::Synthesize;
    return std::nullopt;
}

void validate(const RunConfig& config)
{
    if (config.budget < 1)
        throw Error(ErrorKind::ConfigInvalid, "budget: must be at least 1");
    if (config.mode == Mode::Fuzz && is_active(config.sampler))
        throw Error(ErrorKind::ConfigInvalid, "sampler.kind: fuzz mode takes a passive sampler (uniform or halton), got '" +
                                                  std::string(sampler_kind(config.sampler)) + "'");
    if (config.objective.kind == Objective::Kind::SignalFinal && config.objective.signal.empty())
        throw Error(ErrorKind::ConfigInvalid, "objective.signal: required for kind signal_final");
}

std::unique_ptr<Simulator> make_simulator(const SimulatorSpec& spec)
{
    if (const auto* in = std::get_if<InProcessSimulatorSpec>(&spec))
        return make_reference_simulator(in->name, in->params);
    const auto& s = std::get<SocketSimulatorSpec>(spec);
    return std::make_unique<SocketSimulator>(s.host, s.port, s.timeout_s);
}

namespace {

double finite_score(double v)
{
    constexpr double big = std::numeric_limits<double>::max();
    if (std::isnan(v))
        throw Error(ErrorKind::InvalidArgument, "score is NaN");
    return std::clamp(v, -big, big);
}

bool is_satisfied(Mode mode, double score)
{
    // a score of exactly 0 is not a violation
    return mode == Mode::Synthesize ? score < 0.0 : score >= 0.0;
}

} // namespace

double score_trace(const RunConfig& config, const Trace& trace)
{
    if (config.mode != Mode::Synthesize)
        return finite_score(robustness(config.property, trace, 0));
    double objective;
    if (config.objective.kind == Objective::Kind::Robustness)
        objective = robustness(config.property, trace, 0);
    else
        objective = trace.signal(config.objective.signal).back();
    return finite_score(-objective);
}

RunResult run(const RunConfig& config)
{
    auto sim = make_simulator(config.simulator);
    return run(config, *sim);
}

RunResult run(const RunConfig& config, Simulator& simulator)
{
    validate(config);
    simulator.check(config.space);

    RunResult result{ErrorTable(config.space), {}, std::nullopt, 0, 0};
    Sampler sampler(config.sampler, config.space, Rng::split(config.seed, "sampler"));
    const bool feed_back = config.mode != Mode::Fuzz;

    simulator.open(config.space);
    try {
        for (std::uint64_t run_id = 0; run_id < config.budget; ++run_id) {
            Point point = sampler.next();
            ++result.simulations_used;
            Trace trace({0.0}, {});
            try {
                trace = simulator.simulate(point, run_id);
            } catch (const SimulatorFailure& e) {
                ++result.failed_runs;
                result.all_runs.push_back({run_id, std::move(point), 0.0, false, true, e.what()});
                continue;
            }
            const double score = score_trace(config, trace);
            if (feed_back)
                sampler.observe({point, score});
            const bool qualifying = score < 0.0;
            if (qualifying)
                result.counterexamples.insert(point, score, run_id);
            if (!result.best || score < result.best->score)
                result.best = Feedback{point, score};
            result.all_runs.push_back({run_id, std::move(point), score, is_satisfied(config.mode, score), false, {}});
            if (qualifying && config.stop_on_first)
                break;
        }
    } catch (...) {
        simulator.close();
        throw;
    }
    simulator.close();
    return result;
}

ReplayResult replay(const RunConfig& config, const Point& point)
{
    auto sim = make_simulator(config.simulator);
    return replay(config, *sim, point);
}

ReplayResult replay(const RunConfig& config, Simulator& simulator, const Point& point)
{
    config.space.flatten(point);
    simulator.check(config.space);
    simulator.open(config.space);
    std::optional<Trace> trace;
    try {
        trace = simulator.simulate(point, 0);
    } catch (...) {
        simulator.close();
        throw;
    }
    simulator.close();
    const double score = score_trace(config, *trace);
    return {std::move(*trace), score, is_satisfied(config.mode, score)};
}

bool goal_reached(const RunResult& result)
{
    return !result.counterexamples.empty();
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

nlohmann::ordered_json point_json(const Point& p)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [path, value] : p.values) {
        if (const double* d = std::get_if<double>(&value)) {
            j[path] = *d;
        } else {
            const Atom& a = std::get<Atom>(value);
            if (a.is_number())
                j[path] = a.as_number();
            else
                j[path] = a.as_string();
        }
    }
    return j;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace

nlohmann::ordered_json summary_json(const RunConfig& config, const RunResult& result)
{
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(config.mode));
    j["seed"] = config.seed;
    j["budget"] = config.budget;
    j["sampler"] = std::string(sampler_kind(config.sampler));
    j["property"] = config.property.to_string();
    j["space_signature"] = config.space.signature();
    j["simulations_used"] = result.simulations_used;
    j["failed_runs"] = result.failed_runs;
    j["counterexamples"] = result.counterexamples.size();
    j["goal_reached"] = goal_reached(result);
    if (result.best) {
        j["best_score"] = result.best->score;
        j["best_point"] = point_json(result.best->point);
    } else {
        j["best_score"] = nullptr;
        j["best_point"] = nullptr;
    }
    return j;
}

void write_artifacts(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());

    export_csv(result.counterexamples, dir / "error_table.csv");

    {
        auto out = open_output(dir / "runs.csv");
        const Dimensions dims = config.space.dimensions();
        out << "run_id,score,satisfied,failed";
        for (const auto& c : dims.ordered)
            out << ',' << csv_escape(c);
        for (const auto& c : dims.unordered)
            out << ',' << csv_escape(c);
        out << ",message\n";
        for (const auto& r : result.all_runs) {
            const FlatPoint flat = config.space.flatten(r.point);
            out << r.run_id << ',' << (r.failed ? std::string() : format_real(r.score)) << ','
                << (r.satisfied ? 1 : 0) << ',' << (r.failed ? 1 : 0);
            for (Eigen::Index i = 0; i < flat.reals.size(); ++i)
                out << ',' << format_real(flat.reals[i]);
            for (const auto& a : flat.atoms)
                out << ',' << csv_escape(a.to_string());
            out << ',' << csv_escape(r.message) << '\n';
        }
        if (!out)
            throw Error(ErrorKind::IoError, "failed writing runs.csv");
    }

    auto out = open_output(dir / "summary.json");
    out << summary_json(config, result).dump(2) << '\n';
    if (!out)
        throw Error(ErrorKind::IoError, "failed writing summary.json");
}

} // namespace fkit
