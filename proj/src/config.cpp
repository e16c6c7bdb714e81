#include <fkit/config.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fkit/error.hpp>

namespace fkit {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what)
{
    throw Error(ErrorKind::ConfigInvalid, where + ": " + what);
}

std::string join(const std::string& where, const std::string& key)
{
    return where.empty() ? key : where + "." + key;
}

void only_keys(const ojson& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        invalid(where, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || key == a;
        if (!ok)
            invalid(join(where, key), "unknown key");
    }
}

const ojson& require(const ojson& j, const std::string& where, const char* key)
{
    auto it = j.find(key);
    if (it == j.end())
        invalid(join(where, key), "required");
    return *it;
}

double get_number(const ojson& v, const std::string& where)
{
    if (!v.is_number())
        invalid(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        invalid(where, "must be finite");
    return x;
}

std::uint64_t get_unsigned(const ojson& v, const std::string& where)
{
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer())
        invalid(where, "must not be negative");
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 1.8e19)
            return static_cast<std::uint64_t>(d);
    }
    invalid(where, "expected a non-negative integer");
}

std::string get_string(const ojson& v, const std::string& where)
{
    if (!v.is_string())
        invalid(where, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const ojson& v, const std::string& where)
{
    if (!v.is_boolean())
        invalid(where, "expected true or false");
    return v.get<bool>();
}

std::vector<double> get_numbers(const ojson& v, const std::string& where)
{
    if (!v.is_array())
        invalid(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(get_number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

template <typename F>
auto rethrow_as_config(const std::string& where, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigInvalid)
            throw;
        invalid(where, e.what());
    }
}

DistributionSpec parse_distribution(const ojson& j, const std::string& where)
{
    const std::string kind = get_string(require(j, where, "kind"), join(where, "kind"));
    if (kind == "uniform") {
        only_keys(j, where, {"kind"});
        return UniformDistribution{};
    }
    if (kind == "truncated_normal") {
        only_keys(j, where, {"kind", "mean", "stddev"});
        return TruncatedNormalDistribution{get_number(require(j, where, "mean"), join(where, "mean")),
                                           get_number(require(j, where, "stddev"), join(where, "stddev"))};
    }
    if (kind == "categorical") {
        only_keys(j, where, {"kind", "weights"});
        return CategoricalDistribution{get_numbers(require(j, where, "weights"), join(where, "weights"))};
    }
    invalid(join(where, "kind"), "unknown distribution '" + kind + "' (uniform, truncated_normal, categorical)");
}

SamplerSpec parse_sampler(const ojson& j, const std::string& where)
{
    if (j.is_string())
        return parse_sampler(ojson{{"kind", j}}, where);
    const std::string kind = get_string(require(j, where, "kind"), join(where, "kind"));
    auto num = [&](const char* key, double& out) {
        if (j.contains(key))
            out = get_number(j.at(key), join(where, key));
    };
    auto count = [&](const char* key, std::size_t& out) {
        if (j.contains(key))
            out = static_cast<std::size_t>(get_unsigned(j.at(key), join(where, key)));
    };
    auto positive = [&](bool ok, const char* key) {
        if (!ok)
            invalid(join(where, key), "out of range");
    };
    if (kind == "uniform") {
        only_keys(j, where, {"kind"});
        return UniformSpec{};
    }
    if (kind == "halton") {
        only_keys(j, where, {"kind"});
        return HaltonSpec{};
    }
    if (kind == "annealing") {
        only_keys(j, where, {"kind", "step_fraction", "cooling", "warmup", "redraw_probability"});
        AnnealingSpec s;
        num("step_fraction", s.step_fraction);
        num("cooling", s.cooling);
        count("warmup", s.warmup);
        num("redraw_probability", s.redraw_probability);
        positive(s.step_fraction > 0, "step_fraction");
        positive(s.cooling > 0 && s.cooling <= 1, "cooling");
        positive(s.warmup >= 1, "warmup");
        positive(s.redraw_probability >= 0 && s.redraw_probability <= 1, "redraw_probability");
        return s;
    }
    if (kind == "cross_entropy") {
        only_keys(j, where, {"kind", "batch", "elite_fraction", "min_elites", "stddev_floor", "categorical_smoothing",
                             "restart_after", "smoothing"});
        CrossEntropySpec s;
        count("batch", s.batch);
        num("elite_fraction", s.elite_fraction);
        count("min_elites", s.min_elites);
        num("stddev_floor", s.stddev_floor);
        num("categorical_smoothing", s.categorical_smoothing);
        count("restart_after", s.restart_after);
        num("smoothing", s.smoothing);
        positive(s.batch >= 2, "batch");
        positive(s.elite_fraction > 0 && s.elite_fraction <= 1, "elite_fraction");
        positive(s.min_elites >= 1 && s.min_elites <= s.batch, "min_elites");
        positive(s.stddev_floor > 0, "stddev_floor");
        positive(s.categorical_smoothing >= 0, "categorical_smoothing");
        positive(s.smoothing > 0 && s.smoothing <= 1, "smoothing");
        return s;
    }
    if (kind == "bayes_opt") {
        only_keys(j, where, {"kind", "length_scale", "jitter", "max_jitter", "candidates", "refine_rounds",
                             "refine_samples"});
        BayesOptSpec s;
        num("length_scale", s.length_scale);
        num("jitter", s.jitter);
        num("max_jitter", s.max_jitter);
        count("candidates", s.candidates);
        count("refine_rounds", s.refine_rounds);
        count("refine_samples", s.refine_samples);
        positive(s.length_scale > 0, "length_scale");
        positive(s.jitter > 0, "jitter");
        positive(s.max_jitter >= s.jitter, "max_jitter");
        positive(s.candidates >= 1, "candidates");
        return s;
    }
    invalid(join(where, "kind"),
            "unknown sampler '" + kind + "' (uniform, halton, annealing, cross_entropy, bayes_opt)");
}

SimulatorSpec parse_simulator(const ojson& j, const std::string& where)
{
    const std::string kind = get_string(require(j, where, "kind"), join(where, "kind"));
    if (kind == "in_process") {
        only_keys(j, where, {"kind", "name", "params"});
        InProcessSimulatorSpec s;
        s.name = get_string(require(j, where, "name"), join(where, "name"));
        const auto names = reference_simulator_names();
        if (std::find(names.begin(), names.end(), s.name) == names.end())
            invalid(join(where, "name"), "unknown reference simulator '" + s.name + "'");
        if (j.contains("params")) {
            if (!j.at("params").is_object())
                invalid(join(where, "params"), "expected an object");
            s.params = nlohmann::json::parse(j.at("params").dump());
        }
        return s;
    }
    if (kind == "socket") {
        only_keys(j, where, {"kind", "host", "port", "timeout_s"});
        SocketSimulatorSpec s;
        if (j.contains("host"))
            s.host = get_string(j.at("host"), join(where, "host"));
        if (j.contains("port")) {
            const auto p = get_unsigned(j.at("port"), join(where, "port"));
            if (p > 65535)
                invalid(join(where, "port"), "out of range");
            s.port = static_cast<std::uint16_t>(p);
        }
        if (j.contains("timeout_s")) {
            s.timeout_s = get_number(j.at("timeout_s"), join(where, "timeout_s"));
            if (!(s.timeout_s > 0))
                invalid(join(where, "timeout_s"), "must be positive");
        }
        return s;
    }
    invalid(join(where, "kind"), "unknown simulator kind '" + kind + "' (in_process, socket)");
}

Objective parse_objective(const ojson& j, const std::string& where)
{
    const std::string kind = get_string(require(j, where, "kind"), join(where, "kind"));
    if (kind == "robustness") {
        only_keys(j, where, {"kind"});
        return {};
    }
    if (kind == "signal_final") {
        only_keys(j, where, {"kind", "signal"});
        return {Objective::Kind::SignalFinal, get_string(require(j, where, "signal"), join(where, "signal"))};
    }
    invalid(join(where, "kind"), "unknown objective '" + kind + "' (robustness, signal_final)");
}

} // namespace

ojson parse_json_text(std::string_view text, const std::string& what)
{
    try {
        return ojson::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports "line L, column C"
        throw Error(ErrorKind::ConfigInvalid, what + ": " + e.what());
    }
}

DomainPtr parse_domain(const ojson& j, const std::string& where)
{
    if (!j.is_object() || j.size() != 1)
        invalid(where, "expected exactly one of box, interval, set, struct, array");
    const std::string key = j.begin().key();
    const ojson& body = j.begin().value();
    const std::string here = join(where, key);
    return rethrow_as_config(here, [&]() -> DomainPtr {
        if (key == "box") {
            only_keys(body, here, {"lo", "hi"});
            return Domain::box(get_numbers(require(body, here, "lo"), join(here, "lo")),
                               get_numbers(require(body, here, "hi"), join(here, "hi")));
        }
        if (key == "interval") {
            const auto b = get_numbers(body, here);
            if (b.size() != 2)
                invalid(here, "expected [lo, hi]");
            return Domain::interval(b[0], b[1]);
        }
        if (key == "set") {
            if (!body.is_array())
                invalid(here, "expected an array of strings or numbers");
            std::vector<Atom> values;
            for (std::size_t i = 0; i < body.size(); ++i) {
                const std::string w = here + "[" + std::to_string(i) + "]";
                if (body[i].is_string())
                    values.emplace_back(body[i].get<std::string>());
                else
                    values.emplace_back(get_number(body[i], w));
            }
            return Domain::finite_set(std::move(values));
        }
        if (key == "struct") {
            if (!body.is_object())
                invalid(here, "expected an object of fields");
            std::vector<std::pair<std::string, DomainPtr>> fields;
            for (const auto& [name, sub] : body.items())
                fields.emplace_back(name, parse_domain(sub, join(here, name)));
            return Domain::structure(std::move(fields));
        }
        if (key == "array") {
            only_keys(body, here, {"element", "length"});
            return Domain::array(parse_domain(require(body, here, "element"), join(here, "element")),
                                 static_cast<std::size_t>(get_unsigned(require(body, here, "length"), join(here, "length"))));
        }
        invalid(here, "unknown domain constructor (box, interval, set, struct, array)");
    });
}

FeatureSpace parse_space(const ojson& j, const std::string& where, std::size_t rejection_budget)
{
    only_keys(j, where, {"domain", "distributions", "constraints"});
    DomainPtr root = parse_domain(require(j, where, "domain"), join(where, "domain"));
    std::map<LeafPath, DistributionSpec> dists;
    if (j.contains("distributions")) {
        const auto& d = j.at("distributions");
        if (!d.is_object())
            invalid(join(where, "distributions"), "expected an object keyed by leaf path");
        for (const auto& [path, spec] : d.items())
            dists[path] = parse_distribution(spec, join(where, "distributions") + "." + path);
    }
    std::vector<Constraint> constraints;
    if (j.contains("constraints")) {
        const auto& c = j.at("constraints");
        if (!c.is_array())
            invalid(join(where, "constraints"), "expected an array of strings");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string w = join(where, "constraints") + "[" + std::to_string(i) + "]";
            const std::string text = get_string(c[i], w);
            constraints.push_back(rethrow_as_config(w, [&] { return Constraint::parse(text); }));
        }
    }
    return rethrow_as_config(where, [&] {
        return FeatureSpace::build(std::move(root), dists, std::move(constraints), rejection_budget);
    });
}

LoadedConfig parse_config(std::string_view text)
{
    const ojson j = parse_json_text(text, "config");
    only_keys(j, "config", {"space", "property", "sampler", "mode", "budget", "stop_on_first", "seed", "simulator",
                            "objective", "output_dir", "rejection_budget"});

    std::size_t rejection_budget = FeatureSpace::kDefaultRejectionBudget;
    if (j.contains("rejection_budget")) {
        rejection_budget = static_cast<std::size_t>(get_unsigned(j.at("rejection_budget"), "rejection_budget"));
        if (rejection_budget < 1)
            invalid("rejection_budget", "must be at least 1");
    }
    FeatureSpace space = parse_space(require(j, "", "space"), "space", rejection_budget);

    const std::string property_text = get_string(require(j, "", "property"), "property");
    Formula property = rethrow_as_config("property", [&] { return parse_formula(property_text); });

    RunConfig run{.space = std::move(space),
                  .property = std::move(property),
                  .sampler = UniformSpec{},
                  .mode = Mode::Falsify,
                  .budget = 100,
                  .stop_on_first = false,
                  .seed = 0,
                  .simulator = InProcessSimulatorSpec{},
                  .objective = Objective{}};
    if (j.contains("sampler"))
        run.sampler = parse_sampler(j.at("sampler"), "sampler");
    if (j.contains("mode")) {
        const std::string m = get_string(j.at("mode"), "mode");
        const auto mode = parse_mode(m);
        if (!mode)
            invalid("mode", "unknown mode '" + m + "' (falsify, fuzz, synthesize)");
        run.mode = *mode;
    }
    if (j.contains("budget")) {
        run.budget = static_cast<std::size_t>(get_unsigned(j.at("budget"), "budget"));
        if (run.budget < 1)
            invalid("budget", "must be at least 1");
    }
    if (j.contains("stop_on_first"))
        run.stop_on_first = get_bool(j.at("stop_on_first"), "stop_on_first");
    if (j.contains("seed"))
        run.seed = get_unsigned(j.at("seed"), "seed");
    run.simulator = parse_simulator(require(j, "", "simulator"), "simulator");
    if (j.contains("objective"))
        run.objective = parse_objective(j.at("objective"), "objective");

    LoadedConfig out{std::move(run), "fkit-out"};
    if (j.contains("output_dir"))
        out.output_dir = get_string(j.at("output_dir"), "output_dir");
    validate(out.run);
    return out;
}

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

LoadedConfig load_config(const std::filesystem::path& path)
{
    return parse_config(read_file(path));
}

FeatureSpace load_space(const std::filesystem::path& path)
{
    const ojson j = parse_json_text(read_file(path), path.string());
    if (j.is_object() && j.contains("space")) {
        std::size_t budget = FeatureSpace::kDefaultRejectionBudget;
        if (j.contains("rejection_budget"))
            budget = static_cast<std::size_t>(get_unsigned(j.at("rejection_budget"), "rejection_budget"));
        return parse_space(j.at("space"), "space", budget);
    }
    return parse_space(j, "space");
}

Point parse_point(const FeatureSpace& space, const ojson& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::PointSpaceMismatch, "a point is an object keyed by leaf path");
    Point p;
    for (const auto& [path, v] : j.items()) {
        if (v.is_string())
            p.values[path] = Atom(v.get<std::string>());
        else if (v.is_number())
            p.values[path] = v.get<double>();
        else
            throw Error(ErrorKind::PointSpaceMismatch, "leaf '" + path + "' must be a number or string");
    }
    // numbers may name finite-set atoms
    for (const auto& leaf : space.unordered())
        if (auto it = p.values.find(leaf.path); it != p.values.end())
            if (const double* d = std::get_if<double>(&it->second))
                it->second = Atom(*d);
    space.flatten(p);
    return p;
}

} // namespace fkit
