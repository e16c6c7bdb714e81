#include <fkit/cli.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <fkit/config.hpp>
#include <fkit/error.hpp>
#include <fkit/error_table.hpp>
#include <fkit/falsifier.hpp>
#include <fkit/socket.hpp>

namespace fkit {

using ojson = nlohmann::ordered_json;

namespace {

ojson atom_json(const Atom& a)
{
    return a.is_number() ? ojson(a.as_number()) : ojson(a.as_string());
}

ojson vector_json(const Eigen::VectorXd& v)
{
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

ojson row_point_json(const ErrorTable& table, const ErrorRow& row)
{
    ojson p = ojson::object();
    for (std::size_t i = 0; i < table.ordered_columns().size(); ++i)
        p[table.ordered_columns()[i]] = row.reals[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < table.unordered_columns().size(); ++i)
        p[table.unordered_columns()[i]] = atom_json(row.atoms[i]);
    return p;
}

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long long> budget;
    std::optional<std::string> out;
    std::optional<std::string> mode;
};

void add_run_flags(CLI::App* cmd, RunFlags& f)
{
    cmd->add_option("--config", f.config, "run configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--budget", f.budget, "override the simulation budget");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--mode", f.mode, "falsify | fuzz | synthesize");
}

LoadedConfig load_with_overrides(const RunFlags& f)
{
    LoadedConfig cfg = load_config(f.config);
    if (f.seed)
        cfg.run.seed = *f.seed;
    if (f.budget) {
        if (*f.budget < 1)
            throw Error(ErrorKind::ConfigInvalid, "--budget: must be at least 1");
        cfg.run.budget = static_cast<std::size_t>(*f.budget);
    }
    if (f.out)
        cfg.output_dir = *f.out;
    if (f.mode) {
        const auto m = parse_mode(*f.mode);
        if (!m)
            throw Error(ErrorKind::ConfigInvalid, "--mode: unknown mode '" + *f.mode + "'");
        cfg.run.mode = *m;
    }
    validate(cfg.run);
    return cfg;
}

int finish_run(const LoadedConfig& cfg, const RunResult& result, double seconds, std::ostream& err)
{
    write_artifacts(cfg.run, result, cfg.output_dir);
    {
        std::ofstream timing(std::filesystem::path(cfg.output_dir) / "timing.json");
        timing << ojson{{"wall_time_s", seconds}}.dump(2) << '\n';
    }
    err << to_string(cfg.run.mode) << ": " << result.simulations_used << " simulations, "
        << result.counterexamples.size() << (cfg.run.mode == Mode::Synthesize ? " satisfying" : " violating")
        << " points, " << result.failed_runs << " failed runs, " << std::fixed << std::setprecision(3) << seconds
        << std::defaultfloat << " s -> "
        << cfg.output_dir << '\n';
    return goal_reached(result) ? kExitFound : kExitClean;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_run(const RunFlags& f, std::ostream& err)
{
    const LoadedConfig cfg = load_with_overrides(f);
    const auto t0 = std::chrono::steady_clock::now();
    const RunResult result = run(cfg.run);
    return finish_run(cfg, result, seconds_since(t0), err);
}

struct ServeFlags {
    RunFlags run;
    std::string listen = "127.0.0.1:8200";
    bool loopback = false;
    std::optional<std::string> loopback_signature;
    double timeout_s = kDefaultTimeoutSeconds;
};

int cmd_serve(const ServeFlags& f, std::ostream& err)
{
    LoadedConfig cfg = load_with_overrides(f.run);
    const auto [host, port] = parse_endpoint(f.listen);
    SocketSimulator sim(host, port, f.timeout_s);
    err << "listening on " << host << ":" << sim.port() << '\n';

    std::thread client;
    std::string client_error;
    if (f.loopback) {
        const auto* in = std::get_if<InProcessSimulatorSpec>(&cfg.run.simulator);
        if (in == nullptr)
            throw Error(ErrorKind::ConfigInvalid, "simulator: --loopback needs an in_process simulator to serve");
        const std::string signature = f.loopback_signature.value_or(cfg.run.space.signature());
        client = std::thread([&, name = in->name, params = in->params, signature, p = sim.port()] {
            try {
                connect_and_serve("127.0.0.1", p, signature, reference_callback(name, params), f.timeout_s);
            } catch (const std::exception& e) {
                client_error = e.what();
            }
        });
    }
    cfg.run.simulator = SocketSimulatorSpec{host, sim.port(), f.timeout_s};
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<RunResult> result;
    try {
        result = run(cfg.run, sim);
    } catch (...) {
        if (client.joinable())
            client.join();
        if (!client_error.empty())
            err << "loopback client: " << client_error << '\n';
        throw;
    }
    if (client.joinable())
        client.join();
    if (!client_error.empty())
        err << "loopback client: " << client_error << '\n';
    return finish_run(cfg, *result, seconds_since(t0), err);
}

int cmd_client(const std::string& config, const std::string& connect, const std::optional<std::string>& signature,
               double timeout_s, std::ostream& err)
{
    const LoadedConfig cfg = load_config(config);
    const auto* in = std::get_if<InProcessSimulatorSpec>(&cfg.run.simulator);
    if (in == nullptr)
        throw Error(ErrorKind::ConfigInvalid, "simulator: the client serves an in_process reference simulator");
    const auto [host, port] = parse_endpoint(connect);
    const ClientSummary s = connect_and_serve(host, port, signature.value_or(cfg.run.space.signature()),
                                              reference_callback(in->name, in->params), timeout_s);
    err << "served " << s.episodes << " episodes, " << s.errors << " errors\n";
    return kExitClean;
}

int cmd_replay(const std::string& config, const std::string& point_text, std::ostream& out)
{
    const LoadedConfig cfg = load_config(config);
    const Point p = parse_point(cfg.run.space, parse_json_text(point_text, "--point"));
    const ReplayResult r = replay(cfg.run, p);
    ojson j;
    j["score"] = r.score;
    j["satisfied"] = r.satisfied;
    j["times"] = r.trace.times();
    ojson sig = ojson::object();
    for (const auto& [name, v] : r.trace.signals())
        sig[name] = v;
    j["signals"] = std::move(sig);
    out << j.dump() << '\n';
    return r.satisfied ? kExitClean : kExitFound;
}

struct AnalyzeFlags {
    std::string table;
    std::string space;
    bool pca = false;
    std::optional<double> recurrent;
    std::vector<std::string> k_closest;
};

int cmd_analyze(const AnalyzeFlags& f, std::ostream& out)
{
    const FeatureSpace space = load_space(f.space);
    const ErrorTable table = import_csv(space, f.table);
    ojson report;
    report["rows"] = table.size();
    report["ordered_columns"] = table.ordered_columns();
    report["unordered_columns"] = table.unordered_columns();
    if (f.pca) {
        const PcaReport pca = pca_analyze(table);
        ojson p;
        p["columns"] = pca.columns;
        ojson comps = ojson::array();
        for (Eigen::Index k = 0; k < pca.components.rows(); ++k)
            comps.push_back(vector_json(pca.components.row(k).transpose()));
        p["components"] = std::move(comps);
        p["explained_variance"] = vector_json(pca.explained_variance);
        p["mean"] = vector_json(pca.mean);
        p["scale"] = vector_json(pca.scale);
        report["pca"] = std::move(p);
    }
    if (f.recurrent) {
        const RecurrenceReport rec = recurrent_values(table, *f.recurrent);
        ojson freqs = ojson::object();
        for (const auto& [path, list] : rec.frequencies) {
            ojson a = ojson::array();
            for (const auto& af : list)
                a.push_back(ojson{{"value", atom_json(af.atom)}, {"frequency", af.frequency}});
            freqs[path] = std::move(a);
        }
        ojson combos = ojson::array();
        for (const auto& c : rec.combinations) {
            ojson values = ojson::object();
            for (const auto& [path, atom] : c.values)
                values[path] = atom_json(atom);
            combos.push_back(ojson{{"values", std::move(values)}, {"support", c.support}});
        }
        report["recurrent"] = ojson{{"threshold", *f.recurrent}, {"frequencies", std::move(freqs)},
                                    {"combinations", std::move(combos)}};
    }
    if (!f.k_closest.empty()) {
        if (f.k_closest.size() != 2)
            throw Error(ErrorKind::InvalidArgument, "--k-closest takes an anchor (JSON object) and a count");
        const Point anchor = parse_point(space, parse_json_text(f.k_closest[0], "--k-closest anchor"));
        char* end = nullptr;
        const long long k = std::strtoll(f.k_closest[1].c_str(), &end, 10);
        if (k < 1 || end != f.k_closest[1].c_str() + f.k_closest[1].size())
            throw Error(ErrorKind::InvalidArgument, "--k-closest count must be a positive integer");
        ojson rows = ojson::array();
        for (const auto& n : select_k_closest(table, anchor, static_cast<std::size_t>(k)))
            rows.push_back(ojson{{"run_id", n.row.run_id},
                                 {"distance", n.distance},
                                 {"score", n.row.score},
                                 {"point", row_point_json(table, n.row)}});
        report["k_closest"] = std::move(rows);
    }
    out << report.dump(2) << '\n';
    return kExitClean;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"fkit: simulation-guided falsification, fuzzing and parameter synthesis"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "sample, simulate, monitor and record");
    add_run_flags(run_cmd, run_flags);

    AnalyzeFlags analyze_flags;
    auto* analyze_cmd = app.add_subcommand("analyze", "summarize an error table");
    analyze_cmd->add_option("--table", analyze_flags.table, "error_table.csv")->required();
    analyze_cmd->add_option("--space", analyze_flags.space, "config or space JSON")->required();
    analyze_cmd->add_flag("--pca", analyze_flags.pca, "principal components of the ordered columns");
    analyze_cmd->add_option("--recurrent", analyze_flags.recurrent, "support threshold in (0, 1]");
    analyze_cmd->add_option("--k-closest", analyze_flags.k_closest, "ANCHOR_JSON K")->expected(2);

    ServeFlags serve_flags;
    auto* serve_cmd = app.add_subcommand("serve", "run against one external simulator over TCP");
    add_run_flags(serve_cmd, serve_flags.run);
    serve_cmd->add_option("--listen", serve_flags.listen, "HOST:PORT (port 0 picks one)");
    serve_cmd->add_flag("--loopback", serve_flags.loopback, "serve the config's reference simulator from a local client");
    serve_cmd->add_option("--loopback-signature", serve_flags.loopback_signature, "signature the loopback client sends");
    serve_cmd->add_option("--timeout", serve_flags.timeout_s, "seconds to wait for the simulator");

    std::string client_config, client_connect = "127.0.0.1:8200";
    std::optional<std::string> client_signature;
    double client_timeout = kDefaultTimeoutSeconds;
    auto* client_cmd = app.add_subcommand("client", "serve a reference simulator to a listening toolkit");
    client_cmd->add_option("--config", client_config, "config naming the in_process simulator")->required();
    client_cmd->add_option("--connect", client_connect, "HOST:PORT");
    client_cmd->add_option("--signature", client_signature, "space signature to announce");
    client_cmd->add_option("--timeout", client_timeout, "seconds to wait for the toolkit");

    std::string replay_config, replay_point;
    auto* replay_cmd = app.add_subcommand("replay", "simulate one point and print its trace");
    replay_cmd->add_option("--config", replay_config, "run configuration")->required();
    replay_cmd->add_option("--point", replay_point, "JSON object keyed by leaf path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitClean : kExitError;
    }

    try {
        if (*run_cmd)
            return cmd_run(run_flags, err);
        if (*analyze_cmd)
            return cmd_analyze(analyze_flags, out);
        if (*serve_cmd)
            return cmd_serve(serve_flags, err);
        if (*client_cmd)
            return cmd_client(client_config, client_connect, client_signature, client_timeout, err);
        if (*replay_cmd)
            return cmd_replay(replay_config, replay_point, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

} // namespace fkit
