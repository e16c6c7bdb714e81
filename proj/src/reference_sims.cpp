#include <fkit/reference_sims.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include <fkit/error.hpp>

namespace fkit {

namespace {

double clamp_signal(double v)
{
    return std::clamp(v, -kSignalClamp, kSignalClamp);
}

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(ErrorKind::InvalidArgument, what);
}

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

} // namespace

Trace cartpole_simulate(const CartPoleParams& p)
{
    require(p.pole_mass > 0.0 && p.cart_mass > 0.0, "cart-pole masses must be positive");
    require(p.pole_half_length > 0.0, "pole half-length must be positive");
    require(p.dt > 0.0 && p.steps >= 1, "need dt > 0 and at least one step");

    const double total = p.cart_mass + p.pole_mass;
    const double pml = p.pole_mass * p.pole_half_length;
    const auto& k = p.gains;

    double x = p.x0, xd = 0.0, th = p.theta0, thd = 0.0;
    std::vector<double> times(p.steps + 1), xs(p.steps + 1), ths(p.steps + 1);
    xs[0] = clamp_signal(x);
    ths[0] = clamp_signal(th * kRadToDeg);
    times[0] = 0.0;
    for (std::size_t i = 1; i <= p.steps; ++i) {
        const double u = -(k.k_x * x + k.k_xdot * xd + k.k_theta * th + k.k_thetadot * thd);
        const double s = std::sin(th), c = std::cos(th);
        const double temp = (u + pml * thd * thd * s) / total;
        const double thacc = (kCartPoleGravity * s - c * temp) /
                             (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * c * c / total));
        const double xacc = temp - pml * thacc * c / total;
        x += p.dt * xd;
        xd += p.dt * xacc;
        th += p.dt * thd;
        thd += p.dt * thacc;
        // once diverged keep the state finite so later steps stay finite too
        x = clamp_signal(x);
        xd = clamp_signal(xd);
        th = clamp_signal(th);
        thd = clamp_signal(thd);
        times[i] = static_cast<double>(i) * p.dt;
        xs[i] = x;
        ths[i] = clamp_signal(th * kRadToDeg);
    }
    return Trace(std::move(times), {{"x", std::move(xs)}, {"theta_deg", std::move(ths)}});
}

std::vector<CartPoleParams> cartpole_worst_case_envs()
{
    std::vector<CartPoleParams> envs;
    auto add = [&](double mp, double l, double x0, double th0) {
        CartPoleParams p;
        p.pole_mass = mp;
        p.pole_half_length = l;
        p.x0 = x0;
        p.theta0 = th0;
        envs.push_back(p);
    };
    for (double mp : {0.05, 0.5})
        for (double l : {0.25, 1.0}) {
            add(mp, l, 0.5, 0.1);
            add(mp, l, -0.5, -0.1);
        }
    add(0.5, 1.0, 0.5, -0.1);
    add(0.5, 1.0, -0.5, 0.1);
    return envs;
}

Trace cartpole_gain_campaign(const CartPoleGains& gains, const std::vector<CartPoleParams>& envs)
{
    require(!envs.empty(), "need at least one environment");
    std::vector<double> times;
    std::vector<double> xs, ths;
    std::size_t offset = 0;
    for (CartPoleParams p : envs) {
        p.gains = gains;
        const Trace t = cartpole_simulate(p);
        for (std::size_t k = 0; k < t.size(); ++k)
            times.push_back(static_cast<double>(offset + k) * p.dt);
        offset += t.size();
        const auto& x = t.signal("x");
        const auto& th = t.signal("theta_deg");
        xs.insert(xs.end(), x.begin(), x.end());
        ths.insert(ths.end(), th.begin(), th.end());
    }
    return Trace(std::move(times), {{"x", std::move(xs)}, {"theta_deg", std::move(ths)}});
}

Trace lanechange_simulate(const LaneChangeParams& p)
{
    require(p.ego_speed >= 0.0, "ego speed must be non-negative");
    require(p.reaction_distance > 0.0, "reaction distance must be positive");
    require(p.dt > 0.0 && p.horizon > 0.0, "need dt > 0 and a positive horizon");
    require(p.initial_gap > 0.0, "initial gap must be positive");

    const auto steps = static_cast<std::size_t>(std::llround(p.horizon / p.dt));
    std::vector<double> times, gaps, lateral, overshoot;
    double gap = p.initial_gap, y = 0.0, yd = 0.0;
    bool triggered = false, cleared = false, collided = false;

    auto record = [&](std::size_t i) {
        times.push_back(static_cast<double>(i) * p.dt);
        gaps.push_back(clamp_signal(gap));
        lateral.push_back(clamp_signal(y));
        overshoot.push_back(clamp_signal(std::max(0.0, y - p.lane_target)));
    };
    record(0);
    for (std::size_t i = 1; i <= steps; ++i) {
        if (!collided) {
            if (!triggered && gap < p.reaction_distance)
                triggered = true;
            const double ydd = triggered ? p.lateral_gain * (p.lane_target - y) - p.damping * yd : 0.0;
            if (!cleared) {
                gap -= p.ego_speed * p.dt;
                if (gap <= 0.0) {
                    gap = 0.0;
                    collided = true;
                }
            }
            if (!collided) {
                y = clamp_signal(y + p.dt * yd);
                yd = clamp_signal(yd + p.dt * ydd);
                if (!cleared && y - p.obstacle_offset >= p.clearance)
                    cleared = true;
            }
        }
        record(i);
    }
    return Trace(std::move(times),
                 {{"gap", std::move(gaps)}, {"lateral_offset", std::move(lateral)}, {"overshoot", std::move(overshoot)}});
}

// ---------------------------------------------------------------------------
// Parameter plumbing

std::string parameter_name(const LeafPath& path)
{
    if (path.size() > 2 && path.compare(path.size() - 2, 2, ".0") == 0)
        return path.substr(0, path.size() - 2);
    return path;
}

std::map<std::string, double> point_assignments(const Point& point)
{
    std::map<std::string, double> out;
    for (const auto& [path, value] : point.values) {
        double v;
        if (const double* r = std::get_if<double>(&value)) {
            v = *r;
        } else {
            const Atom& a = std::get<Atom>(value);
            if (!a.is_number())
                throw Error(ErrorKind::ConfigInvalid, "leaf '" + path + "' holds a string; reference simulators take numbers");
            v = a.as_number();
        }
        out[parameter_name(path)] = v;
    }
    return out;
}

namespace {

const std::vector<std::string>& parameter_names(const std::string& sim)
{
    static const std::vector<std::string> cartpole = {"x0",  "theta0", "pole_mass", "pole_half_length",
                                                      "cart_mass", "dt", "steps", "k_x", "k_xdot",
                                                      "k_theta", "k_thetadot"};
    static const std::vector<std::string> gains = {"k_x", "k_xdot", "k_theta", "k_thetadot"};
    static const std::vector<std::string> lanechange = {"ego_speed",   "reaction_distance", "obstacle_offset",
                                                        "lateral_gain", "initial_gap",      "lane_target",
                                                        "clearance",    "damping",          "dt", "horizon"};
    if (sim == "cartpole")
        return cartpole;
    if (sim == "cartpole_gains")
        return gains;
    if (sim == "lanechange")
        return lanechange;
    throw Error(ErrorKind::ConfigInvalid, "simulator.name: unknown reference simulator '" + sim + "'");
}

class Params {
public:
    Params(const std::string& sim, const nlohmann::json& fixed, const std::map<std::string, double>& assigned)
        : fixed_(fixed), assigned_(assigned)
    {
        const auto& names = parameter_names(sim);
        auto known = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
        if (!fixed_.is_null() && !fixed_.is_object())
            throw Error(ErrorKind::ConfigInvalid, "simulator.params: expected an object");
        if (fixed_.is_object())
            for (const auto& [key, value] : fixed_.items()) {
                if (!known(key))
                    throw Error(ErrorKind::ConfigInvalid, "simulator.params." + key + ": not a parameter of '" + sim + "'");
                if (!value.is_number())
                    throw Error(ErrorKind::ConfigInvalid, "simulator.params." + key + ": expected a number");
            }
        for (const auto& [key, value] : assigned_)
            if (!known(key))
                throw Error(ErrorKind::ConfigInvalid, "space: leaf '" + key + "' is not a parameter of '" + sim + "'");
    }

    void get(const std::string& name, double& out) const
    {
        if (auto it = assigned_.find(name); it != assigned_.end())
            out = it->second;
        else if (fixed_.is_object() && fixed_.contains(name))
            out = fixed_.at(name).get<double>();
    }

    void get(const std::string& name, std::size_t& out) const
    {
        double v = static_cast<double>(out);
        get(name, v);
        if (!(v >= 1.0) || v != std::floor(v))
            throw Error(ErrorKind::ConfigInvalid, "simulator.params." + name + ": expected a positive integer");
        out = static_cast<std::size_t>(v);
    }

private:
    const nlohmann::json& fixed_;
    const std::map<std::string, double>& assigned_;
};

CartPoleGains read_gains(const Params& params)
{
    CartPoleGains g;
    params.get("k_x", g.k_x);
    params.get("k_xdot", g.k_xdot);
    params.get("k_theta", g.k_theta);
    params.get("k_thetadot", g.k_thetadot);
    return g;
}

class ReferenceSimulator : public Simulator {
public:
    ReferenceSimulator(std::string name, nlohmann::json fixed) : name_(std::move(name)), fixed_(std::move(fixed))
    {
        Params(name_, fixed_, {});
    }

    void check(const FeatureSpace& space) const override
    {
        std::map<std::string, double> probe;
        for (const auto& leaf : space.ordered())
            probe[parameter_name(leaf.path)] = leaf.lo;
        for (const auto& leaf : space.unordered()) {
            for (const auto& v : leaf.values)
                if (!v.is_number())
                    throw Error(ErrorKind::ConfigInvalid,
                                "space: leaf '" + leaf.path + "' holds strings; reference simulators take numbers");
            probe[parameter_name(leaf.path)] = 0.0;
        }
        Params(name_, fixed_, probe);
    }

    Trace simulate(const Point& point, std::uint64_t) override
    {
        return simulate_reference(name_, fixed_, point_assignments(point));
    }

private:
    std::string name_;
    nlohmann::json fixed_;
};

} // namespace

std::vector<std::string> reference_simulator_names()
{
    return {"cartpole", "cartpole_gains", "lanechange"};
}

Trace simulate_reference(const std::string& name, const nlohmann::json& fixed,
                         const std::map<std::string, double>& assignments)
{
    const Params params(name, fixed, assignments);
    if (name == "cartpole") {
        CartPoleParams p;
        params.get("x0", p.x0);
        params.get("theta0", p.theta0);
        params.get("pole_mass", p.pole_mass);
        params.get("pole_half_length", p.pole_half_length);
        params.get("cart_mass", p.cart_mass);
        params.get("dt", p.dt);
        params.get("steps", p.steps);
        p.gains = read_gains(params);
        return cartpole_simulate(p);
    }
    if (name == "cartpole_gains")
        return cartpole_gain_campaign(read_gains(params), cartpole_worst_case_envs());
    LaneChangeParams p;
    params.get("ego_speed", p.ego_speed);
    params.get("reaction_distance", p.reaction_distance);
    params.get("obstacle_offset", p.obstacle_offset);
    params.get("lateral_gain", p.lateral_gain);
    params.get("initial_gap", p.initial_gap);
    params.get("lane_target", p.lane_target);
    params.get("clearance", p.clearance);
    params.get("damping", p.damping);
    params.get("dt", p.dt);
    params.get("horizon", p.horizon);
    return lanechange_simulate(p);
}

std::unique_ptr<Simulator> make_reference_simulator(const std::string& name, nlohmann::json fixed)
{
    return std::make_unique<ReferenceSimulator>(name, std::move(fixed));
}

} // namespace fkit
