#ifndef FKIT_REFERENCE_SIMS_HPP
#define FKIT_REFERENCE_SIMS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include <fkit/feature_space.hpp>
#include <fkit/trace.hpp>

namespace fkit {

/// Linear state feedback u = -K . [x, xdot, theta, thetadot].
struct CartPoleGains {
    double k_x = -1.0;
    double k_xdot = -1.5;
    double k_theta = -34.0;
    double k_thetadot = -3.0;
};

struct CartPoleParams {
    double x0 = 0.0;
    double theta0 = 0.0; // rad
    double pole_mass = 0.1;
    double pole_half_length = 0.5;
    double cart_mass = 1.0;
    double dt = 0.02;
    std::size_t steps = 500;
    CartPoleGains gains;
};

inline constexpr double kCartPoleGravity = 9.8;
inline constexpr double kSignalClamp = 1e6;

/// Classic cart-pole (gym equations), explicit Euler. Signals "x" and
/// "theta_deg" sampled at k * dt for k = 0..steps.
Trace cartpole_simulate(const CartPoleParams& p);

/// Corners of the pole-mass / half-length box at the extreme initial
/// offsets, plus the two mixed-sign starts for the heaviest, longest pole.
std::vector<CartPoleParams> cartpole_worst_case_envs();

/// One episode per environment with the given gains, concatenated into a
/// single trace (episode e occupies samples e*(steps+1) .. e*(steps+1)+steps).
Trace cartpole_gain_campaign(const CartPoleGains& gains, const std::vector<CartPoleParams>& envs);

struct LaneChangeParams {
    double ego_speed = 10.0;          // m/s
    double reaction_distance = 15.0;  // m
    double obstacle_offset = 0.0;     // lateral position of the obstacle's edge line, m
    double lateral_gain = 1.0;
    double initial_gap = 60.0;
    double lane_target = 3.5;
    double clearance = 2.0;
    double damping = 2.0;
    double dt = 0.05;
    double horizon = 15.0;
};

/// Ego drives toward a stopped obstacle; once the gap drops below
/// reaction_distance it steers toward the next lane with
/// y'' = gain * (target - y) - damping * y'. The gap freezes once the ego is
/// `clearance` beside the obstacle; reaching zero gap first is a collision.
/// Signals: gap, lateral_offset, overshoot.
Trace lanechange_simulate(const LaneChangeParams& p);

/// Something that turns a configuration into a trace.
class Simulator {
public:
    virtual ~Simulator() = default;
    /// Throws ConfigInvalid when the space's leaves cannot drive this simulator.
    virtual void check(const FeatureSpace& space) const { (void)space; }
    /// Called once before the first simulate() and once after the last.
    virtual void open(const FeatureSpace& space) { (void)space; }
    virtual void close() {}
    /// Throws SimulatorFailure for a run the simulator could not complete;
    /// other errors abort the campaign.
    virtual Trace simulate(const Point& point, std::uint64_t run_id) = 0;
};

/// Names accepted by make_reference_simulator: "cartpole", "cartpole_gains",
/// "lanechange".
std::vector<std::string> reference_simulator_names();

/// Point leaves are matched to parameter names after dropping a trailing
/// ".0" (so a 1-D box "pole_mass" is leaf "pole_mass.0"). `fixed` supplies
/// the remaining parameters.
Trace simulate_reference(const std::string& name, const nlohmann::json& fixed,
                         const std::map<std::string, double>& assignments);

std::unique_ptr<Simulator> make_reference_simulator(const std::string& name, nlohmann::json fixed);

/// Leaf path -> parameter name.
std::string parameter_name(const LeafPath& path);

/// Point as parameter-name assignments (finite-set leaves must be numeric).
std::map<std::string, double> point_assignments(const Point& point);

} // namespace fkit

#endif
