#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/geometry.hpp"
#include "crowdnav/world.hpp"

namespace crowdnav {

// Behavioral mode of a pedestrian. The last five states drive the assistance
// task machinery; a pedestrian holds exactly one state at a time.
enum class SocialState : int {
    Walking = 0,
    Talking = 1,
    Running = 2,
    Idle = 3,
    RequestingGuide = 4,
    FollowingGuide = 5,
    RequestingFollower = 6,
    GuideToGoal = 7,
    ClearingGoal = 8,
};

enum class PedType : int {
    Adult = 0,
    Child = 1,
    Elder = 2,
};

constexpr int kNumSocialStates = 9;

inline const char* to_string(SocialState s) {
    switch (s) {
        case SocialState::Walking: return "walking";
        case SocialState::Talking: return "talking";
        case SocialState::Running: return "running";
        case SocialState::Idle: return "idle";
        case SocialState::RequestingGuide: return "requesting_guide";
        case SocialState::FollowingGuide: return "following_guide";
        case SocialState::RequestingFollower: return "requesting_follower";
        case SocialState::GuideToGoal: return "guide_to_goal";
        case SocialState::ClearingGoal: return "clearing_goal";
    }
    return "unknown";
}

inline const char* to_string(PedType t) {
    switch (t) {
        case PedType::Adult: return "adult";
        case PedType::Child: return "child";
        case PedType::Elder: return "elder";
    }
    return "unknown";
}

inline std::optional<SocialState> social_state_from_string(const std::string& s) {
    for (int i = 0; i < kNumSocialStates; ++i) {
        const auto st = static_cast<SocialState>(i);
        if (s == to_string(st)) return st;
    }
    return std::nullopt;
}

inline std::optional<PedType> ped_type_from_string(const std::string& s) {
    for (int i = 0; i < 3; ++i) {
        const auto t = static_cast<PedType>(i);
        if (s == to_string(t)) return t;
    }
    return std::nullopt;
}

// States that stand still and only react repulsively.
inline bool is_stationary_state(SocialState s) {
    return s == SocialState::Talking || s == SocialState::Idle ||
           s == SocialState::RequestingGuide || s == SocialState::RequestingFollower;
}

struct Pedestrian {
    int id = 0;
    Vec2 position;
    Vec2 velocity;
    double radius = 0.3;
    PedType ped_type = PedType::Adult;
    SocialState state = SocialState::Walking;
    // Base speed for moving states; 0 selects the per-state default.
    double desired_speed = 0.0;
    std::optional<Vec2> goal;
    double safety_distance = 1.0; // d_safe, kept in sync with (type, state)
};

// Keep-out radius by type and behavior. Children and elders get flat margins;
// adults scale with how predictable the behavior is.
inline double safety_distance_for(PedType type, SocialState state) {
    switch (type) {
        case PedType::Child: return 1.2;
        case PedType::Elder: return 1.3;
        case PedType::Adult:
            switch (state) {
                case SocialState::Talking: return 1.2;
                case SocialState::Running: return 1.5;
                default: return 1.0;
            }
    }
    return 1.0;
}

struct PedsimConfig {
    double tau = 0.5;        // relaxation time, s
    double ped_A = 2.0;      // pedestrian/robot repulsion strength
    double ped_B = 0.3;      // pedestrian/robot repulsion range, m
    double wall_A = 5.0;     // wall repulsion strength
    double wall_B = 0.1;     // wall repulsion range, m
    double speed_cap = 1.5;  // hard velocity cap, m/s
    double walking_speed = 0.3;
    double running_speed = 1.0;
    double assist_speed = 0.3; // FollowingGuide / GuideToGoal / ClearingGoal default
    double clearing_gain = 1.0; // k_clear
    double clearing_eps = 1e-3;
    double goal_reached_radius = 0.3;
};

// Effective desired speed for the current state. A positive per-pedestrian
// desired_speed overrides the default of moving states; stationary states are
// always 0.
inline double desired_speed_for(const Pedestrian& ped, const PedsimConfig& cfg) {
    if (is_stationary_state(ped.state)) return 0.0;
    if (ped.desired_speed > 0.0) return ped.desired_speed;
    switch (ped.state) {
        case SocialState::Walking: return cfg.walking_speed;
        case SocialState::Running: return cfg.running_speed;
        default: return cfg.assist_speed;
    }
}

namespace detail {

// Exponential body-to-body repulsion A * exp((r_ij - d_ij)/B) along the
// center-to-center direction. Coincident centers fall back to +x.
inline Vec2 exp_repulsion(const Vec2& self, double self_radius, const Vec2& other,
                          double other_radius, double A, double B) {
    const Vec2 diff = self - other;
    const double d = diff.norm();
    const Vec2 dir = d > 0.0 ? diff / d : Vec2{1.0, 0.0};
    const double magnitude = A * std::exp((self_radius + other_radius - d) / B);
    return dir * magnitude;
}

inline std::optional<Vec2> nearest_static_point(const Vec2& p, const WorldMap& map) {
    std::optional<Vec2> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& w : map.walls) {
        const Vec2 q = closest_point_on_segment(p, w);
        const double d = (p - q).norm();
        if (d < best_d) { best_d = d; best = q; }
    }
    for (const auto& c : map.static_obstacles) {
        const Vec2 dir = (p - c.center).normalized();
        const Vec2 q = c.center + dir * c.radius;
        const double d = (p - q).norm();
        if (d < best_d) { best_d = d; best = q; }
    }
    return best;
}

// Desired velocity vector for the driving term.
inline Vec2 desired_velocity(const Pedestrian& ped, const RobotState& robot,
                             const PedsimConfig& cfg) {
    const double speed = desired_speed_for(ped, cfg);
    if (speed <= 0.0) return {0.0, 0.0};

    if (ped.state == SocialState::FollowingGuide) {
        // Tracks the robot; stops once close enough to it.
        const Vec2 diff = robot.pose.position - ped.position;
        if (diff.norm() <= cfg.goal_reached_radius + robot.radius + ped.radius)
            return {0.0, 0.0};
        return diff.normalized() * speed;
    }
    if (ped.state == SocialState::ClearingGoal) {
        // Vacates the goal region by moving away from it.
        if (!ped.goal) return {0.0, 0.0};
        return (ped.position - *ped.goal).normalized() * speed;
    }
    if (!ped.goal) return {0.0, 0.0};
    const Vec2 diff = *ped.goal - ped.position;
    if (diff.norm() <= cfg.goal_reached_radius) return {0.0, 0.0};
    return diff.normalized() * speed;
}

} // namespace detail

// Social-force acceleration: goal-driving relaxation plus exponential
// repulsion from other pedestrians, the robot, and the nearest static point.
inline Vec2 social_force(const Pedestrian& ped, const std::vector<Pedestrian>& others,
                         const RobotState& robot, const WorldMap& map,
                         const PedsimConfig& cfg = {}) {
    const Vec2 v_desired = detail::desired_velocity(ped, robot, cfg);
    Vec2 force = (v_desired - ped.velocity) / cfg.tau;

    for (const auto& other : others) {
        if (other.id == ped.id) continue;
        force += detail::exp_repulsion(ped.position, ped.radius, other.position,
                                       other.radius, cfg.ped_A, cfg.ped_B);
    }
    force += detail::exp_repulsion(ped.position, ped.radius, robot.pose.position,
                                   robot.radius, cfg.ped_A, cfg.ped_B);
    if (const auto q = detail::nearest_static_point(ped.position, map)) {
        force += detail::exp_repulsion(ped.position, ped.radius, *q, 0.0, cfg.wall_A,
                                       cfg.wall_B);
    }
    return force;
}

// Extra repulsion from the robot while vacating the goal: k_clear / d_rh away
// from the robot. Zero outside the ClearingGoal state.
inline Vec2 goal_clearing_force(const Pedestrian& ped, const RobotState& robot,
                                const PedsimConfig& cfg = {}) {
    if (ped.state != SocialState::ClearingGoal) return {0.0, 0.0};
    const Vec2 diff = ped.position - robot.pose.position;
    const double d = diff.norm();
    const double magnitude = cfg.clearing_gain / std::max(d, cfg.clearing_eps);
    return (d > 0.0 ? diff / d : Vec2{1.0, 0.0}) * magnitude;
}

// Semi-implicit Euler over the previous-step snapshot, then a hard speed cap.
inline std::vector<Pedestrian> step_pedestrians(const std::vector<Pedestrian>& peds,
                                                const RobotState& robot,
                                                const WorldMap& map, double dt,
                                                const PedsimConfig& cfg = {}) {
    if (!(dt > 0.0)) throw ContractViolation("step_pedestrians: dt must be positive");
    std::vector<Pedestrian> next = peds;
    for (std::size_t i = 0; i < peds.size(); ++i) {
        const Pedestrian& ped = peds[i];
        Vec2 force = social_force(ped, peds, robot, map, cfg);
        force += goal_clearing_force(ped, robot, cfg);
        Vec2 v = ped.velocity + force * dt;
        const double speed = v.norm();
        if (speed > cfg.speed_cap) v = v * (cfg.speed_cap / speed);
        next[i].velocity = v;
        next[i].position = map.bounds.clamp(ped.position + v * dt);
    }
    return next;
}

// A script entry fires once, in order, when its trigger condition holds.
struct ScriptTrigger {
    enum class Kind { Time, Region, RobotNear };
    Kind kind = Kind::Time;
    double time = 0.0;   // Kind::Time, sim seconds
    Circle region;       // Kind::Region, fires when the pedestrian enters
    double robot_distance = 0.0; // Kind::RobotNear, fires when the robot is close
};

struct ScriptEntry {
    ScriptTrigger trigger;
    SocialState next_state = SocialState::Walking;
    std::optional<Vec2> new_goal; // replaces the goal, absent clears it
};

struct StateScript {
    std::vector<ScriptEntry> entries;

    void validate() const {
        double last_time = -std::numeric_limits<double>::infinity();
        for (const auto& e : entries) {
            if (e.trigger.kind == ScriptTrigger::Kind::Time) {
                if (e.trigger.time <= last_time)
                    throw ValidationError("state script: time triggers not strictly increasing");
                last_time = e.trigger.time;
            }
        }
    }
};

// Cursor over a StateScript; transitions are irreversible within an episode.
struct ScriptCursor {
    std::size_t next_entry = 0;
};

inline bool trigger_fires(const ScriptTrigger& t, const Pedestrian& ped,
                          const RobotState& robot, double sim_time) {
    switch (t.kind) {
        case ScriptTrigger::Kind::Time:
            return sim_time >= t.time;
        case ScriptTrigger::Kind::Region:
            return (ped.position - t.region.center).norm() <= t.region.radius;
        case ScriptTrigger::Kind::RobotNear:
            return (ped.position - robot.pose.position).norm() <= t.robot_distance;
    }
    return false;
}

// Fires at most one pending entry per call; the entry replaces state and goal
// and refreshes the safety distance for the new behavior.
inline Pedestrian apply_state_script(const Pedestrian& ped, const StateScript& script,
                                     ScriptCursor& cursor, double sim_time,
                                     const RobotState& robot) {
    if (cursor.next_entry >= script.entries.size()) return ped;
    const ScriptEntry& entry = script.entries[cursor.next_entry];
    if (!trigger_fires(entry.trigger, ped, robot, sim_time)) return ped;

    Pedestrian next = ped;
    next.state = entry.next_state;
    next.goal = entry.new_goal;
    next.safety_distance = safety_distance_for(next.ped_type, next.state);
    cursor.next_entry += 1;
    return next;
}

} // namespace crowdnav
