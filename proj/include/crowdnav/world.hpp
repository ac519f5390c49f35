#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/geometry.hpp"

namespace crowdnav {

// Static environment: an arena rectangle plus explicit wall segments and
// circular obstacles. The bounds rectangle clamps motion but is not itself a
// raycast target; maps that want solid borders list them as wall segments.
struct WorldMap {
    Rect bounds{{0.0, 0.0}, {20.0, 20.0}};
    std::vector<Segment> walls;
    std::vector<Circle> static_obstacles;

    void add_border_walls() {
        const Vec2 a{bounds.min.x, bounds.min.y}, b{bounds.max.x, bounds.min.y};
        const Vec2 c{bounds.max.x, bounds.max.y}, d{bounds.min.x, bounds.max.y};
        walls.push_back({a, b});
        walls.push_back({b, c});
        walls.push_back({c, d});
        walls.push_back({d, a});
    }

    void validate() const {
        if (!(bounds.max.x > bounds.min.x && bounds.max.y > bounds.min.y))
            throw ValidationError("map bounds are degenerate");
        for (const auto& w : walls)
            if (w.length() <= 0.0) throw ValidationError("zero-length wall segment");
        for (const auto& c : static_obstacles) {
            if (c.radius <= 0.0) throw ValidationError("static obstacle with radius <= 0");
            if (!bounds.contains(c.center))
                throw ValidationError("static obstacle outside map bounds");
        }
    }
};

struct Pose {
    Vec2 position;
    double heading = 0.0; // radians
};

struct RobotState {
    Pose pose;
    double linear_velocity = 0.0;  // m/s, in [0, v_max]
    double angular_velocity = 0.0; // rad/s
    double radius = 0.15;          // m
    std::optional<Vec2> goal;
    int task_flag = 0; // {0..5}

    Vec2 velocity_vector() const {
        return {linear_velocity * std::cos(pose.heading),
                linear_velocity * std::sin(pose.heading)};
    }
};

struct RobotLimits {
    double v_max = 0.22;      // m/s
    double omega_max = kPi;   // rad/s
};

struct LidarConfig {
    double angle_min = -kPi;
    double angle_max = kPi - 2.0 * kPi / 360.0; // 360 beams, 1 deg apart, [-pi, pi)
    int num_beams = 360;
    double max_range = 3.5;

    void validate() const {
        if (!(angle_max > angle_min)) throw ValidationError("lidar: angle_max <= angle_min");
        if (num_beams < 1) throw ValidationError("lidar: num_beams < 1");
        if (!(max_range > 0.0)) throw ValidationError("lidar: max_range <= 0");
    }

    double beam_angle(int i) const {
        const int div = std::max(num_beams - 1, 1);
        return angle_min + static_cast<double>(i) * (angle_max - angle_min) / div;
    }
};

struct LidarScan {
    std::vector<double> ranges;

    double min_range() const {
        double m = std::numeric_limits<double>::infinity();
        for (const double r : ranges) m = std::min(m, r);
        return m;
    }
};

namespace detail {

inline double trace_beam(const Ray& ray, const WorldMap& map,
                         const std::vector<Circle>& dynamic_circles, double max_range) {
    double best = max_range;
    for (const auto& w : map.walls) {
        if (auto t = ray_segment_intersection(ray, w); t && *t < best) best = *t;
    }
    for (const auto& c : map.static_obstacles) {
        if (auto t = ray_circle_intersection(ray, c); t && *t < best) best = *t;
    }
    for (const auto& c : dynamic_circles) {
        if (auto t = ray_circle_intersection(ray, c); t && *t < best) best = *t;
    }
    return best;
}

} // namespace detail

// Raycast over walls, static circles and pedestrian circles. Beam i leaves at
// heading + angle_min + i * span / max(num_beams - 1, 1); a miss reports
// max_range.
inline LidarScan raycast(const Pose& pose, const WorldMap& map,
                         const std::vector<Circle>& pedestrian_circles,
                         const LidarConfig& config) {
    config.validate();
    LidarScan scan;
    scan.ranges.resize(static_cast<std::size_t>(config.num_beams));
    for (int i = 0; i < config.num_beams; ++i) {
        const double a = pose.heading + config.beam_angle(i);
        const Ray ray{pose.position, {std::cos(a), std::sin(a)}};
        scan.ranges[static_cast<std::size_t>(i)] =
            detail::trace_beam(ray, map, pedestrian_circles, config.max_range);
    }
    return scan;
}

// Unicycle step: heading first, then translation along the updated heading.
// With bounds given, the position is clamped into the rectangle.
inline RobotState integrate_robot(const RobotState& state, double linear, double angular,
                                  double dt, const Rect* bounds = nullptr,
                                  const RobotLimits& limits = {}) {
    if (!(dt > 0.0)) throw ContractViolation("integrate_robot: dt must be positive");
    if (!std::isfinite(linear) || !std::isfinite(angular))
        throw LimitsError("integrate_robot: non-finite command");
    if (linear < 0.0 || linear > limits.v_max + 1e-12)
        throw LimitsError("integrate_robot: linear command outside [0, v_max]");
    if (std::abs(angular) > limits.omega_max + 1e-12)
        throw LimitsError("integrate_robot: angular command outside limits");

    RobotState next = state;
    next.pose.heading = wrap_angle(state.pose.heading + angular * dt);
    next.pose.position += Vec2{std::cos(next.pose.heading), std::sin(next.pose.heading)} *
                          (linear * dt);
    if (bounds) next.pose.position = bounds->clamp(next.pose.position);
    next.linear_velocity = linear;
    next.angular_velocity = angular;
    return next;
}

// Collision when the closest return is strictly inside the robot body.
inline bool check_collision(const LidarScan& scan, double robot_radius) {
    return scan.min_range() < robot_radius;
}

} // namespace crowdnav
