#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/observation.hpp"
#include "crowdnav/pedsim.hpp"
#include "crowdnav/reward.hpp"
#include "crowdnav/rng.hpp"
#include "crowdnav/tasks.hpp"
#include "crowdnav/world.hpp"

namespace crowdnav {

enum class Action : int {
    Forward = 0,
    Stop = 1,
    Left = 2,
    Right = 3,
    StrongLeft = 4,
    StrongRight = 5,
};

constexpr int kNumActions = 6;

inline const char* to_string(Action a) {
    switch (a) {
        case Action::Forward: return "forward";
        case Action::Stop: return "stop";
        case Action::Left: return "left";
        case Action::Right: return "right";
        case Action::StrongLeft: return "strong_left";
        case Action::StrongRight: return "strong_right";
    }
    return "unknown";
}

struct VelocityCommand {
    double linear = 0.0;  // m/s
    double angular = 0.0; // rad/s
};

inline VelocityCommand action_to_command(Action a) {
    switch (a) {
        case Action::Forward: return {0.22, 0.0};
        case Action::Stop: return {0.0, 0.0};
        case Action::Left: return {0.15, 0.75};
        case Action::Right: return {0.15, -0.75};
        case Action::StrongLeft: return {0.0, 1.5};
        case Action::StrongRight: return {0.0, -1.5};
    }
    throw ContractViolation("action_to_command: unknown action");
}

enum class TaskKind { PointToPoint, Guiding, Following };

inline const char* to_string(TaskKind k) {
    switch (k) {
        case TaskKind::PointToPoint: return "point";
        case TaskKind::Guiding: return "guide";
        case TaskKind::Following: return "follow";
    }
    return "unknown";
}

inline std::optional<TaskKind> task_kind_from_string(const std::string& s) {
    if (s == "point") return TaskKind::PointToPoint;
    if (s == "guide") return TaskKind::Guiding;
    if (s == "follow") return TaskKind::Following;
    return std::nullopt;
}

inline TaskKind parse_task_kind(const std::string& s) {
    const auto k = task_kind_from_string(s);
    if (!k) throw ValidationError("unknown task kind: " + s);
    return *k;
}

struct ScriptedPedestrian {
    Pedestrian ped;
    StateScript script;
};

struct Scenario {
    WorldMap map;
    Pose robot_start;
    double robot_radius = 0.15;
    Vec2 end_goal;
    std::vector<ScriptedPedestrian> pedestrians;
    TaskKind task_kind = TaskKind::PointToPoint;
    std::uint64_t seed = 0;

    void validate() const {
        map.validate();
        if (!map.bounds.contains(robot_start.position))
            throw ValidationError("scenario: robot start outside bounds");
        if (!map.bounds.contains(end_goal))
            throw ValidationError("scenario: end goal outside bounds");
        if (!(robot_radius > 0.0)) throw ValidationError("scenario: robot radius <= 0");

        std::vector<int> ids;
        for (const auto& sp : pedestrians) {
            if (!(sp.ped.radius > 0.0))
                throw ValidationError("scenario: pedestrian radius <= 0");
            if (!map.bounds.contains(sp.ped.position))
                throw ValidationError("scenario: pedestrian outside bounds");
            sp.script.validate();
            ids.push_back(sp.ped.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw ValidationError("scenario: duplicate pedestrian ids");

        if (task_kind != TaskKind::PointToPoint && !has_task_vip())
            throw ValidationError("scenario: assistance task without a scripted VIP");
    }

    bool has_task_vip() const {
        const auto matches = [&](SocialState s) {
            if (task_kind == TaskKind::Guiding)
                return s == SocialState::RequestingGuide || s == SocialState::FollowingGuide;
            if (task_kind == TaskKind::Following)
                return s == SocialState::RequestingFollower ||
                       s == SocialState::GuideToGoal || s == SocialState::ClearingGoal;
            return false;
        };
        for (const auto& sp : pedestrians) {
            if (matches(sp.ped.state)) return true;
            for (const auto& e : sp.script.entries)
                if (matches(e.next_state)) return true;
        }
        return false;
    }
};

struct EnvConfig {
    double dt = 0.1; // s
    LidarConfig lidar;
    PedsimConfig pedsim;
    RewardConfig reward;
    RobotLimits limits;
    AgentVariant variant = AgentVariant::Complete;
    bool wander = true; // unscripted walkers pick fresh random goals on arrival
};

struct StepInfo {
    int flag = 0;
    bool has_goal = true;
    Vec2 goal;
    double d_rp = -1.0;
    double robot_speed = 0.0;
    double vip_speed = -1.0;
    double sim_time = 0.0;
};

struct StepResult {
    ObservationVector observation;
    double reward_total = 0.0;
    RewardTerms terms;
    bool done = false;
    DoneReason done_reason = DoneReason::None;
    StepInfo info;
};

// Ring of recent episode mean rewards driving the obstacle-count schedule.
struct CurriculumState {
    int obstacle_count = 0;
    std::deque<double> window;
    int window_size = 50;
    double upper_threshold = 40.0; // summed mean reward that raises difficulty
    double lower_threshold = -20.0;
    int step_up = 2;
    int step_down = -2;
    int min_count = 0;
    int max_count = 30;
};

// Appends one episode's mean reward and moves the obstacle count when the
// windowed sum crosses a threshold. The window clears after any change so a
// single streak is only counted once.
inline CurriculumState curriculum_update(CurriculumState state, double episode_mean_reward) {
    state.window.push_back(episode_mean_reward);
    while (static_cast<int>(state.window.size()) > state.window_size) state.window.pop_front();

    double sum = 0.0;
    for (const double r : state.window) sum += r;

    if (sum >= state.upper_threshold) {
        state.obstacle_count =
            std::clamp(state.obstacle_count + state.step_up, state.min_count, state.max_count);
        state.window.clear();
    } else if (static_cast<int>(state.window.size()) == state.window_size &&
               sum < state.lower_threshold) {
        state.obstacle_count =
            std::clamp(state.obstacle_count + state.step_down, state.min_count, state.max_count);
        state.window.clear();
    }
    return state;
}

// Single-episode simulation. One instance is single-threaded; independent
// instances may run concurrently.
class Environment {
public:
    explicit Environment(EnvConfig cfg = {}) : cfg_(std::move(cfg)) {}

    const EnvConfig& config() const { return cfg_; }

    ObservationVector reset(const Scenario& scenario) {
        scenario.validate();
        cfg_.lidar.validate();
        scenario_ = scenario;

        robot_ = RobotState{};
        robot_.pose = scenario.robot_start;
        robot_.radius = scenario.robot_radius;

        peds_.clear();
        cursors_.clear();
        for (const auto& sp : scenario.pedestrians) {
            Pedestrian p = sp.ped;
            p.safety_distance = safety_distance_for(p.ped_type, p.state);
            peds_.push_back(p);
            cursors_.push_back({});
        }

        wander_rng_ = Rng(scenario.seed, "wander");
        sim_time_ = 0.0;
        step_count_ = 0;
        done_ = false;
        done_reason_ = DoneReason::None;
        episode_vip_.reset();

        apply_scripts();
        recompute_task();

        const LidarScan scan = raycast(robot_.pose, scenario_.map, ped_circles(), cfg_.lidar);
        last_scan_min_ = scan.min_range();
        const SemanticFrame frame =
            encode_frame(robot_, task_, peds_, resolved_goal(), episode_vip_ptr());
        history_.reset(frame);
        return apply_variant_mask(
            assemble_observation(downsample_lidar(scan, kLidarBlockSize), history_),
            cfg_.variant);
    }

    // One tick: robot moves, pedestrians move, the task layer re-selects the
    // goal, then sensors, reward, and observation run on the new state.
    StepResult step(Action action) {
        if (done_) throw ContractViolation("Environment::step called after episode end");

        const Vec2 robot_pos_prev = robot_.pose.position;
        const std::optional<Vec2> vip_pos_prev = episode_vip_position();

        const VelocityCommand cmd = action_to_command(action);
        robot_ = integrate_robot(robot_, cmd.linear, cmd.angular, cfg_.dt,
                                 &scenario_.map.bounds, cfg_.limits);

        step_count_ += 1;
        sim_time_ += cfg_.dt;

        apply_scripts();
        refresh_wander_goals();
        peds_ = step_pedestrians(peds_, robot_, scenario_.map, cfg_.dt, cfg_.pedsim);

        recompute_task();

        const LidarScan scan = raycast(robot_.pose, scenario_.map, ped_circles(), cfg_.lidar);
        last_scan_min_ = scan.min_range();

        const std::optional<Vec2> goal = resolved_goal();
        StepContext ctx;
        ctx.robot_pos_prev = robot_pos_prev;
        ctx.robot_pos_curr = robot_.pose.position;
        ctx.has_goal = goal.has_value();
        if (goal) {
            ctx.goal_pos = *goal;
            ctx.d_rg_prev = (*goal - robot_pos_prev).norm();
            ctx.d_rg_curr = (*goal - robot_.pose.position).norm();
        }
        ctx.scan_min = scan.min_range();
        ctx.robot_radius = robot_.radius;
        ctx.step_current = step_count_;
        ctx.d_static = nearest_static_distance(robot_.pose.position);
        ctx.peds.reserve(peds_.size());
        for (const auto& p : peds_)
            ctx.peds.push_back({(p.position - robot_.pose.position).norm(), p.safety_distance});
        ctx.stage = task_stage(task_.flag);
        if (const Pedestrian* vip = episode_vip_ptr()) {
            ctx.has_vip = true;
            ctx.d_rp_curr = (vip->position - robot_.pose.position).norm();
            if (vip_pos_prev) ctx.d_rp_prev = (*vip_pos_prev - robot_pos_prev).norm();
        }

        const RewardTerms terms = compute_reward(ctx, cfg_.reward);
        done_reason_ = terms.done_reason;
        if (done_reason_ == DoneReason::None && step_count_ >= cfg_.reward.step_max)
            done_reason_ = DoneReason::Timeout;
        done_ = done_reason_ != DoneReason::None;

        const SemanticFrame frame = encode_frame(robot_, task_, peds_, goal, episode_vip_ptr());
        history_.push(frame);

        StepResult result;
        result.observation = apply_variant_mask(
            assemble_observation(downsample_lidar(scan, kLidarBlockSize), history_),
            cfg_.variant);
        result.terms = terms;
        result.reward_total = terms.total();
        result.done = done_;
        result.done_reason = done_reason_;
        result.info.flag = task_.flag;
        result.info.has_goal = goal.has_value();
        if (goal) result.info.goal = *goal;
        result.info.d_rp = ctx.has_vip ? ctx.d_rp_curr : -1.0;
        result.info.robot_speed = robot_.linear_velocity;
        if (const Pedestrian* vip = episode_vip_ptr())
            result.info.vip_speed = vip->velocity.norm();
        result.info.sim_time = sim_time_;
        return result;
    }

    bool done() const { return done_; }
    DoneReason done_reason() const { return done_reason_; }
    int step_count() const { return step_count_; }
    double sim_time() const { return sim_time_; }
    const RobotState& robot() const { return robot_; }
    const std::vector<Pedestrian>& pedestrians() const { return peds_; }
    const Scenario& scenario() const { return scenario_; }
    const TaskAssignment& task() const { return task_; }
    std::optional<int> vip_id() const { return episode_vip_; }

    const Pedestrian* episode_vip_ptr() const {
        if (!episode_vip_) return nullptr;
        for (const auto& p : peds_)
            if (p.id == *episode_vip_) return &p;
        return nullptr;
    }

    std::optional<Vec2> resolved_goal() const {
        switch (task_.goal.kind) {
            case TaskGoal::Kind::EndGoal: return scenario_.end_goal;
            case TaskGoal::Kind::None: return std::nullopt;
            case TaskGoal::Kind::Pedestrian:
                for (const auto& p : peds_)
                    if (p.id == task_.goal.ped_id) return p.position;
                return std::nullopt;
        }
        return std::nullopt;
    }

private:
    std::vector<Circle> ped_circles() const {
        std::vector<Circle> circles;
        circles.reserve(peds_.size());
        for (const auto& p : peds_) circles.push_back({p.position, p.radius});
        return circles;
    }

    void apply_scripts() {
        for (std::size_t i = 0; i < peds_.size(); ++i)
            peds_[i] = apply_state_script(peds_[i], scenario_.pedestrians[i].script,
                                          cursors_[i], sim_time_, robot_);
    }

    // Unscripted walkers and runners pick a fresh target once they arrive.
    void refresh_wander_goals() {
        if (!cfg_.wander) return;
        const Rect& b = scenario_.map.bounds;
        for (std::size_t i = 0; i < peds_.size(); ++i) {
            Pedestrian& p = peds_[i];
            if (!scenario_.pedestrians[i].script.entries.empty()) continue;
            if (p.state != SocialState::Walking && p.state != SocialState::Running) continue;
            const bool arrived =
                p.goal && (*p.goal - p.position).norm() <= cfg_.pedsim.goal_reached_radius;
            if (p.goal && !arrived) continue;
            const double margin = std::min(0.5, std::min(b.width(), b.height()) / 4.0);
            p.goal = Vec2{wander_rng_.uniform(b.min.x + margin, b.max.x - margin),
                          wander_rng_.uniform(b.min.y + margin, b.max.y - margin)};
        }
    }

    void recompute_task() {
        switch (scenario_.task_kind) {
            case TaskKind::PointToPoint:
                task_ = TaskAssignment{};
                break;
            case TaskKind::Guiding:
                task_ = select_goal_guiding(peds_, robot_);
                break;
            case TaskKind::Following:
                task_ = select_goal_following(peds_, robot_);
                break;
        }
        if (task_.vip_id && !episode_vip_) episode_vip_ = task_.vip_id;
        robot_.task_flag = task_.flag;
        robot_.goal = resolved_goal();
    }

    double nearest_static_distance(const Vec2& p) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& w : scenario_.map.walls)
            best = std::min(best, distance_to_segment(p, w));
        for (const auto& c : scenario_.map.static_obstacles)
            best = std::min(best, distance_to_circle(p, c));
        return best;
    }

    std::optional<Vec2> episode_vip_position() const {
        if (const Pedestrian* vip = episode_vip_ptr()) return vip->position;
        return std::nullopt;
    }

    EnvConfig cfg_;
    Scenario scenario_;
    RobotState robot_;
    std::vector<Pedestrian> peds_;
    std::vector<ScriptCursor> cursors_;
    HistoryBuffer history_;
    TaskAssignment task_;
    std::optional<int> episode_vip_;
    Rng wander_rng_{0};
    double sim_time_ = 0.0;
    int step_count_ = 0;
    bool done_ = false;
    DoneReason done_reason_ = DoneReason::None;
    double last_scan_min_ = std::numeric_limits<double>::infinity();
};

struct ScenarioOptions {
    double map_size = 20.0;
    double ped_speed = 0.3;      // walking speed of crowd obstacles
    double vip_speed = 0.18;     // lead pedestrian speed in following tasks
    std::string style = "random"; // random | crowds | running
    double min_goal_separation = 0.0; // 0 -> 40% of map size
    int max_placement_retries = 200;
};

// Randomized scenario: border-walled square map, sampled start/goal, and
// non-overlapping pedestrian spawns. Assistance tasks script one VIP through
// random intermediate targets before the final goal.
inline Scenario random_scenario(int n_obstacles, TaskKind task_kind, std::uint64_t seed,
                                const ScenarioOptions& opts = {}) {
    if (n_obstacles < 0) throw ContractViolation("random_scenario: n_obstacles < 0");
    Rng rng(seed, "scenario");

    Scenario sc;
    sc.seed = seed;
    sc.task_kind = task_kind;
    sc.map.bounds = Rect{{0.0, 0.0}, {opts.map_size, opts.map_size}};
    sc.map.add_border_walls();

    const double margin = 1.0;
    const auto sample_point = [&]() {
        return Vec2{rng.uniform(margin, opts.map_size - margin),
                    rng.uniform(margin, opts.map_size - margin)};
    };

    const double min_sep =
        opts.min_goal_separation > 0.0 ? opts.min_goal_separation : 0.4 * opts.map_size;
    sc.robot_start.position = sample_point();
    sc.robot_start.heading = rng.uniform(-kPi, kPi);
    int retries = opts.max_placement_retries;
    do {
        sc.end_goal = sample_point();
    } while ((sc.end_goal - sc.robot_start.position).norm() < min_sep && retries-- > 0);
    if (retries <= 0 && (sc.end_goal - sc.robot_start.position).norm() < min_sep)
        throw ValidationError("random_scenario: could not separate start and goal");

    std::vector<Vec2> taken{sc.robot_start.position};
    const auto place = [&](double clearance_robot, double clearance_ped) {
        for (int attempt = 0; attempt < opts.max_placement_retries; ++attempt) {
            const Vec2 p = sample_point();
            bool ok = (p - sc.robot_start.position).norm() >= clearance_robot;
            for (std::size_t i = 1; ok && i < taken.size(); ++i)
                ok = (p - taken[i]).norm() >= clearance_ped;
            if (ok) {
                taken.push_back(p);
                return p;
            }
        }
        throw ValidationError("random_scenario: map too crowded to place obstacles");
    };

    int next_id = 0;
    if (task_kind != TaskKind::PointToPoint) {
        ScriptedPedestrian vip;
        vip.ped.id = next_id++;
        vip.ped.position = place(3.0, 0.8);
        vip.ped.ped_type = PedType::Adult;
        vip.ped.desired_speed = opts.vip_speed;

        const int n_intermediate = rng.uniform_int(1, 3);
        std::vector<Vec2> targets;
        for (int i = 0; i < n_intermediate; ++i) targets.push_back(sample_point());

        if (task_kind == TaskKind::Following) {
            vip.ped.state = SocialState::RequestingFollower;
            vip.ped.goal.reset();
            StateScript script;
            // Engage once the follower is in range, then lead through the
            // waypoints, finish at the end goal, and clear it.
            script.entries.push_back(
                {{ScriptTrigger::Kind::RobotNear, 0.0, {}, 4.0},
                 SocialState::GuideToGoal,
                 targets.front()});
            for (std::size_t i = 1; i < targets.size(); ++i) {
                script.entries.push_back(
                    {{ScriptTrigger::Kind::Region, 0.0, {targets[i - 1], 0.4}, 0.0},
                     SocialState::GuideToGoal,
                     targets[i]});
            }
            script.entries.push_back(
                {{ScriptTrigger::Kind::Region, 0.0, {targets.back(), 0.4}, 0.0},
                 SocialState::GuideToGoal,
                 sc.end_goal});
            script.entries.push_back(
                {{ScriptTrigger::Kind::Region, 0.0, {sc.end_goal, 0.5}, 0.0},
                 SocialState::ClearingGoal,
                 sc.end_goal});
            vip.script = script;
        } else { // Guiding
            vip.ped.state = SocialState::Walking;
            vip.ped.goal = targets.front();
            StateScript script;
            for (std::size_t i = 1; i < targets.size(); ++i) {
                script.entries.push_back(
                    {{ScriptTrigger::Kind::Region, 0.0, {targets[i - 1], 0.4}, 0.0},
                     SocialState::Walking,
                     targets[i]});
            }
            script.entries.push_back(
                {{ScriptTrigger::Kind::Region, 0.0, {targets.back(), 0.4}, 0.0},
                 SocialState::RequestingGuide,
                 std::nullopt});
            script.entries.push_back(
                {{ScriptTrigger::Kind::RobotNear, 0.0, {}, 2.0},
                 SocialState::FollowingGuide,
                 std::nullopt});
            vip.script = script;
        }
        sc.pedestrians.push_back(std::move(vip));
    }

    const int n_crowd_anchors = std::max(1, n_obstacles / 5);
    std::vector<Vec2> anchors;
    for (int i = 0; i < n_crowd_anchors; ++i) anchors.push_back(sample_point());

    for (int i = 0; i < n_obstacles; ++i) {
        ScriptedPedestrian sp;
        sp.ped.id = next_id++;
        sp.ped.position = place(1.5, 0.8);
        sp.ped.ped_type = static_cast<PedType>(rng.uniform_int(0, 2));
        if (opts.style == "running") {
            sp.ped.state = SocialState::Running;
            sp.ped.desired_speed = 0.0; // per-state default, 1.0 m/s
            sp.ped.goal = sample_point();
        } else if (opts.style == "crowds") {
            const Vec2 anchor = anchors[static_cast<std::size_t>(i) % anchors.size()];
            sp.ped.state = SocialState::Walking;
            sp.ped.desired_speed = opts.ped_speed;
            sp.ped.goal = anchor;
            // Gather at the anchor and stand talking.
            sp.script.entries.push_back(
                {{ScriptTrigger::Kind::Region, 0.0, {anchor, 0.5}, 0.0},
                 SocialState::Talking,
                 std::nullopt});
        } else {
            sp.ped.state = SocialState::Walking;
            sp.ped.desired_speed = opts.ped_speed;
            sp.ped.goal = sample_point();
        }
        sc.pedestrians.push_back(std::move(sp));
    }

    sc.validate();
    return sc;
}

} // namespace crowdnav
