#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "crowdnav/tasks.hpp"

namespace crowdnav {

enum class DoneReason { None, Success, Collision, Timeout };

inline const char* to_string(DoneReason r) {
    switch (r) {
        case DoneReason::None: return "none";
        case DoneReason::Success: return "success";
        case DoneReason::Collision: return "collision";
        case DoneReason::Timeout: return "timeout";
    }
    return "unknown";
}

struct RewardConfig {
    double success_reward = 2.0;
    double collision_reward = -4.0;
    double approach_coeff = 0.018;
    double stall_penalty = -0.03;
    double recede_penalty = -0.014;
    double static_safety_penalty = -0.15;
    double dynamic_safety_coeff = 0.08;
    // Printed formula yields a positive value for violating a safety zone;
    // default keeps it a penalty. See r_dynamic_safety.
    double dynamic_safety_sign = -1.0;
    double goal_radius = 0.3;          // r_g
    double stage1_min_dist = 3.0;      // m
    double stage2_max_dist = 4.0;      // m
    double distance_epsilon = 1e-3;    // |d_rg delta| below this counts as unchanged
    double static_safety_distance = 0.5; // d_safe of static obstacles
    int step_max = 1800;               // 3 min at dt = 0.1 s
};

struct RewardTerms {
    double r_success = 0.0;
    double r_collision = 0.0;
    double r_distance = 0.0;
    double r_static_safety = 0.0;
    double r_dynamic_safety = 0.0;
    DoneReason done_reason = DoneReason::None;

    double total() const {
        return r_success + r_collision + r_distance + r_static_safety + r_dynamic_safety;
    }
};

struct PedSafetyObservation {
    double d_rh = 0.0;   // robot-to-human center distance
    double d_safe = 1.0; // that human's safety distance
};

// Everything one reward evaluation needs about the transition. Distances to
// the goal are measured against the step's current goal; with no goal set,
// both carry the -1 sentinel (the unchanged branch fires).
struct StepContext {
    Vec2 robot_pos_prev;
    Vec2 robot_pos_curr;
    bool has_goal = false;
    Vec2 goal_pos;
    double d_rg_prev = -1.0;
    double d_rg_curr = -1.0;
    double scan_min = std::numeric_limits<double>::infinity();
    double robot_radius = 0.15;
    int step_current = 0;
    double d_static = std::numeric_limits<double>::infinity(); // d_r, nearest static obstacle
    std::vector<PedSafetyObservation> peds;
    TaskStage stage = TaskStage::Normal;
    bool has_vip = false;
    double d_rp_prev = -1.0;
    double d_rp_curr = -1.0;

    double t(const RewardConfig& cfg) const {
        return static_cast<double>(step_current) / static_cast<double>(cfg.step_max);
    }
};

// Success term: fires when the robot center is strictly inside the goal disc.
inline double r_success(const StepContext& ctx, const RewardConfig& cfg, bool* done) {
    if (done) *done = false;
    if (!ctx.has_goal) return 0.0;
    if ((ctx.goal_pos - ctx.robot_pos_curr).norm() < cfg.goal_radius) {
        if (done) *done = true;
        return cfg.success_reward;
    }
    return 0.0;
}

// Collision term: smallest scan return strictly inside the robot body.
inline double r_collision(const StepContext& ctx, const RewardConfig& cfg, bool* done) {
    if (done) *done = false;
    if (ctx.scan_min < ctx.robot_radius) {
        if (done) *done = true;
        return cfg.collision_reward;
    }
    return 0.0;
}

namespace detail {

// cond_1 of the staged variant: keep at least 3 m away while approaching the
// collaborator, at most 4 m while accompanying them.
inline bool stage_condition(const StepContext& ctx, const RewardConfig& cfg) {
    switch (ctx.stage) {
        case TaskStage::Normal: return true;
        case TaskStage::StageOne: return ctx.d_rp_curr >= cfg.stage1_min_dist;
        case TaskStage::StageTwo: return ctx.d_rp_curr <= cfg.stage2_max_dist;
    }
    return true;
}

} // namespace detail

// Goal-distance shaping. Exactly one branch fires:
//   approaching (and cond_1 in an assistance stage) -> 0.018 * e^(1 - t)
//   unchanged within epsilon                        -> -0.03
//   otherwise                                       -> -0.014
inline double r_distance(const StepContext& ctx, const RewardConfig& cfg) {
    if (cfg.step_max <= 0) throw ContractViolation("r_distance: step_max must be positive");
    const double delta = ctx.d_rg_curr - ctx.d_rg_prev;
    const bool approaching = delta < -cfg.distance_epsilon;
    const bool unchanged = std::abs(delta) <= cfg.distance_epsilon;
    if (approaching && detail::stage_condition(ctx, cfg))
        return cfg.approach_coeff * std::exp(1.0 - ctx.t(cfg));
    if (unchanged) return cfg.stall_penalty;
    return cfg.recede_penalty;
}

// Static keep-out: flat penalty, applied once per step however many static
// obstacles violate it.
inline double r_static_safety(const StepContext& ctx, const RewardConfig& cfg) {
    return ctx.d_static < cfg.static_safety_distance ? cfg.static_safety_penalty : 0.0;
}

// Dynamic keep-out: accumulates sign * 0.08 * e^(1 - d_rh/d_safe) over every
// pedestrian strictly inside their safety distance.
inline double r_dynamic_safety(const StepContext& ctx, const RewardConfig& cfg) {
    double sum = 0.0;
    for (const auto& ped : ctx.peds) {
        if (!(ped.d_safe > 0.0))
            throw ContractViolation("r_dynamic_safety: d_safe must be positive");
        if (ped.d_rh < ped.d_safe) {
            const double d_sd = ped.d_rh / ped.d_safe;
            sum += cfg.dynamic_safety_sign * cfg.dynamic_safety_coeff * std::exp(1.0 - d_sd);
        }
    }
    return sum;
}

// Full per-step reward; collision outranks success when both fire.
inline RewardTerms compute_reward(const StepContext& ctx, const RewardConfig& cfg) {
    RewardTerms terms;
    bool success = false, collision = false;
    terms.r_success = r_success(ctx, cfg, &success);
    terms.r_collision = r_collision(ctx, cfg, &collision);
    terms.r_distance = r_distance(ctx, cfg);
    terms.r_static_safety = r_static_safety(ctx, cfg);
    terms.r_dynamic_safety = r_dynamic_safety(ctx, cfg);
    if (collision)
        terms.done_reason = DoneReason::Collision;
    else if (success)
        terms.done_reason = DoneReason::Success;
    return terms;
}

} // namespace crowdnav
