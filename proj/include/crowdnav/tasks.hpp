#pragma once

#include <optional>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/pedsim.hpp"
#include "crowdnav/world.hpp"

namespace crowdnav {

// What the robot currently navigates to. Either the fixed end goal, a
// pedestrian (tracked by id so the goal moves with them), or nothing (hold
// position near the collaborator).
struct TaskGoal {
    enum class Kind { EndGoal, Pedestrian, None };
    Kind kind = Kind::EndGoal;
    int ped_id = -1;

    static TaskGoal end_goal() { return {Kind::EndGoal, -1}; }
    static TaskGoal pedestrian(int id) { return {Kind::Pedestrian, id}; }
    static TaskGoal none() { return {Kind::None, -1}; }

    bool operator==(const TaskGoal&) const = default;
};

struct TaskAssignment {
    int flag = 0; // {0..5}
    TaskGoal goal = TaskGoal::end_goal();
    std::optional<int> vip_id; // pedestrian matched by the scan, if any
};

enum class TaskStage { Normal, StageOne, StageTwo };

inline double ped_robot_distance(const Pedestrian& ped, const RobotState& robot) {
    return (ped.position - robot.pose.position).norm();
}

// Guiding task scan. Pedestrians are visited in ascending id order and the
// last match wins:
//   RequestingGuide        -> flag 1, goal = that pedestrian
//   FollowingGuide         -> flag 2; if farther than 3 m, fall back to flag 1
//                             and steer to the pedestrian
//   no match               -> flag 0, goal = end goal
inline TaskAssignment select_goal_guiding(const std::vector<Pedestrian>& peds,
                                          const RobotState& robot) {
    TaskAssignment out;
    out.flag = 0;
    out.goal = TaskGoal::end_goal();
    for (const auto& ped : peds) {
        if (ped.state == SocialState::RequestingGuide) {
            out.flag = 1;
            out.goal = TaskGoal::pedestrian(ped.id);
            out.vip_id = ped.id;
        } else if (ped.state == SocialState::FollowingGuide) {
            out.flag = 2;
            out.vip_id = ped.id;
            if (ped_robot_distance(ped, robot) > 3.0) {
                out.flag = 1;
                out.goal = TaskGoal::pedestrian(ped.id);
            }
        }
    }
    return out;
}

// Following task scan, same loop semantics:
//   RequestingFollower -> flag 3; goal = pedestrian beyond 4 m, none within
//   GuideToGoal        -> flag 4; same 4 m rule
//   ClearingGoal       -> flag 5 (goal untouched, i.e. the end goal unless an
//                         earlier pedestrian overwrote it)
inline TaskAssignment select_goal_following(const std::vector<Pedestrian>& peds,
                                            const RobotState& robot) {
    TaskAssignment out;
    out.flag = 0;
    out.goal = TaskGoal::end_goal();
    for (const auto& ped : peds) {
        if (ped.state == SocialState::RequestingFollower) {
            out.flag = 3;
            out.vip_id = ped.id;
            if (ped_robot_distance(ped, robot) > 4.0)
                out.goal = TaskGoal::pedestrian(ped.id);
            else
                out.goal = TaskGoal::none();
        } else if (ped.state == SocialState::GuideToGoal) {
            out.flag = 4;
            out.vip_id = ped.id;
            if (ped_robot_distance(ped, robot) > 4.0)
                out.goal = TaskGoal::pedestrian(ped.id);
            else
                out.goal = TaskGoal::none();
        } else if (ped.state == SocialState::ClearingGoal) {
            out.flag = 5;
            out.vip_id = ped.id;
        }
    }
    return out;
}

// Reward stage of a flag: 1/3 approach the collaborator (keep-off condition),
// 2/4/5 accompany them (keep-close condition).
inline TaskStage task_stage(int flag) {
    switch (flag) {
        case 0: return TaskStage::Normal;
        case 1:
        case 3: return TaskStage::StageOne;
        case 2:
        case 4:
        case 5: return TaskStage::StageTwo;
        default: throw ContractViolation("task_stage: flag outside {0..5}");
    }
}

} // namespace crowdnav
