#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "crowdnav/errors.hpp"
#include "crowdnav/pedsim.hpp"
#include "crowdnav/tasks.hpp"
#include "crowdnav/world.hpp"

namespace crowdnav {

constexpr double kInvalid = -1.0;

constexpr int kLidarBlockSize = 40;
constexpr int kPedSlots = 7;
constexpr int kPedEntrySize = 7;
constexpr int kVipBlockSize = 6;
constexpr int kFrameSize = 2 + 1 + kVipBlockSize + kPedSlots * kPedEntrySize; // 58
constexpr int kHistoryLength = 8;
constexpr int kObservationSize = kLidarBlockSize + kHistoryLength * kFrameSize; // 504

static_assert(kObservationSize == 504, "observation layout must flatten to 504 scalars");

// One pedestrian as seen from the robot. Invalid slots carry -1 everywhere.
struct SemanticPedEntry {
    double type_code = kInvalid;
    double state_code = kInvalid;
    double radius = kInvalid;
    double safety_distance = kInvalid;
    double distance_to_agent = kInvalid;
    Vec2 position_in_agent_frame{kInvalid, kInvalid};

    static SemanticPedEntry invalid() { return {}; }

    std::array<double, kPedEntrySize> flatten() const {
        return {type_code, state_code,      radius,
                safety_distance, distance_to_agent, position_in_agent_frame.x,
                position_in_agent_frame.y};
    }
};

// Per-step semantic snapshot: goal polar coordinates, task flag, the VIP
// block, and the seven nearest pedestrians.
struct SemanticFrame {
    double goal_distance = kInvalid;
    double goal_bearing = kInvalid;
    double task_flag = 0.0;
    Vec2 vip_position{kInvalid, kInvalid};  // in the agent frame
    Vec2 vip_velocity{kInvalid, kInvalid};  // in the agent frame
    double vip_orientation = kInvalid;      // heading difference, wrapped
    double vip_distance = kInvalid;
    std::array<SemanticPedEntry, kPedSlots> peds{};

    std::array<double, kFrameSize> flatten() const {
        std::array<double, kFrameSize> out{};
        std::size_t k = 0;
        out[k++] = goal_distance;
        out[k++] = goal_bearing;
        out[k++] = task_flag;
        out[k++] = vip_position.x;
        out[k++] = vip_position.y;
        out[k++] = vip_velocity.x;
        out[k++] = vip_velocity.y;
        out[k++] = vip_orientation;
        out[k++] = vip_distance;
        for (const auto& ped : peds)
            for (const double v : ped.flatten()) out[k++] = v;
        return out;
    }
};

struct ObservationVector {
    std::vector<double> values; // length kObservationSize

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

enum class AgentVariant { Raw, SafeZone, NoSafeZone, Complete };

inline const char* to_string(AgentVariant v) {
    switch (v) {
        case AgentVariant::Raw: return "raw";
        case AgentVariant::SafeZone: return "safezone";
        case AgentVariant::NoSafeZone: return "nosafezone";
        case AgentVariant::Complete: return "complete";
    }
    return "unknown";
}

inline std::optional<AgentVariant> agent_variant_from_string(const std::string& s) {
    if (s == "raw") return AgentVariant::Raw;
    if (s == "safezone") return AgentVariant::SafeZone;
    if (s == "nosafezone") return AgentVariant::NoSafeZone;
    if (s == "complete") return AgentVariant::Complete;
    return std::nullopt;
}

inline AgentVariant variant_from_string(const std::string& s) {
    const auto v = agent_variant_from_string(s);
    if (!v) throw ValidationError("unknown agent variant: " + s);
    return *v;
}

// The seven nearest pedestrians, closest first. Short rosters are duplicated
// cyclically; an empty roster yields all-invalid slots.
inline std::array<SemanticPedEntry, kPedSlots> nearest_k_peds(
    const std::vector<Pedestrian>& peds, const RobotState& robot) {
    std::array<SemanticPedEntry, kPedSlots> out{};
    if (peds.empty()) {
        out.fill(SemanticPedEntry::invalid());
        return out;
    }

    std::vector<const Pedestrian*> sorted;
    sorted.reserve(peds.size());
    for (const auto& p : peds) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [&](const Pedestrian* a, const Pedestrian* b) {
        const double da = ped_robot_distance(*a, robot);
        const double db = ped_robot_distance(*b, robot);
        if (da != db) return da < db;
        return a->id < b->id;
    });

    const std::size_t available = std::min<std::size_t>(sorted.size(), kPedSlots);
    for (std::size_t slot = 0; slot < kPedSlots; ++slot) {
        const Pedestrian& ped = *sorted[slot % available];
        SemanticPedEntry e;
        e.type_code = static_cast<double>(static_cast<int>(ped.ped_type));
        e.state_code = static_cast<double>(static_cast<int>(ped.state));
        e.radius = ped.radius;
        e.safety_distance = ped.safety_distance;
        e.distance_to_agent = ped_robot_distance(ped, robot);
        const Vec2 rel = ped.position - robot.pose.position;
        e.position_in_agent_frame = rel.rotated(-robot.pose.heading);
        out[slot] = e;
    }
    return out;
}

// Assemble one semantic frame. goal_pos is the resolved navigation target (or
// absent), vip the tracked collaborator (or null).
inline SemanticFrame encode_frame(const RobotState& robot, const TaskAssignment& task,
                                  const std::vector<Pedestrian>& peds,
                                  const std::optional<Vec2>& goal_pos,
                                  const Pedestrian* vip) {
    SemanticFrame frame;
    if (goal_pos) {
        const Vec2 diff = *goal_pos - robot.pose.position;
        frame.goal_distance = diff.norm();
        frame.goal_bearing = wrap_angle(std::atan2(diff.y, diff.x) - robot.pose.heading);
    }
    frame.task_flag = static_cast<double>(task.flag);
    if (vip) {
        const Vec2 rel = vip->position - robot.pose.position;
        frame.vip_position = rel.rotated(-robot.pose.heading);
        frame.vip_velocity =
            (vip->velocity - robot.velocity_vector()).rotated(-robot.pose.heading);
        const double vip_speed = vip->velocity.norm();
        frame.vip_orientation =
            vip_speed > 1e-9
                ? wrap_angle(std::atan2(vip->velocity.y, vip->velocity.x) -
                             robot.pose.heading)
                : 0.0;
        frame.vip_distance = rel.norm();
    }
    frame.peds = nearest_k_peds(peds, robot);
    return frame;
}

// Frame history, newest first; a reset replicates the first frame.
class HistoryBuffer {
public:
    void reset(const SemanticFrame& first) {
        frames_.assign(kHistoryLength, first);
    }

    void push(const SemanticFrame& frame) {
        if (frames_.empty()) {
            reset(frame);
            return;
        }
        frames_.push_front(frame);
        while (frames_.size() > kHistoryLength) frames_.pop_back();
    }

    bool empty() const { return frames_.empty(); }
    const SemanticFrame& at(std::size_t i) const { return frames_.at(i); }
    std::size_t size() const { return frames_.size(); }

private:
    std::deque<SemanticFrame> frames_;
};

// Bucket minimum over contiguous equal-size groups; min keeps the nearest
// obstacle visible after downsampling.
inline std::vector<double> downsample_lidar(const LidarScan& scan, int out = kLidarBlockSize) {
    const int n = static_cast<int>(scan.ranges.size());
    if (n < out) throw ContractViolation("downsample_lidar: scan shorter than output");
    std::vector<double> result(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
        const int begin = static_cast<int>(static_cast<long long>(i) * n / out);
        const int end = static_cast<int>(static_cast<long long>(i + 1) * n / out);
        double m = scan.ranges[static_cast<std::size_t>(begin)];
        for (int j = begin + 1; j < end; ++j)
            m = std::min(m, scan.ranges[static_cast<std::size_t>(j)]);
        result[static_cast<std::size_t>(i)] = m;
    }
    return result;
}

inline ObservationVector assemble_observation(const std::vector<double>& lidar_block,
                                              const HistoryBuffer& history) {
    if (static_cast<int>(lidar_block.size()) != kLidarBlockSize)
        throw ContractViolation("assemble_observation: lidar block must hold 40 beams");
    if (history.size() != kHistoryLength)
        throw ContractViolation("assemble_observation: history must hold 8 frames");
    ObservationVector obs;
    obs.values.reserve(kObservationSize);
    obs.values.insert(obs.values.end(), lidar_block.begin(), lidar_block.end());
    for (std::size_t i = 0; i < kHistoryLength; ++i) {
        const auto flat = history.at(i).flatten();
        obs.values.insert(obs.values.end(), flat.begin(), flat.end());
    }
    return obs;
}

namespace obs_offsets {
constexpr int lidar = 0;
inline int frame(int i) { return kLidarBlockSize + i * kFrameSize; }
inline int goal(int i) { return frame(i); }
inline int flag(int i) { return frame(i) + 2; }
inline int vip(int i) { return frame(i) + 3; }
inline int ped(int i, int slot) { return frame(i) + 9 + slot * kPedEntrySize; }
// field indices within a pedestrian entry
constexpr int ped_type = 0;
constexpr int ped_state = 1;
constexpr int ped_radius = 2;
constexpr int ped_safety = 3;
constexpr int ped_distance = 4;
constexpr int ped_pos_x = 5;
constexpr int ped_pos_y = 6;
} // namespace obs_offsets

// Variant masking over the flat vector:
//   Complete   keeps everything
//   SafeZone   hides social state codes, keeps safety distances
//   NoSafeZone hides safety distances, keeps state codes
//   Raw        hides all pedestrian entries and the VIP block
inline ObservationVector apply_variant_mask(ObservationVector obs, AgentVariant variant) {
    if (obs.values.size() != kObservationSize)
        throw ContractViolation("apply_variant_mask: observation must hold 504 scalars");
    if (variant == AgentVariant::Complete) return obs;
    auto& v = obs.values;
    for (int f = 0; f < kHistoryLength; ++f) {
        if (variant == AgentVariant::Raw) {
            for (int k = 0; k < kVipBlockSize; ++k)
                v[static_cast<std::size_t>(obs_offsets::vip(f) + k)] = kInvalid;
        }
        for (int slot = 0; slot < kPedSlots; ++slot) {
            const int base = obs_offsets::ped(f, slot);
            switch (variant) {
                case AgentVariant::SafeZone:
                    v[static_cast<std::size_t>(base + obs_offsets::ped_state)] = kInvalid;
                    break;
                case AgentVariant::NoSafeZone:
                    v[static_cast<std::size_t>(base + obs_offsets::ped_safety)] = kInvalid;
                    break;
                case AgentVariant::Raw:
                    for (int k = 0; k < kPedEntrySize; ++k)
                        v[static_cast<std::size_t>(base + k)] = kInvalid;
                    break;
                case AgentVariant::Complete:
                    break;
            }
        }
    }
    return obs;
}

struct LayoutRow {
    std::string name;
    int offset = 0;
    int length = 0;
};

// Field map of the flattened observation, for debugging and the CLI.
inline std::vector<LayoutRow> observation_layout() {
    std::vector<LayoutRow> rows;
    rows.push_back({"lidar", obs_offsets::lidar, kLidarBlockSize});
    for (int f = 0; f < kHistoryLength; ++f) {
        const std::string prefix = "frame" + std::to_string(f) + ".";
        rows.push_back({prefix + "goal", obs_offsets::goal(f), 2});
        rows.push_back({prefix + "flag", obs_offsets::flag(f), 1});
        rows.push_back({prefix + "vip", obs_offsets::vip(f), kVipBlockSize});
        for (int s = 0; s < kPedSlots; ++s)
            rows.push_back({prefix + "ped" + std::to_string(s), obs_offsets::ped(f, s),
                            kPedEntrySize});
    }
    return rows;
}

} // namespace crowdnav
