#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "crowdnav/env.hpp"
#include "crowdnav/learner.hpp"
#include "crowdnav/observation.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav {

// Maps observations to actions. Implementations must be deterministic
// given begin_episode(seed); clones run independently in worker threads.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual void begin_episode(std::uint64_t /*seed*/) {}
    virtual Action select(const ObservationVector& obs) = 0;
    virtual std::unique_ptr<Policy> clone() const = 0;
    // Variant the policy was built for; empty = works with any variant.
    virtual std::optional<AgentVariant> expected_variant() const {
        return std::nullopt;
    }
};

// Turns toward the current task goal and drives forward when the front
// sector is clear; stops when there is no goal. Training-free baseline.
class GreedyGoalPolicy : public Policy {
public:
    std::string name() const override { return "greedy-goal"; }

    Action select(const ObservationVector& obs) override {
        if (obs.values.size() != kObservationSize)
            throw ContractViolation("greedy-goal: observation length");
        const auto& v = obs.values;
        const double dist = v[static_cast<std::size_t>(obs_offsets::frame(0))];
        const double bearing =
            v[static_cast<std::size_t>(obs_offsets::frame(0) + 1)];
        if (dist < 0.0) return Action::Stop;

        if (bearing > kTurnInPlace) return Action::StrongLeft;
        if (bearing < -kTurnInPlace) return Action::StrongRight;
        if (bearing > kTurnMoving) return Action::Left;
        if (bearing < -kTurnMoving) return Action::Right;

        // 40 lidar buckets span the full circle starting behind the robot;
        // bucket 20 faces forward.
        const auto bucket_min = [&](int lo, int hi) {
            double m = std::numeric_limits<double>::infinity();
            for (int i = lo; i <= hi; ++i)
                m = std::min(m, v[static_cast<std::size_t>(i)]);
            return m;
        };
        const double front = bucket_min(17, 23);
        if (front > kClearance || front > dist) return Action::Forward;
        const double left = bucket_min(24, 29);
        const double right = bucket_min(11, 16);
        return left >= right ? Action::Left : Action::Right;
    }

    std::unique_ptr<Policy> clone() const override {
        return std::make_unique<GreedyGoalPolicy>(*this);
    }

private:
    static constexpr double kTurnInPlace = 0.5;
    static constexpr double kTurnMoving = 0.12;
    static constexpr double kClearance = 0.45;
};

class RandomPolicy : public Policy {
public:
    RandomPolicy() : rng_(0, "random-policy") {}

    std::string name() const override { return "random"; }

    void begin_episode(std::uint64_t seed) override {
        rng_ = Rng(seed, "random-policy");
    }

    Action select(const ObservationVector&) override {
        return static_cast<Action>(rng_.uniform_int(0, kNumActions - 1));
    }

    std::unique_ptr<Policy> clone() const override {
        return std::make_unique<RandomPolicy>(*this);
    }

private:
    Rng rng_;
};

// Greedy argmax over a trained checkpoint's action values.
class CheckpointPolicy : public Policy {
public:
    CheckpointPolicy(Network net, AgentVariant variant)
        : net_(std::make_shared<Network>(std::move(net))), variant_(variant) {}

    explicit CheckpointPolicy(const Checkpoint& cp)
        : CheckpointPolicy(cp.net, cp.variant) {}

    std::string name() const override { return "checkpoint"; }

    Action select(const ObservationVector& obs) override {
        const std::vector<double> x = to_network_input(obs, net_->spec());
        const NetworkOutput out = net_->forward(x);
        int best = 0;
        for (int a = 1; a < net_->spec().num_actions; ++a)
            if (out.q[static_cast<std::size_t>(a)] >
                out.q[static_cast<std::size_t>(best)])
                best = a;
        return static_cast<Action>(best);
    }

    std::unique_ptr<Policy> clone() const override {
        return std::make_unique<CheckpointPolicy>(*this);
    }

    std::optional<AgentVariant> expected_variant() const override {
        return variant_;
    }

private:
    std::shared_ptr<const Network> net_;
    AgentVariant variant_;
};

// "greedy-goal", "random", or a checkpoint file path.
inline std::unique_ptr<Policy> make_policy(const std::string& desc) {
    if (desc == "greedy-goal") return std::make_unique<GreedyGoalPolicy>();
    if (desc == "random") return std::make_unique<RandomPolicy>();
    return std::make_unique<CheckpointPolicy>(load_checkpoint(desc));
}

} // namespace crowdnav
