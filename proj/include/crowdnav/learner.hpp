#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crowdnav/csv.hpp"
#include "crowdnav/env.hpp"
#include "crowdnav/errors.hpp"
#include "crowdnav/observation.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav {

// Two-body value network: lidar and pedestrian history pass through
// separate bodies; their outputs are concatenated with the direct scalars
// (goal, flag, VIP, per history frame) and fed to a shared trunk with a
// 6-way action-value head and a scalar state-value head.
struct NetworkSpec {
    int lidar_input = kLidarBlockSize;
    int ped_input = kHistoryLength * kPedSlots * kPedEntrySize;
    int direct_input = kHistoryLength * (2 + 1 + kVipBlockSize);
    std::vector<int> lidar_hidden{64};
    std::vector<int> ped_hidden{128};
    std::vector<int> trunk_hidden{128};
    int num_actions = kNumActions;
    double leaky_slope = 0.0; // rectifier leak, 0 = plain relu
    double init_scale = 1.0;

    int observation_size() const {
        return lidar_input + ped_input + direct_input;
    }

    void validate() const {
        if (lidar_input <= 0 || ped_input <= 0 || direct_input <= 0)
            throw ValidationError("network spec: input widths must be positive");
        if (num_actions != kNumActions)
            throw ValidationError("network spec: policy head must have " +
                                  std::to_string(kNumActions) + " outputs");
        for (const auto* h : {&lidar_hidden, &ped_hidden, &trunk_hidden}) {
            if (h->empty())
                throw ValidationError("network spec: empty hidden stack");
            for (const int w : *h)
                if (w <= 0)
                    throw ValidationError("network spec: non-positive width");
        }
        if (leaky_slope < 0.0 || leaky_slope >= 1.0)
            throw ValidationError("network spec: leaky_slope out of range");
        if (init_scale <= 0.0)
            throw ValidationError("network spec: init_scale must be positive");
    }

    bool operator==(const NetworkSpec&) const = default;
};

struct Tensor {
    std::string name;
    int rows = 0;
    int cols = 1;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::string n, int r, int c)
        : name(std::move(n)), rows(r), cols(c),
          v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const {
        return v[static_cast<std::size_t>(r) * cols + c];
    }
};

struct NetworkOutput {
    std::vector<double> q;
    double v = 0.0;
};

// Cached activations from one forward pass, consumed by backward().
struct ForwardCache {
    std::vector<std::vector<double>> lidar; // [0] input, then layer outputs
    std::vector<std::vector<double>> ped;
    std::vector<std::vector<double>> trunk;
    NetworkOutput out;
};

namespace net_detail {

inline void affine(const Tensor& w, const Tensor& b,
                   const std::vector<double>& x, std::vector<double>& y) {
    if (w.cols != static_cast<int>(x.size()))
        throw ContractViolation("network: shape mismatch in affine layer " +
                                w.name);
    y.assign(static_cast<std::size_t>(w.rows), 0.0);
    for (int r = 0; r < w.rows; ++r) {
        double acc = b.v[static_cast<std::size_t>(r)];
        const double* row = &w.v[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

inline void rectify(std::vector<double>& y, double leak) {
    for (double& e : y)
        if (e < 0.0) e *= leak;
}

} // namespace net_detail

class Network {
public:
    Network() : Network(NetworkSpec{}) {}

    explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        build_stack("lidar", spec_.lidar_input, spec_.lidar_hidden);
        build_stack("ped", spec_.ped_input, spec_.ped_hidden);
        const int trunk_in = spec_.lidar_hidden.back() +
                             spec_.ped_hidden.back() + spec_.direct_input;
        build_stack("trunk", trunk_in, spec_.trunk_hidden);
        const int top = spec_.trunk_hidden.back();
        add_pair("policy", spec_.num_actions, top);
        add_pair("value", 1, top);
    }

    const NetworkSpec& spec() const { return spec_; }
    std::vector<Tensor>& tensors() { return tensors_; }
    const std::vector<Tensor>& tensors() const { return tensors_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Tensor& t : tensors_) n += t.v.size();
        return n;
    }

    // Uniform fan-in init for weights; biases stay zero.
    void init(Rng& rng) {
        for (Tensor& t : tensors_) {
            if (t.cols == 1 && t.name.find(".b") != std::string::npos) continue;
            const double bound = spec_.init_scale / std::sqrt(double(t.cols));
            for (double& e : t.v) e = rng.uniform(-bound, bound);
        }
    }

    NetworkOutput forward(const std::vector<double>& input,
                          ForwardCache* cache = nullptr) const {
        if (static_cast<int>(input.size()) != spec_.observation_size())
            throw ContractViolation(
                "network: input length " + std::to_string(input.size()) +
                ", expected " + std::to_string(spec_.observation_size()));
        ForwardCache local;
        ForwardCache& ws = cache ? *cache : local;

        const auto begin = input.begin();
        std::vector<double> lidar_in(begin, begin + spec_.lidar_input);
        std::vector<double> ped_in(begin + spec_.lidar_input,
                                   begin + spec_.lidar_input + spec_.ped_input);
        std::vector<double> direct(begin + spec_.lidar_input + spec_.ped_input,
                                   input.end());

        run_stack(lidar_base_, spec_.lidar_hidden.size(), std::move(lidar_in),
                  ws.lidar);
        run_stack(ped_base_, spec_.ped_hidden.size(), std::move(ped_in),
                  ws.ped);

        std::vector<double> trunk_in;
        trunk_in.reserve(ws.lidar.back().size() + ws.ped.back().size() +
                         direct.size());
        trunk_in.insert(trunk_in.end(), ws.lidar.back().begin(),
                        ws.lidar.back().end());
        trunk_in.insert(trunk_in.end(), ws.ped.back().begin(),
                        ws.ped.back().end());
        trunk_in.insert(trunk_in.end(), direct.begin(), direct.end());
        run_stack(trunk_base_, spec_.trunk_hidden.size(), std::move(trunk_in),
                  ws.trunk);

        const std::vector<double>& top = ws.trunk.back();
        net_detail::affine(tensors_[policy_base_], tensors_[policy_base_ + 1],
                           top, ws.out.q);
        std::vector<double> v1;
        net_detail::affine(tensors_[value_base_], tensors_[value_base_ + 1],
                           top, v1);
        ws.out.v = v1[0];
        return ws.out;
    }

    // Accumulates dLoss/dParam into grads (aligned with tensors()) given
    // head gradients; returns nothing. grads must be zero_grads()-shaped.
    void backward(const ForwardCache& ws, const std::vector<double>& dq,
                  double dv, std::vector<Tensor>& grads) const {
        if (static_cast<int>(dq.size()) != spec_.num_actions)
            throw ContractViolation("network: head gradient shape mismatch");
        const std::vector<double>& top = ws.trunk.back();
        std::vector<double> dtop(top.size(), 0.0);

        head_backward(policy_base_, top, dq, dtop, grads);
        head_backward(value_base_, top, std::vector<double>{dv}, dtop, grads);

        std::vector<double> dtrunk_in = stack_backward(
            trunk_base_, spec_.trunk_hidden.size(), ws.trunk, dtop, grads);

        const std::size_t n_lidar = ws.lidar.back().size();
        const std::size_t n_ped = ws.ped.back().size();
        std::vector<double> dlidar(dtrunk_in.begin(),
                                   dtrunk_in.begin() + n_lidar);
        std::vector<double> dped(dtrunk_in.begin() + n_lidar,
                                 dtrunk_in.begin() + n_lidar + n_ped);
        stack_backward(lidar_base_, spec_.lidar_hidden.size(), ws.lidar,
                       dlidar, grads);
        stack_backward(ped_base_, spec_.ped_hidden.size(), ws.ped, dped,
                       grads);
    }

    std::vector<Tensor> zero_grads() const {
        std::vector<Tensor> g;
        g.reserve(tensors_.size());
        for (const Tensor& t : tensors_) g.emplace_back(t.name, t.rows, t.cols);
        return g;
    }

private:
    void add_pair(const std::string& prefix, int out, int in) {
        tensors_.emplace_back(prefix + ".w", out, in);
        tensors_.emplace_back(prefix + ".b", out, 1);
    }

    void build_stack(const std::string& prefix, int input,
                     const std::vector<int>& widths) {
        const std::size_t base = tensors_.size();
        if (prefix == "lidar") lidar_base_ = base;
        else if (prefix == "ped") ped_base_ = base;
        else trunk_base_ = base;
        int in = input;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            add_pair(prefix + "." + std::to_string(i), widths[i], in);
            in = widths[i];
        }
        if (prefix == "trunk") {
            policy_base_ = tensors_.size();
            value_base_ = tensors_.size() + 2;
        }
    }

    void run_stack(std::size_t base, std::size_t n_layers,
                   std::vector<double> input,
                   std::vector<std::vector<double>>& acts) const {
        acts.clear();
        acts.push_back(std::move(input));
        for (std::size_t i = 0; i < n_layers; ++i) {
            std::vector<double> y;
            net_detail::affine(tensors_[base + 2 * i],
                               tensors_[base + 2 * i + 1], acts.back(), y);
            net_detail::rectify(y, spec_.leaky_slope);
            acts.push_back(std::move(y));
        }
    }

    void head_backward(std::size_t base, const std::vector<double>& input,
                       const std::vector<double>& dout,
                       std::vector<double>& dinput,
                       std::vector<Tensor>& grads) const {
        const Tensor& w = tensors_[base];
        Tensor& gw = grads[base];
        Tensor& gb = grads[base + 1];
        for (int r = 0; r < w.rows; ++r) {
            const double d = dout[static_cast<std::size_t>(r)];
            if (d == 0.0) continue;
            gb.v[static_cast<std::size_t>(r)] += d;
            for (int c = 0; c < w.cols; ++c) {
                gw.at(r, c) += d * input[static_cast<std::size_t>(c)];
                dinput[static_cast<std::size_t>(c)] += d * w.at(r, c);
            }
        }
    }

    // Walks layers top-down; acts[i] is the input to layer i. Returns the
    // gradient with respect to the stack input.
    std::vector<double> stack_backward(std::size_t base, std::size_t n_layers,
                                       const std::vector<std::vector<double>>& acts,
                                       std::vector<double> dout,
                                       std::vector<Tensor>& grads) const {
        for (std::size_t li = n_layers; li-- > 0;) {
            const std::vector<double>& out = acts[li + 1];
            for (std::size_t r = 0; r < dout.size(); ++r)
                if (out[r] <= 0.0) dout[r] *= spec_.leaky_slope;
            const Tensor& w = tensors_[base + 2 * li];
            Tensor& gw = grads[base + 2 * li];
            Tensor& gb = grads[base + 2 * li + 1];
            const std::vector<double>& in = acts[li];
            std::vector<double> din(in.size(), 0.0);
            for (int r = 0; r < w.rows; ++r) {
                const double d = dout[static_cast<std::size_t>(r)];
                if (d == 0.0) continue;
                gb.v[static_cast<std::size_t>(r)] += d;
                for (int c = 0; c < w.cols; ++c) {
                    gw.at(r, c) += d * in[static_cast<std::size_t>(c)];
                    din[static_cast<std::size_t>(c)] += d * w.at(r, c);
                }
            }
            dout = std::move(din);
        }
        return dout;
    }

    NetworkSpec spec_;
    std::vector<Tensor> tensors_;
    std::size_t lidar_base_ = 0;
    std::size_t ped_base_ = 0;
    std::size_t trunk_base_ = 0;
    std::size_t policy_base_ = 0;
    std::size_t value_base_ = 0;
};

struct TensorShape {
    std::string name;
    int rows = 0;
    int cols = 0;
};

inline std::vector<TensorShape> shape_audit(const Network& net) {
    std::vector<TensorShape> shapes;
    for (const Tensor& t : net.tensors())
        shapes.push_back({t.name, t.rows, t.cols});
    return shapes;
}

// Reorders a raw observation (lidar block, then per-frame [direct|peds])
// into the network input layout [lidar | ped history | direct scalars].
inline std::vector<double> to_network_input(const ObservationVector& obs,
                                            const NetworkSpec& spec) {
    if (spec.lidar_input != kLidarBlockSize ||
        spec.ped_input != kHistoryLength * kPedSlots * kPedEntrySize ||
        spec.direct_input != kHistoryLength * (2 + 1 + kVipBlockSize))
        throw ContractViolation(
            "to_network_input: spec does not match the observation layout");
    if (obs.values.size() != kObservationSize)
        throw ContractViolation("to_network_input: observation length " +
                                std::to_string(obs.values.size()));
    constexpr int kDirect = 2 + 1 + kVipBlockSize;
    constexpr int kPedBlock = kPedSlots * kPedEntrySize;
    std::vector<double> x(kObservationSize);
    std::copy(obs.values.begin(), obs.values.begin() + kLidarBlockSize,
              x.begin());
    double* ped_dst = x.data() + kLidarBlockSize;
    double* direct_dst = x.data() + kLidarBlockSize + kHistoryLength * kPedBlock;
    for (int f = 0; f < kHistoryLength; ++f) {
        const double* frame = obs.values.data() + obs_offsets::frame(f);
        std::copy(frame, frame + kDirect, direct_dst + f * kDirect);
        std::copy(frame + kDirect, frame + kFrameSize, ped_dst + f * kPedBlock);
    }
    return x;
}

inline Action act(const Network& net, const std::vector<double>& input,
                  double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw ContractViolation("act: epsilon out of [0,1]");
    if (epsilon > 0.0 && rng.uniform01() < epsilon)
        return static_cast<Action>(
            rng.uniform_int(0, net.spec().num_actions - 1));
    const NetworkOutput out = net.forward(input);
    int best = 0;
    for (int a = 1; a < net.spec().num_actions; ++a)
        if (out.q[static_cast<std::size_t>(a)] >
            out.q[static_cast<std::size_t>(best)])
            best = a;
    return static_cast<Action>(best);
}

struct Transition {
    std::vector<float> obs;
    std::vector<float> next_obs;
    int action = 0;
    float reward = 0.0f;
    bool terminal = false; // success or collision; timeout still bootstraps
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0)
            throw ValidationError("replay buffer: zero capacity");
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

    std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
        if (data_.empty())
            throw ContractViolation("replay buffer: sample from empty buffer");
        std::vector<const Transition*> batch;
        batch.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            batch.push_back(
                &data_[static_cast<std::size_t>(rng.below(data_.size()))]);
        return batch;
    }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double gamma = 0.95;
    std::size_t replay_capacity = 20000;
    int batch_size = 64;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_episodes = 120.0;
    int target_update_period = 300; // optimizer steps
    int max_episodes = 500;
    int train_every = 4;           // env steps per optimizer step
    int warmup_transitions = 500;
    int success_window = 100;
    double early_stop_success = 0.0; // 0 disables early stopping
    bool use_curriculum = true;
    CurriculumState curriculum{};
    int max_steps_per_episode = 0; // 0: env timeout governs; else truncate

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw ValidationError("train config: gamma out of (0,1]");
        for (const double e : {eps_start, eps_end})
            if (!(e >= 0.0 && e <= 1.0))
                throw ValidationError("train config: epsilon out of [0,1]");
        if (learning_rate <= 0.0)
            throw ValidationError("train config: learning rate must be positive");
        if (batch_size <= 0 || train_every <= 0 || max_episodes <= 0 ||
            target_update_period <= 0 || success_window <= 0 ||
            eps_decay_episodes <= 0.0)
            throw ValidationError("train config: non-positive field");
    }

    double epsilon_at(int episode) const {
        return eps_end +
               (eps_start - eps_end) * std::exp(-episode / eps_decay_episodes);
    }
};

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    explicit AdamState(const Network& net) {
        for (const Tensor& t : net.tensors()) {
            m.emplace_back(t.v.size(), 0.0);
            v.emplace_back(t.v.size(), 0.0);
        }
    }
};

namespace net_detail {

inline void adam_update(Network& net, const std::vector<Tensor>& grads,
                        AdamState& opt, double lr) {
    ++opt.step;
    const double bc1 = 1.0 - std::pow(opt.beta1, double(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, double(opt.step));
    auto& tensors = net.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        auto& p = tensors[i].v;
        const auto& g = grads[i].v;
        auto& m = opt.m[i];
        auto& v = opt.v[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
            v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

} // namespace net_detail

// One-step TD update: y = r + gamma * (1-terminal) * max_a Q_target(s',a).
// Loss is the batch mean of (Q(s,a)-y)^2 + (V(s)-y)^2; both heads regress
// the same target. Returns the loss before the update.
inline double train_step(Network& net, const Network& target,
                         const std::vector<const Transition*>& batch,
                         const TrainConfig& cfg, AdamState& opt) {
    if (batch.empty())
        throw ContractViolation("train_step: empty batch");
    std::vector<Tensor> grads = net.zero_grads();
    const double inv_b = 1.0 / double(batch.size());
    double loss = 0.0;
    std::vector<double> x, nx;
    for (const Transition* tr : batch) {
        x.assign(tr->obs.begin(), tr->obs.end());
        double y = tr->reward;
        if (!tr->terminal) {
            nx.assign(tr->next_obs.begin(), tr->next_obs.end());
            const NetworkOutput tq = target.forward(nx);
            double best = tq.q[0];
            for (const double q : tq.q) best = std::max(best, q);
            y += cfg.gamma * best;
        }
        ForwardCache ws;
        const NetworkOutput out = net.forward(x, &ws);
        const double dq_a = out.q[static_cast<std::size_t>(tr->action)] - y;
        const double dv = out.v - y;
        loss += (dq_a * dq_a + dv * dv) * inv_b;
        std::vector<double> dq(out.q.size(), 0.0);
        dq[static_cast<std::size_t>(tr->action)] = 2.0 * dq_a * inv_b;
        net.backward(ws, dq, 2.0 * dv * inv_b, grads);
    }
    if (!std::isfinite(loss))
        throw LimitsError("train_step: non-finite loss (diverged)");
    net_detail::adam_update(net, grads, opt, cfg.learning_rate);
    return loss;
}

using ScenarioFactory =
    std::function<Scenario(int episode, int obstacle_count, std::uint64_t seed)>;

inline ScenarioFactory make_random_scenario_factory(TaskKind kind,
                                                    ScenarioOptions opts) {
    return [kind, opts](int, int obstacle_count, std::uint64_t seed) {
        return random_scenario(obstacle_count, kind, seed, opts);
    };
}

struct EpisodeLog {
    int episode = 0;       // 1-based
    double reward = 0.0;   // episode total
    bool success = false;
    int obstacles = 0;
    double epsilon = 0.0;
    double mean_reward = 0.0;
    int steps = 0;
    DoneReason reason = DoneReason::None;
};

struct TrainResult {
    Network net;
    Network best;
    double best_success = 0.0;
    std::vector<EpisodeLog> curve;
    long optimizer_steps = 0;
    bool early_stopped = false;
};

inline TrainResult train(const ScenarioFactory& scenarios,
                         const NetworkSpec& spec, const EnvConfig& env_cfg,
                         const TrainConfig& cfg, std::uint64_t seed) {
    spec.validate();
    cfg.validate();
    Rng init_rng(seed, "net-init");
    Rng explore(seed, "explore");
    Rng sampler(seed, "replay");
    const std::uint64_t episode_base = stream_seed(seed, "episodes");

    Network net(spec);
    net.init(init_rng);
    Network target = net;
    AdamState opt(net);
    ReplayBuffer replay(cfg.replay_capacity);
    CurriculumState curriculum = cfg.curriculum;
    Environment env(env_cfg);

    TrainResult result{net, net};
    std::deque<int> wins;

    for (int ep = 0; ep < cfg.max_episodes; ++ep) {
        const double epsilon = cfg.epsilon_at(ep);
        const Scenario sc = scenarios(
            ep, curriculum.obstacle_count,
            splitmix64(episode_base + static_cast<std::uint64_t>(ep)));
        ObservationVector obs = env.reset(sc);
        std::vector<double> x = to_network_input(obs, spec);

        double total = 0.0;
        int steps = 0;
        while (!env.done()) {
            if (cfg.max_steps_per_episode > 0 &&
                steps >= cfg.max_steps_per_episode)
                break;
            const Action a = act(net, x, epsilon, explore);
            const StepResult r = env.step(a);
            std::vector<double> nx = to_network_input(r.observation, spec);
            Transition tr;
            tr.obs.assign(x.begin(), x.end());
            tr.next_obs.assign(nx.begin(), nx.end());
            tr.action = static_cast<int>(a);
            tr.reward = static_cast<float>(r.reward_total);
            tr.terminal = r.done_reason == DoneReason::Success ||
                          r.done_reason == DoneReason::Collision;
            replay.push(std::move(tr));
            total += r.reward_total;
            ++steps;
            x = std::move(nx);

            if (static_cast<int>(replay.size()) >= cfg.warmup_transitions &&
                steps % cfg.train_every == 0) {
                train_step(net, target,
                           replay.sample(static_cast<std::size_t>(cfg.batch_size),
                                         sampler),
                           cfg, opt);
                ++result.optimizer_steps;
                if (result.optimizer_steps % cfg.target_update_period == 0)
                    target = net;
            }
        }

        const bool success =
            env.done() && env.done_reason() == DoneReason::Success;
        wins.push_back(success ? 1 : 0);
        if (static_cast<int>(wins.size()) > cfg.success_window)
            wins.pop_front();
        double rate = 0.0;
        for (const int w : wins) rate += w;
        rate /= double(wins.size());

        EpisodeLog log;
        log.episode = ep + 1;
        log.reward = total;
        log.success = success;
        log.obstacles = curriculum.obstacle_count;
        log.epsilon = epsilon;
        log.mean_reward = steps > 0 ? total / steps : 0.0;
        log.steps = steps;
        log.reason = env.done() ? env.done_reason() : DoneReason::None;
        result.curve.push_back(log);

        if (rate >= result.best_success) {
            result.best_success = rate;
            result.best = net;
        }
        if (cfg.use_curriculum)
            curriculum = curriculum_update(curriculum, log.mean_reward);
        if (cfg.early_stop_success > 0.0 &&
            static_cast<int>(wins.size()) == cfg.success_window &&
            rate >= cfg.early_stop_success) {
            result.early_stopped = true;
            break;
        }
    }
    result.net = net;
    return result;
}

inline std::string learning_curve_csv(const std::vector<EpisodeLog>& curve) {
    csv::Writer w;
    w.row({"episode", "reward", "success", "obstacles", "epsilon"});
    for (const EpisodeLog& e : curve)
        w.row({std::to_string(e.episode), csv::format_double(e.reward),
               e.success ? "1" : "0", std::to_string(e.obstacles),
               csv::format_double(e.epsilon)});
    return w.str();
}

inline void save_learning_curve(const std::vector<EpisodeLog>& curve,
                                const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << learning_curve_csv(curve);
}

// Checkpoint: 8-byte magic, u32 version, u32 header length, JSON header
// (spec, variant, tensor table with float offsets), float32 LE blob.
namespace ckpt {

constexpr char kMagic[9] = "CNAVCKPT";
constexpr std::uint32_t kVersion = 1;

inline nlohmann::json spec_to_json(const NetworkSpec& s) {
    return {{"lidar_input", s.lidar_input},
            {"ped_input", s.ped_input},
            {"direct_input", s.direct_input},
            {"lidar_hidden", s.lidar_hidden},
            {"ped_hidden", s.ped_hidden},
            {"trunk_hidden", s.trunk_hidden},
            {"num_actions", s.num_actions},
            {"leaky_slope", s.leaky_slope},
            {"init_scale", s.init_scale}};
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
    NetworkSpec s;
    s.lidar_input = j.at("lidar_input").get<int>();
    s.ped_input = j.at("ped_input").get<int>();
    s.direct_input = j.at("direct_input").get<int>();
    s.lidar_hidden = j.at("lidar_hidden").get<std::vector<int>>();
    s.ped_hidden = j.at("ped_hidden").get<std::vector<int>>();
    s.trunk_hidden = j.at("trunk_hidden").get<std::vector<int>>();
    s.num_actions = j.at("num_actions").get<int>();
    s.leaky_slope = j.at("leaky_slope").get<double>();
    s.init_scale = j.at("init_scale").get<double>();
    return s;
}

template <typename T>
void write_le(std::string& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

} // namespace ckpt

struct Checkpoint {
    Network net;
    AgentVariant variant = AgentVariant::Complete;
};

inline std::string checkpoint_bytes(const Network& net, AgentVariant variant) {
    nlohmann::json header;
    header["spec"] = ckpt::spec_to_json(net.spec());
    header["variant"] = to_string(variant);
    nlohmann::json table = nlohmann::json::array();
    std::size_t offset = 0;
    for (const Tensor& t : net.tensors()) {
        table.push_back({{"name", t.name},
                         {"rows", t.rows},
                         {"cols", t.cols},
                         {"offset", offset},
                         {"count", t.v.size()}});
        offset += t.v.size();
    }
    header["tensors"] = table;
    header["float_count"] = offset;
    const std::string hdr = header.dump();

    std::string out;
    out.append(ckpt::kMagic, 8);
    ckpt::write_le(out, ckpt::kVersion);
    ckpt::write_le(out, static_cast<std::uint32_t>(hdr.size()));
    out += hdr;
    for (const Tensor& t : net.tensors())
        for (const double d : t.v)
            ckpt::write_le(out, static_cast<float>(d));
    return out;
}

inline void save_checkpoint(const Network& net, AgentVariant variant,
                            const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    const std::string bytes = checkpoint_bytes(net, variant);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ValidationError("short write: " + path);
}

inline Checkpoint checkpoint_from_bytes(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 8, ckpt::kMagic, 8) != 0)
        throw ValidationError("checkpoint: bad magic");
    std::uint32_t version = 0, hdr_len = 0;
    std::memcpy(&version, bytes.data() + 8, 4);
    std::memcpy(&hdr_len, bytes.data() + 12, 4);
    if (version != ckpt::kVersion)
        throw ValidationError("checkpoint: unsupported version " +
                              std::to_string(version));
    if (bytes.size() < 16 + static_cast<std::size_t>(hdr_len))
        throw ValidationError("checkpoint: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(16, hdr_len));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: bad header: ") +
                              e.what());
    }

    Checkpoint cp;
    try {
        cp.net = Network(ckpt::spec_from_json(header.at("spec")));
        cp.variant = variant_from_string(header.at("variant").get<std::string>());

        const std::size_t blob_off = 16 + hdr_len;
        const std::size_t floats_avail = (bytes.size() - blob_off) / 4;
        if (floats_avail < header.at("float_count").get<std::size_t>())
            throw ValidationError("checkpoint: truncated tensor blob");

        const auto& table = header.at("tensors");
        auto& tensors = cp.net.tensors();
        if (table.size() != tensors.size())
            throw ValidationError("checkpoint: tensor table size mismatch");
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            const auto& row = table[i];
            Tensor& t = tensors[i];
            if (row.at("name").get<std::string>() != t.name ||
                row.at("rows").get<int>() != t.rows ||
                row.at("cols").get<int>() != t.cols ||
                row.at("count").get<std::size_t>() != t.v.size())
                throw ValidationError("checkpoint: layout mismatch at " +
                                      t.name);
            const std::size_t off =
                blob_off + 4 * row.at("offset").get<std::size_t>();
            for (std::size_t k = 0; k < t.v.size(); ++k) {
                float f;
                std::memcpy(&f, bytes.data() + off + 4 * k, 4);
                t.v[k] = f;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: bad header field: ") +
                              e.what());
    }
    return cp;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return checkpoint_from_bytes(buf.str());
}

} // namespace crowdnav
