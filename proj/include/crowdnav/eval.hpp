#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "crowdnav/csv.hpp"
#include "crowdnav/env.hpp"
#include "crowdnav/policy.hpp"
#include "crowdnav/rng.hpp"
#include "crowdnav/scenario_io.hpp"
#include "crowdnav/svg.hpp"

namespace crowdnav {

inline DoneReason done_reason_from_string(const std::string& s) {
    if (s == "none") return DoneReason::None;
    if (s == "success") return DoneReason::Success;
    if (s == "collision") return DoneReason::Collision;
    if (s == "timeout") return DoneReason::Timeout;
    throw ValidationError("unknown outcome: " + s);
}

struct StepTrace {
    double t = 0.0;
    Pose robot;
    double robot_speed = 0.0;
    std::optional<Vec2> vip_pos;
    double vip_speed = -1.0;
    double d_rp = -1.0;
    int flag = 0;
    int action = -1; // -1 on the initial row
    RewardTerms terms;
    double reward = 0.0;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    Scenario scenario;
    std::vector<StepTrace> steps; // row 0 is the reset state
    std::vector<std::vector<Vec2>> ped_paths; // aligned with scenario peds
    DoneReason outcome = DoneReason::None;
    double wall_time = 0.0;   // sim seconds
    double path_length = 0.0; // sum of robot displacements
};

struct RunOptions {
    bool record_steps = true;
    bool record_ped_paths = false;
};

namespace eval_detail {

inline StepTrace trace_now(const Environment& env, int action,
                           const RewardTerms& terms, double reward) {
    StepTrace t;
    t.t = env.sim_time();
    t.robot = env.robot().pose;
    t.robot_speed = env.robot().linear_velocity;
    if (const Pedestrian* vip = env.episode_vip_ptr()) {
        t.vip_pos = vip->position;
        t.vip_speed = vip->velocity.norm();
        t.d_rp = (vip->position - env.robot().pose.position).norm();
    }
    t.flag = env.task().flag;
    t.action = action;
    t.terms = terms;
    t.reward = reward;
    return t;
}

} // namespace eval_detail

inline EpisodeRecord run_episode(Environment& env, Policy& policy,
                                 const Scenario& scenario, std::uint64_t seed,
                                 const RunOptions& opt = {}) {
    EpisodeRecord rec;
    rec.seed = seed;
    rec.scenario = scenario;
    policy.begin_episode(seed);
    ObservationVector obs = env.reset(scenario);

    if (opt.record_steps)
        rec.steps.push_back(eval_detail::trace_now(env, -1, RewardTerms{}, 0.0));
    if (opt.record_ped_paths) {
        rec.ped_paths.resize(env.pedestrians().size());
        for (std::size_t i = 0; i < env.pedestrians().size(); ++i)
            rec.ped_paths[i].push_back(env.pedestrians()[i].position);
    }

    Vec2 prev = env.robot().pose.position;
    while (!env.done()) {
        const Action a = policy.select(obs);
        StepResult r = env.step(a);
        rec.path_length += (env.robot().pose.position - prev).norm();
        prev = env.robot().pose.position;
        if (opt.record_steps)
            rec.steps.push_back(eval_detail::trace_now(
                env, static_cast<int>(a), r.terms, r.reward_total));
        if (opt.record_ped_paths)
            for (std::size_t i = 0; i < env.pedestrians().size(); ++i)
                rec.ped_paths[i].push_back(env.pedestrians()[i].position);
        obs = std::move(r.observation);
    }
    rec.outcome = env.done_reason();
    rec.wall_time = env.sim_time();
    return rec;
}

struct EpisodeStats {
    DoneReason outcome = DoneReason::None;
    double time = 0.0;
    double path_length = 0.0;
};

inline EpisodeStats stats_of(const EpisodeRecord& r) {
    return {r.outcome, r.wall_time, r.path_length};
}

// Means are over successful episodes only (0 when there are none);
// rates are counted integers over the episode total.
struct MetricsSummary {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    std::size_t collisions = 0;
    std::size_t timeouts = 0;
    double success_rate = 0.0;
    double collision_rate = 0.0;
    double timeout_rate = 0.0;
    double mean_time_to_goal = 0.0;
    double mean_path_length = 0.0;

    bool operator==(const MetricsSummary&) const = default;
};

inline MetricsSummary summarize(const std::vector<EpisodeStats>& stats) {
    if (stats.empty()) throw ContractViolation("summarize: no episodes");
    MetricsSummary s;
    s.episodes = stats.size();
    double time_sum = 0.0, path_sum = 0.0;
    for (const EpisodeStats& e : stats) {
        switch (e.outcome) {
            case DoneReason::Success:
                ++s.successes;
                time_sum += e.time;
                path_sum += e.path_length;
                break;
            case DoneReason::Collision:
                ++s.collisions;
                break;
            case DoneReason::Timeout:
                ++s.timeouts;
                break;
            case DoneReason::None:
                throw ContractViolation("summarize: episode without outcome");
        }
    }
    const double n = double(s.episodes);
    s.success_rate = double(s.successes) / n;
    s.collision_rate = double(s.collisions) / n;
    s.timeout_rate = double(s.timeouts) / n;
    if (s.successes > 0) {
        s.mean_time_to_goal = time_sum / double(s.successes);
        s.mean_path_length = path_sum / double(s.successes);
    }
    return s;
}

inline MetricsSummary summarize(const std::vector<EpisodeRecord>& records) {
    std::vector<EpisodeStats> stats;
    stats.reserve(records.size());
    for (const EpisodeRecord& r : records) stats.push_back(stats_of(r));
    return summarize(stats);
}

// Worker cap: CROWDNAV_THREADS when set (>=1), else hardware concurrency.
inline unsigned worker_count(std::size_t jobs) {
    unsigned cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("CROWDNAV_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) cap = static_cast<unsigned>(v);
    }
    if (jobs < cap) cap = static_cast<unsigned>(jobs);
    return cap == 0 ? 1 : cap;
}

using EvalScenarioGen =
    std::function<Scenario(int index, std::uint64_t seed)>;

struct BatchResult {
    std::vector<EpisodeRecord> records;
    MetricsSummary summary;
};

// Deterministically extends a seed list to n entries.
inline std::vector<std::uint64_t> expand_seeds(std::vector<std::uint64_t> seeds,
                                               std::size_t n) {
    const std::uint64_t base =
        stream_seed(seeds.empty() ? 0 : seeds.front(), "eval-seeds");
    while (seeds.size() < n)
        seeds.push_back(splitmix64(base + seeds.size()));
    seeds.resize(n);
    return seeds;
}

// Episodes are distributed to a worker pool; each worker owns an
// environment and a policy clone, results are merged by seed order.
inline BatchResult run_batch(const EvalScenarioGen& gen, const Policy& policy,
                             const EnvConfig& cfg, int n_episodes,
                             std::vector<std::uint64_t> seeds,
                             const RunOptions& opt = {}) {
    if (n_episodes < 1) throw ContractViolation("run_batch: n_episodes < 1");
    if (const auto want = policy.expected_variant();
        want.has_value() && *want != cfg.variant)
        throw ValidationError(std::string("policy expects variant '") +
                              to_string(*want) + "', environment provides '" +
                              to_string(cfg.variant) + "'");
    seeds = expand_seeds(std::move(seeds),
                         static_cast<std::size_t>(n_episodes));

    BatchResult out;
    out.records.resize(static_cast<std::size_t>(n_episodes));
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;

    const auto worker = [&]() {
        Environment env(cfg);
        std::unique_ptr<Policy> pol = policy.clone();
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= out.records.size()) return;
            try {
                const Scenario sc = gen(static_cast<int>(i), seeds[i]);
                out.records[i] = run_episode(env, *pol, sc, seeds[i], opt);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
                next.store(out.records.size());
                return;
            }
        }
    };

    const unsigned n_workers = worker_count(out.records.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    out.summary = summarize(out.records);
    return out;
}

struct VipSeries {
    std::vector<double> t;
    std::vector<double> d_rp;
    std::vector<double> v_robot;
    std::vector<double> v_vip;
    std::optional<double> task2_onset; // first step with flag in {2,4}
};

inline VipSeries vip_series(const EpisodeRecord& rec) {
    if (rec.scenario.task_kind == TaskKind::PointToPoint)
        throw ValidationError("vip_series: point-to-point record has no VIP");
    if (rec.steps.empty())
        throw ValidationError("vip_series: record has no step data");
    VipSeries s;
    for (const StepTrace& step : rec.steps) {
        if (!step.vip_pos.has_value())
            throw ValidationError("vip_series: record has no VIP");
        s.t.push_back(step.t);
        s.d_rp.push_back(step.d_rp);
        s.v_robot.push_back(step.robot_speed);
        s.v_vip.push_back(step.vip_speed);
        if (!s.task2_onset && (step.flag == 2 || step.flag == 4))
            s.task2_onset = step.t;
    }
    return s;
}

// --- CSV export / import ---------------------------------------------

inline const std::vector<std::string>& record_csv_header() {
    static const std::vector<std::string> header = {
        "episode", "seed", "step", "t", "robot_x", "robot_y",
        "robot_heading", "robot_speed", "vip_x", "vip_y", "vip_speed",
        "d_rp", "flag", "action", "r_success", "r_collision", "r_distance",
        "r_static_safety", "r_dynamic_safety", "reward", "outcome"};
    return header;
}

inline std::string records_csv(const std::vector<EpisodeRecord>& records) {
    csv::Writer w;
    w.row(record_csv_header());
    for (std::size_t e = 0; e < records.size(); ++e) {
        const EpisodeRecord& rec = records[e];
        for (std::size_t i = 0; i < rec.steps.size(); ++i) {
            const StepTrace& s = rec.steps[i];
            const bool vip = s.vip_pos.has_value();
            w.row({std::to_string(e), std::to_string(rec.seed),
                   std::to_string(i), csv::format_double(s.t),
                   csv::format_double(s.robot.position.x),
                   csv::format_double(s.robot.position.y),
                   csv::format_double(s.robot.heading),
                   csv::format_double(s.robot_speed),
                   vip ? csv::format_double(s.vip_pos->x) : "",
                   vip ? csv::format_double(s.vip_pos->y) : "",
                   vip ? csv::format_double(s.vip_speed) : "",
                   vip ? csv::format_double(s.d_rp) : "",
                   std::to_string(s.flag), std::to_string(s.action),
                   csv::format_double(s.terms.r_success),
                   csv::format_double(s.terms.r_collision),
                   csv::format_double(s.terms.r_distance),
                   csv::format_double(s.terms.r_static_safety),
                   csv::format_double(s.terms.r_dynamic_safety),
                   csv::format_double(s.reward), to_string(rec.outcome)});
        }
    }
    return w.str();
}

// Reads back episode outcome, duration, and path length from an exported
// record CSV; enough to reproduce the MetricsSummary bit-exactly.
inline std::vector<EpisodeStats> stats_from_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    if (rows.empty() || rows[0] != record_csv_header())
        throw ValidationError("record csv: missing or unexpected header");
    std::vector<EpisodeStats> stats;
    std::vector<Vec2> positions;
    std::string current_episode;

    const auto flush = [&](const std::string& outcome, double last_t) {
        EpisodeStats st;
        st.outcome = done_reason_from_string(outcome);
        st.time = last_t;
        for (std::size_t i = 1; i < positions.size(); ++i)
            st.path_length += (positions[i] - positions[i - 1]).norm();
        stats.push_back(st);
        positions.clear();
    };

    std::string pending_outcome;
    double pending_t = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != record_csv_header().size())
            throw ValidationError("record csv: bad column count at row " +
                                  std::to_string(r));
        if (row[0] != current_episode) {
            if (!positions.empty()) flush(pending_outcome, pending_t);
            current_episode = row[0];
        }
        positions.push_back({std::stod(row[4]), std::stod(row[5])});
        pending_t = std::stod(row[3]);
        pending_outcome = row[20];
    }
    if (!positions.empty()) flush(pending_outcome, pending_t);
    return stats;
}

inline std::string summary_csv(
    const std::vector<std::pair<std::string, MetricsSummary>>& rows) {
    csv::Writer w;
    w.row({"policy", "episodes", "success_rate", "collision_rate",
           "timeout_rate", "mean_time_to_goal", "mean_path_length"});
    for (const auto& [label, s] : rows)
        w.row({label, std::to_string(s.episodes),
               csv::format_double(s.success_rate),
               csv::format_double(s.collision_rate),
               csv::format_double(s.timeout_rate),
               csv::format_double(s.mean_time_to_goal),
               csv::format_double(s.mean_path_length)});
    return w.str();
}

// --- SVG export --------------------------------------------------------

inline std::string episode_svg(const EpisodeRecord& rec) {
    TrajectoryPath robot;
    robot.label = "robot";
    for (const StepTrace& s : rec.steps)
        robot.points.push_back(s.robot.position);
    robot.t_start = rec.steps.empty() ? 0.0 : rec.steps.front().t;
    robot.t_end = rec.steps.empty() ? rec.wall_time : rec.steps.back().t;

    std::vector<TrajectoryPath> peds;
    for (std::size_t i = 0; i < rec.ped_paths.size(); ++i) {
        TrajectoryPath p;
        if (i < rec.scenario.pedestrians.size())
            p.label = "ped " + std::to_string(rec.scenario.pedestrians[i].ped.id);
        p.points = rec.ped_paths[i];
        p.t_start = 0.0;
        p.t_end = rec.wall_time;
        peds.push_back(std::move(p));
    }
    const Vec2 goal = rec.scenario.end_goal;
    return trajectory_svg(rec.scenario.map, &goal, robot, peds);
}

inline void save_text(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << text;
    if (!f) throw ValidationError("short write: " + path);
}

// --- Record files (JSON, schema 1) --------------------------------------

inline nlohmann::json record_to_json(const EpisodeRecord& rec) {
    nlohmann::json steps = nlohmann::json::array();
    for (const StepTrace& s : rec.steps) {
        nlohmann::json js = {
            {"t", s.t},
            {"robot", {s.robot.position.x, s.robot.position.y, s.robot.heading}},
            {"speed", s.robot_speed},
            {"flag", s.flag},
            {"action", s.action},
            {"reward", s.reward},
            {"terms",
             {s.terms.r_success, s.terms.r_collision, s.terms.r_distance,
              s.terms.r_static_safety, s.terms.r_dynamic_safety}}};
        if (s.vip_pos) {
            js["vip"] = {s.vip_pos->x, s.vip_pos->y};
            js["vip_speed"] = s.vip_speed;
            js["d_rp"] = s.d_rp;
        }
        steps.push_back(std::move(js));
    }
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& path : rec.ped_paths) {
        nlohmann::json jp = nlohmann::json::array();
        for (const Vec2& p : path) jp.push_back({p.x, p.y});
        paths.push_back(std::move(jp));
    }
    return {{"schema", 1},
            {"seed", rec.seed},
            {"scenario", scenario_to_json(rec.scenario)},
            {"outcome", to_string(rec.outcome)},
            {"wall_time", rec.wall_time},
            {"path_length", rec.path_length},
            {"steps", std::move(steps)},
            {"ped_paths", std::move(paths)}};
}

inline EpisodeRecord record_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<int>() != 1)
            throw ValidationError("record: unsupported schema");
        EpisodeRecord rec;
        rec.seed = j.at("seed").get<std::uint64_t>();
        rec.scenario = scenario_from_json(j.at("scenario"));
        rec.outcome = done_reason_from_string(j.at("outcome").get<std::string>());
        rec.wall_time = j.at("wall_time").get<double>();
        rec.path_length = j.at("path_length").get<double>();
        for (const auto& js : j.at("steps")) {
            StepTrace s;
            s.t = js.at("t").get<double>();
            const auto& rp = js.at("robot");
            s.robot.position = {rp.at(0).get<double>(), rp.at(1).get<double>()};
            s.robot.heading = rp.at(2).get<double>();
            s.robot_speed = js.at("speed").get<double>();
            s.flag = js.at("flag").get<int>();
            s.action = js.at("action").get<int>();
            s.reward = js.at("reward").get<double>();
            const auto& tm = js.at("terms");
            s.terms.r_success = tm.at(0).get<double>();
            s.terms.r_collision = tm.at(1).get<double>();
            s.terms.r_distance = tm.at(2).get<double>();
            s.terms.r_static_safety = tm.at(3).get<double>();
            s.terms.r_dynamic_safety = tm.at(4).get<double>();
            if (js.contains("vip")) {
                s.vip_pos = Vec2{js.at("vip").at(0).get<double>(),
                                 js.at("vip").at(1).get<double>()};
                s.vip_speed = js.at("vip_speed").get<double>();
                s.d_rp = js.at("d_rp").get<double>();
            }
            rec.steps.push_back(std::move(s));
        }
        for (const auto& jp : j.at("ped_paths")) {
            std::vector<Vec2> path;
            for (const auto& p : jp)
                path.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            rec.ped_paths.push_back(std::move(path));
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("record: malformed json: ") +
                              e.what());
    }
}

inline void save_record(const EpisodeRecord& rec, const std::string& path) {
    save_text(record_to_json(rec).dump(2) + "\n", path);
}

inline EpisodeRecord load_record(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open record: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("record: parse error in ") + path +
                              ": " + e.what());
    }
    return record_from_json(j);
}

} // namespace crowdnav
