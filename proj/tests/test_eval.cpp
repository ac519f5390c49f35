#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "crowdnav/eval.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace crowdnav;

namespace {

class ForwardPolicy : public Policy {
public:
    std::string name() const override { return "forward"; }
    Action select(const ObservationVector&) override { return Action::Forward; }
    std::unique_ptr<Policy> clone() const override {
        return std::make_unique<ForwardPolicy>(*this);
    }
};

Scenario open_run(double step_budget) {
    Scenario sc;
    sc.robot_start = {{2.0, 10.0}, 0.0};
    sc.end_goal = {18.0, 10.0};
    sc.seed = 1;
    (void)step_budget;
    return sc;
}

EnvConfig capped_cfg(int step_max) {
    EnvConfig cfg;
    cfg.reward.step_max = step_max;
    return cfg;
}

int count_occurrences(const std::string& text, const std::string& needle) {
    int count = 0;
    for (std::size_t at = text.find(needle); at != std::string::npos;
         at = text.find(needle, at + needle.size()))
        ++count;
    return count;
}

bool traces_equal(const StepTrace& a, const StepTrace& b) {
    if (a.t != b.t || a.robot.heading != b.robot.heading) return false;
    if (!(a.robot.position == b.robot.position)) return false;
    if (a.robot_speed != b.robot_speed || a.flag != b.flag ||
        a.action != b.action || a.reward != b.reward)
        return false;
    if (a.vip_pos.has_value() != b.vip_pos.has_value()) return false;
    if (a.vip_pos && !(*a.vip_pos == *b.vip_pos)) return false;
    if (a.vip_speed != b.vip_speed || a.d_rp != b.d_rp) return false;
    return a.terms.r_success == b.terms.r_success &&
           a.terms.r_collision == b.terms.r_collision &&
           a.terms.r_distance == b.terms.r_distance &&
           a.terms.r_static_safety == b.terms.r_static_safety &&
           a.terms.r_dynamic_safety == b.terms.r_dynamic_safety;
}

} // namespace

TEST_CASE("csv escaping and formatting") {
    REQUIRE(csv::escape("plain") == "plain");
    REQUIRE(csv::escape("a,b") == "\"a,b\"");
    REQUIRE(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    REQUIRE(csv::escape("line\nbreak") == "\"line\nbreak\"");
    for (const double v : {0.1, 1.0 / 3.0, 1e300, -2.5e-17, 3.141592653589793,
                           0.0, -0.0, 123456789.123456789}) {
        REQUIRE(std::stod(csv::format_double(v)) == v);
    }
}

TEST_CASE("csv writer and parser round trip") {
    csv::Writer w;
    w.row({"h1", "h2", "h3"});
    w.row({"plain", "with,comma", "with \"quote\""});
    w.row({"multi\nline", "", "end"});
    const std::string text = w.str();
    REQUIRE(text.find("\r\n") != std::string::npos);
    const auto rows = csv::parse(text);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0] == std::vector<std::string>{"h1", "h2", "h3"});
    REQUIRE(rows[1] == std::vector<std::string>{"plain", "with,comma",
                                                "with \"quote\""});
    REQUIRE(rows[2] == std::vector<std::string>{"multi\nline", "", "end"});

    SECTION("lf-only input and empty fields") {
        const auto lf = csv::parse("a,,b\nc,\n");
        REQUIRE(lf.size() == 2);
        REQUIRE(lf[0] == std::vector<std::string>{"a", "", "b"});
        REQUIRE(lf[1] == std::vector<std::string>{"c", ""});
        const auto no_trailing = csv::parse("a,b\nc,d");
        REQUIRE(no_trailing.size() == 2);
        REQUIRE(no_trailing[1] == std::vector<std::string>{"c", "d"});
    }
    SECTION("unterminated quotes are rejected") {
        REQUIRE_THROWS_AS(csv::parse("\"open,field\n"), ValidationError);
    }
    SECTION("file save and load") {
        const std::string path = "csv_roundtrip_test.csv";
        w.save(path);
        REQUIRE(csv::load(path) == rows);
        std::remove(path.c_str());
        REQUIRE_THROWS_AS(csv::load("missing_file_test.csv"), ValidationError);
        REQUIRE_THROWS_AS(w.save("no_such_dir/out.csv"), ValidationError);
    }
}

TEST_CASE("outcome strings round trip") {
    for (const DoneReason r : {DoneReason::None, DoneReason::Success,
                               DoneReason::Collision, DoneReason::Timeout})
        REQUIRE(done_reason_from_string(to_string(r)) == r);
    REQUIRE_THROWS_AS(done_reason_from_string("explosion"), ValidationError);
}

TEST_CASE("run_episode records the reset row and a straight-line path") {
    EnvConfig cfg = capped_cfg(30);
    Environment env(cfg);
    ForwardPolicy policy;
    const EpisodeRecord rec = run_episode(env, policy, open_run(30), 5u);

    REQUIRE(rec.outcome == DoneReason::Timeout);
    REQUIRE(rec.steps.size() == 31);
    REQUIRE(rec.steps[0].action == -1);
    REQUIRE(rec.steps[0].t == 0.0);
    REQUIRE(rec.steps[0].robot_speed == 0.0);
    REQUIRE(rec.steps[0].robot.position == Vec2{2.0, 10.0});
    REQUIRE_FALSE(rec.steps[0].vip_pos.has_value());
    for (std::size_t i = 1; i < rec.steps.size(); ++i) {
        REQUIRE(rec.steps[i].action == 0);
        REQUIRE(rec.steps[i].robot_speed == 0.22);
    }
    REQUIRE(rec.path_length == Approx(30 * 0.022).margin(1e-12));
    REQUIRE(rec.steps.back().robot.position.x == Approx(2.66).margin(1e-12));
    REQUIRE(rec.wall_time == Approx(3.0).margin(1e-9));

    SECTION("a reused environment reproduces the episode bit for bit") {
        const EpisodeRecord again = run_episode(env, policy, open_run(30), 5u);
        REQUIRE(again.steps.size() == rec.steps.size());
        for (std::size_t i = 0; i < rec.steps.size(); ++i)
            REQUIRE(traces_equal(again.steps[i], rec.steps[i]));
        REQUIRE(again.path_length == rec.path_length);
    }
    SECTION("step recording can be disabled") {
        const EpisodeRecord bare =
            run_episode(env, policy, open_run(30), 5u, {false, false});
        REQUIRE(bare.steps.empty());
        REQUIRE(bare.outcome == DoneReason::Timeout);
        REQUIRE(bare.path_length == rec.path_length);
    }
}

TEST_CASE("summarize splits outcomes and averages successes only") {
    std::vector<EpisodeStats> stats = {
        {DoneReason::Success, 10.0, 5.0},
        {DoneReason::Collision, 2.0, 1.0},
        {DoneReason::Timeout, 180.0, 4.0},
    };
    const MetricsSummary s = summarize(stats);
    REQUIRE(s.episodes == 3);
    REQUIRE(s.successes == 1);
    REQUIRE(s.collisions == 1);
    REQUIRE(s.timeouts == 1);
    REQUIRE(s.success_rate == 1.0 / 3.0);
    REQUIRE(s.collision_rate == 1.0 / 3.0);
    REQUIRE(s.timeout_rate == 1.0 / 3.0);
    REQUIRE(s.success_rate + s.collision_rate + s.timeout_rate ==
            Approx(1.0).margin(1e-12));
    REQUIRE(s.mean_time_to_goal == 10.0);
    REQUIRE(s.mean_path_length == 5.0);

    SECTION("no successes leaves the means at zero") {
        stats.erase(stats.begin());
        const MetricsSummary t = summarize(stats);
        REQUIRE(t.mean_time_to_goal == 0.0);
        REQUIRE(t.mean_path_length == 0.0);
    }
    SECTION("empty and unfinished inputs are rejected") {
        REQUIRE_THROWS_AS(summarize(std::vector<EpisodeStats>{}),
                          ContractViolation);
        stats.push_back({DoneReason::None, 0.0, 0.0});
        REQUIRE_THROWS_AS(summarize(stats), ContractViolation);
    }
}

TEST_CASE("record csv export matches the header and reimports exactly") {
    EnvConfig cfg = capped_cfg(25);
    Environment env(cfg);
    ForwardPolicy fwd;
    RandomPolicy rnd;
    std::vector<EpisodeRecord> records;
    records.push_back(run_episode(env, fwd, open_run(25), 11u));
    records.push_back(run_episode(env, rnd, open_run(25), 12u));

    const std::string text = records_csv(records);
    const auto rows = csv::parse(text);
    REQUIRE(rows[0] == record_csv_header());
    REQUIRE(rows[0].size() == 21);
    REQUIRE(rows.size() == 1 + 26 + 26);
    REQUIRE(rows[1][0] == "0");
    REQUIRE(rows[1][2] == "0");
    REQUIRE(rows[1][13] == "-1"); // reset row has no action
    REQUIRE(rows[1][8].empty());  // no vip columns on point-to-point
    REQUIRE(rows[1][20] == "timeout");
    REQUIRE(rows[27][0] == "1");

    const auto stats = stats_from_csv(text);
    REQUIRE(stats.size() == 2);
    REQUIRE(summarize(stats) == summarize(records));
    for (std::size_t i = 0; i < records.size(); ++i) {
        REQUIRE(stats[i].outcome == records[i].outcome);
        REQUIRE(stats[i].time == records[i].wall_time);
        REQUIRE(stats[i].path_length == records[i].path_length);
    }
    SECTION("tampered csv is rejected") {
        REQUIRE_THROWS_AS(stats_from_csv("nonsense\r\n"), ValidationError);
        std::string bad = text;
        bad += "0,1\r\n";
        REQUIRE_THROWS_AS(stats_from_csv(bad), ValidationError);
    }
}

TEST_CASE("summary csv layout") {
    MetricsSummary s;
    s.episodes = 4;
    s.success_rate = 0.75;
    s.collision_rate = 0.25;
    s.mean_time_to_goal = 12.5;
    s.mean_path_length = 3.25;
    const std::string text = summary_csv({{"greedy-goal", s}});
    const auto rows = csv::parse(text);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0] == std::vector<std::string>{
                           "policy", "episodes", "success_rate",
                           "collision_rate", "timeout_rate",
                           "mean_time_to_goal", "mean_path_length"});
    REQUIRE(rows[1] == std::vector<std::string>{"greedy-goal", "4", "0.75",
                                                "0.25", "0", "12.5", "3.25"});
}

TEST_CASE("expand_seeds extends deterministically") {
    const auto a = expand_seeds({}, 3);
    REQUIRE(a.size() == 3);
    const std::uint64_t base = stream_seed(0, "eval-seeds");
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(a[i] == splitmix64(base + i));

    const auto b = expand_seeds({42}, 3);
    REQUIRE(b[0] == 42);
    const std::uint64_t base42 = stream_seed(42, "eval-seeds");
    REQUIRE(b[1] == splitmix64(base42 + 1));
    REQUIRE(b[2] == splitmix64(base42 + 2));

    REQUIRE(expand_seeds({1, 2, 3, 4}, 2) == std::vector<std::uint64_t>{1, 2});
    REQUIRE(expand_seeds({}, 3) == a);
}

TEST_CASE("worker_count honors the environment override and the job cap") {
    unsetenv("CROWDNAV_THREADS");
    const unsigned base = worker_count(16);
    REQUIRE(base >= 1);
    setenv("CROWDNAV_THREADS", "abc", 1);
    REQUIRE(worker_count(16) == base);
    setenv("CROWDNAV_THREADS", "0", 1);
    REQUIRE(worker_count(16) == base);
    setenv("CROWDNAV_THREADS", "3", 1);
    REQUIRE(worker_count(16) == 3);
    REQUIRE(worker_count(2) == 2);
    REQUIRE(worker_count(0) == 1);
    unsetenv("CROWDNAV_THREADS");
}

TEST_CASE("run_batch is deterministic across worker counts") {
    const EvalScenarioGen gen = [](int, std::uint64_t seed) {
        ScenarioOptions opts;
        return random_scenario(3, TaskKind::PointToPoint, seed, opts);
    };
    EnvConfig cfg = capped_cfg(250);
    const GreedyGoalPolicy policy;

    setenv("CROWDNAV_THREADS", "1", 1);
    const BatchResult serial = run_batch(gen, policy, cfg, 8, {2024u});
    const BatchResult serial2 = run_batch(gen, policy, cfg, 8, {2024u});
    setenv("CROWDNAV_THREADS", "8", 1);
    const BatchResult parallel = run_batch(gen, policy, cfg, 8, {2024u});
    unsetenv("CROWDNAV_THREADS");

    REQUIRE(serial.records.size() == 8);
    const std::string csv1 = records_csv(serial.records);
    REQUIRE(csv1 == records_csv(serial2.records));
    REQUIRE(csv1 == records_csv(parallel.records));
    REQUIRE(serial.summary == parallel.summary);
    REQUIRE(serial.summary.success_rate + serial.summary.collision_rate +
                serial.summary.timeout_rate ==
            Approx(1.0).margin(1e-12));

    SECTION("invalid requests are rejected") {
        REQUIRE_THROWS_AS(run_batch(gen, policy, cfg, 0, {}),
                          ContractViolation);
        const CheckpointPolicy mismatched{
            Network{NetworkSpec{}}, AgentVariant::SafeZone};
        REQUIRE_THROWS_AS(run_batch(gen, mismatched, cfg, 1, {}),
                          ValidationError);
    }
    SECTION("worker errors propagate") {
        const EvalScenarioGen broken = [](int, std::uint64_t) {
            Scenario sc;
            sc.robot_start.position = {-5.0, -5.0}; // outside the map
            return sc;
        };
        setenv("CROWDNAV_THREADS", "4", 1);
        REQUIRE_THROWS_AS(run_batch(broken, policy, cfg, 8, {}),
                          ValidationError);
        unsetenv("CROWDNAV_THREADS");
    }
}

TEST_CASE("vip_series extracts assistance traces") {
    EpisodeRecord rec;
    rec.scenario.task_kind = TaskKind::Guiding;
    for (int i = 0; i < 3; ++i) {
        StepTrace s;
        s.t = 0.1 * i;
        s.vip_pos = Vec2{1.0 + i, 1.0};
        s.vip_speed = 0.3;
        s.d_rp = 2.0 - 0.1 * i;
        s.flag = (i == 2) ? 2 : 1;
        s.robot_speed = 0.22;
        rec.steps.push_back(s);
    }
    const VipSeries s = vip_series(rec);
    REQUIRE(s.t.size() == 3);
    REQUIRE(s.d_rp == std::vector<double>{2.0, 1.9, 1.8});
    REQUIRE(s.v_robot == std::vector<double>{0.22, 0.22, 0.22});
    REQUIRE(s.v_vip == std::vector<double>{0.3, 0.3, 0.3});
    REQUIRE(s.task2_onset.has_value());
    REQUIRE(*s.task2_onset == Approx(0.2));

    SECTION("records without a vip are rejected") {
        EpisodeRecord p2p = rec;
        p2p.scenario.task_kind = TaskKind::PointToPoint;
        REQUIRE_THROWS_AS(vip_series(p2p), ValidationError);
        EpisodeRecord empty = rec;
        empty.steps.clear();
        REQUIRE_THROWS_AS(vip_series(empty), ValidationError);
        EpisodeRecord gap = rec;
        gap.steps[1].vip_pos.reset();
        REQUIRE_THROWS_AS(vip_series(gap), ValidationError);
    }
    SECTION("onset stays empty when assistance never starts") {
        for (auto& st : rec.steps) st.flag = 1;
        REQUIRE_FALSE(vip_series(rec).task2_onset.has_value());
    }
}

TEST_CASE("episode records round-trip through json files") {
    Scenario sc = open_run(20);
    ScriptedPedestrian walker;
    walker.ped.id = 0;
    walker.ped.position = {10.0, 12.0};
    walker.ped.state = SocialState::Walking;
    walker.ped.desired_speed = 0.3;
    walker.ped.goal = Vec2{15.0, 12.0};
    sc.pedestrians.push_back(walker);

    EnvConfig cfg = capped_cfg(20);
    Environment env(cfg);
    ForwardPolicy policy;
    RunOptions opt;
    opt.record_ped_paths = true;
    const EpisodeRecord rec = run_episode(env, policy, sc, 77u, opt);
    REQUIRE(rec.ped_paths.size() == 1);
    REQUIRE(rec.ped_paths[0].size() == rec.steps.size());

    const nlohmann::json j = record_to_json(rec);
    REQUIRE(j.at("schema").get<int>() == 1);
    const EpisodeRecord back = record_from_json(j);
    REQUIRE(back.seed == rec.seed);
    REQUIRE(back.outcome == rec.outcome);
    REQUIRE(back.wall_time == rec.wall_time);
    REQUIRE(back.path_length == rec.path_length);
    REQUIRE(back.steps.size() == rec.steps.size());
    for (std::size_t i = 0; i < rec.steps.size(); ++i)
        REQUIRE(traces_equal(back.steps[i], rec.steps[i]));
    REQUIRE(back.ped_paths == rec.ped_paths);
    REQUIRE(scenario_to_string(back.scenario) == scenario_to_string(rec.scenario));

    SECTION("file round trip") {
        const std::string path = "record_roundtrip_test.json";
        save_record(rec, path);
        const EpisodeRecord loaded = load_record(path);
        REQUIRE(loaded.wall_time == rec.wall_time);
        REQUIRE(loaded.steps.size() == rec.steps.size());
        for (std::size_t i = 0; i < rec.steps.size(); ++i)
            REQUIRE(traces_equal(loaded.steps[i], rec.steps[i]));
        std::remove(path.c_str());
        REQUIRE_THROWS_AS(load_record("missing_record_test.json"),
                          ValidationError);
    }
    SECTION("schema and shape violations are rejected") {
        nlohmann::json bad = j;
        bad["schema"] = 2;
        REQUIRE_THROWS_AS(record_from_json(bad), ValidationError);
        bad = j;
        bad.erase("steps");
        REQUIRE_THROWS_AS(record_from_json(bad), ValidationError);
    }
}

TEST_CASE("episode svg is well-formed xml with one robot path") {
    Scenario sc = open_run(15);
    sc.map.add_border_walls();
    sc.map.static_obstacles.push_back({{12.0, 8.0}, 0.5});
    ScriptedPedestrian walker;
    walker.ped.id = 3;
    walker.ped.position = {10.0, 12.0};
    walker.ped.state = SocialState::Walking;
    walker.ped.desired_speed = 0.3;
    walker.ped.goal = Vec2{15.0, 12.0};
    sc.pedestrians.push_back(walker);

    EnvConfig cfg = capped_cfg(15);
    Environment env(cfg);
    ForwardPolicy policy;
    RunOptions opt;
    opt.record_ped_paths = true;
    const EpisodeRecord rec = run_episode(env, policy, sc, 3u, opt);

    const std::string svg = episode_svg(rec);
    INFO(oracle::xml_problem(svg));
    REQUIRE(oracle::xml_problem(svg).empty());
    REQUIRE(count_occurrences(svg, "class=\"robot\"") == 1);
    REQUIRE(count_occurrences(svg, "class=\"pedestrian\"") == 1);
    REQUIRE(count_occurrences(svg, "class=\"goal\"") == 1);
    REQUIRE(count_occurrences(svg, "class=\"wall\"") == 4);
    REQUIRE(count_occurrences(svg, "class=\"obstacle\"") == 1);
    REQUIRE(svg.find("ped 3") != std::string::npos);

    SECTION("labels are escaped") {
        TrajectoryPath robot;
        robot.points = {{1.0, 1.0}, {2.0, 2.0}};
        TrajectoryPath odd;
        odd.label = "a<b&c";
        odd.points = {{3.0, 3.0}, {4.0, 4.0}};
        const std::string direct =
            trajectory_svg(sc.map, nullptr, robot, {odd});
        REQUIRE(oracle::xml_problem(direct).empty());
        REQUIRE(direct.find("a&lt;b&amp;c") != std::string::npos);
        REQUIRE(count_occurrences(direct, "class=\"goal\"") == 0);
    }
}

TEST_CASE("greedy goal policy turns, drives, and dodges") {
    GreedyGoalPolicy policy;
    ObservationVector obs;
    obs.values.assign(kObservationSize, kInvalid);
    for (int i = 0; i < kLidarBlockSize; ++i)
        obs.values[static_cast<std::size_t>(i)] = 3.5;
    const auto set_goal = [&](double dist, double bearing) {
        obs.values[static_cast<std::size_t>(obs_offsets::frame(0))] = dist;
        obs.values[static_cast<std::size_t>(obs_offsets::frame(0) + 1)] = bearing;
    };

    SECTION("no goal stops") { REQUIRE(policy.select(obs) == Action::Stop); }
    SECTION("clear front drives forward") {
        set_goal(5.0, 0.0);
        REQUIRE(policy.select(obs) == Action::Forward);
    }
    SECTION("bearing thresholds") {
        set_goal(5.0, 0.6);
        REQUIRE(policy.select(obs) == Action::StrongLeft);
        set_goal(5.0, -0.6);
        REQUIRE(policy.select(obs) == Action::StrongRight);
        set_goal(5.0, 0.2);
        REQUIRE(policy.select(obs) == Action::Left);
        set_goal(5.0, -0.2);
        REQUIRE(policy.select(obs) == Action::Right);
    }
    SECTION("blocked front sidesteps toward the clearer side") {
        set_goal(5.0, 0.0);
        for (int i = 17; i <= 23; ++i)
            obs.values[static_cast<std::size_t>(i)] = 0.3;
        for (int i = 24; i <= 29; ++i)
            obs.values[static_cast<std::size_t>(i)] = 0.5;
        for (int i = 11; i <= 16; ++i)
            obs.values[static_cast<std::size_t>(i)] = 0.4;
        REQUIRE(policy.select(obs) == Action::Left);
        for (int i = 11; i <= 16; ++i)
            obs.values[static_cast<std::size_t>(i)] = 0.9;
        REQUIRE(policy.select(obs) == Action::Right);
    }
    SECTION("a goal closer than the obstruction still drives") {
        set_goal(0.3, 0.0);
        for (int i = 17; i <= 23; ++i)
            obs.values[static_cast<std::size_t>(i)] = 0.4;
        REQUIRE(policy.select(obs) == Action::Forward);
    }
    SECTION("observation length is checked") {
        ObservationVector bad;
        bad.values.assign(10, 0.0);
        REQUIRE_THROWS_AS(policy.select(bad), ContractViolation);
    }
}

TEST_CASE("random policy reseeds per episode and clones mid-stream") {
    RandomPolicy a, b;
    ObservationVector obs;
    a.begin_episode(7u);
    b.begin_episode(7u);
    std::vector<Action> seq_a, seq_b;
    for (int i = 0; i < 20; ++i) {
        seq_a.push_back(a.select(obs));
        seq_b.push_back(b.select(obs));
    }
    REQUIRE(seq_a == seq_b);

    b.begin_episode(8u);
    std::vector<Action> seq_c;
    for (int i = 0; i < 20; ++i) seq_c.push_back(b.select(obs));
    REQUIRE(seq_a != seq_c);

    auto clone = a.clone();
    for (int i = 0; i < 10; ++i) REQUIRE(clone->select(obs) == a.select(obs));
}

TEST_CASE("make_policy dispatches by name or checkpoint path") {
    REQUIRE(make_policy("greedy-goal")->name() == "greedy-goal");
    REQUIRE(make_policy("random")->name() == "random");
    REQUIRE_FALSE(make_policy("random")->expected_variant().has_value());

    NetworkSpec spec;
    spec.lidar_hidden = {4};
    spec.ped_hidden = {4};
    spec.trunk_hidden = {4};
    const std::string path = "make_policy_test.ckpt";
    save_checkpoint(Network{spec}, AgentVariant::Complete, path);
    const auto policy = make_policy(path);
    REQUIRE(policy->name() == "checkpoint");
    REQUIRE(policy->expected_variant() == AgentVariant::Complete);

    ObservationVector obs;
    obs.values.assign(kObservationSize, 0.0);
    REQUIRE(policy->select(obs) == Action::Forward); // zero net, lowest index
    std::remove(path.c_str());
    REQUIRE_THROWS_AS(make_policy("no_such_checkpoint.ckpt"), ValidationError);
}

TEST_CASE("scenario files round trip and validate") {
    const Scenario sc = random_scenario(4, TaskKind::Guiding, 77u);
    const std::string text = scenario_to_string(sc);
    const Scenario back = scenario_from_string(text);
    REQUIRE(scenario_to_string(back) == text);
    REQUIRE(back.task_kind == TaskKind::Guiding);
    REQUIRE(back.seed == sc.seed);
    REQUIRE(back.pedestrians.size() == sc.pedestrians.size());

    SECTION("file io") {
        const std::string path = "scenario_roundtrip_test.json";
        save_scenario(sc, path);
        const Scenario loaded = load_scenario(path);
        REQUIRE(scenario_to_string(loaded) == text);
        std::remove(path.c_str());
        REQUIRE_THROWS_AS(load_scenario("missing_scenario_test.json"),
                          ValidationError);
    }
    SECTION("schema and syntax violations are rejected") {
        nlohmann::json j = scenario_to_json(sc);
        j["schema"] = 99;
        REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
        REQUIRE_THROWS_AS(scenario_from_string("not json at all"),
                          ValidationError);
        nlohmann::json bad = scenario_to_json(sc);
        bad["robot"]["start"] = nlohmann::json::array({1.0, 2.0});
        REQUIRE_THROWS_AS(scenario_from_json(bad), ValidationError);
    }
    SECTION("semantic validation still runs on load") {
        nlohmann::json j = scenario_to_json(sc);
        j["goal"] = nlohmann::json::array({99.0, 99.0}); // outside bounds
        REQUIRE_THROWS_AS(scenario_from_json(j), ValidationError);
    }
}
