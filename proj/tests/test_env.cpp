#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdnav/env.hpp"
#include "crowdnav/rng.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace crowdnav;

namespace {

// Open 20x20 arena (no walls), robot facing the +x goal.
Scenario open_arena() {
    Scenario sc;
    sc.robot_start = {{5.0, 10.0}, 0.0};
    sc.end_goal = {15.0, 10.0};
    return sc;
}

ScriptedPedestrian scripted(Pedestrian p, StateScript script = {}) {
    ScriptedPedestrian sp;
    sp.ped = p;
    sp.script = std::move(script);
    return sp;
}

Pedestrian ped_at(int id, Vec2 pos, SocialState state) {
    Pedestrian p;
    p.id = id;
    p.position = pos;
    p.state = state;
    return p;
}

} // namespace

TEST_CASE("action commands") {
    REQUIRE(action_to_command(Action::Forward).linear == 0.22);
    REQUIRE(action_to_command(Action::Forward).angular == 0.0);
    REQUIRE(action_to_command(Action::Stop).linear == 0.0);
    REQUIRE(action_to_command(Action::Stop).angular == 0.0);
    REQUIRE(action_to_command(Action::Left).linear == 0.15);
    REQUIRE(action_to_command(Action::Left).angular == 0.75);
    REQUIRE(action_to_command(Action::Right).linear == 0.15);
    REQUIRE(action_to_command(Action::Right).angular == -0.75);
    REQUIRE(action_to_command(Action::StrongLeft).linear == 0.0);
    REQUIRE(action_to_command(Action::StrongLeft).angular == 1.5);
    REQUIRE(action_to_command(Action::StrongRight).angular == -1.5);
    REQUIRE_THROWS_AS(action_to_command(static_cast<Action>(17)), ContractViolation);
}

TEST_CASE("task kind strings") {
    REQUIRE(std::string(to_string(TaskKind::PointToPoint)) == "point");
    REQUIRE(parse_task_kind("point") == TaskKind::PointToPoint);
    REQUIRE(parse_task_kind("guide") == TaskKind::Guiding);
    REQUIRE(parse_task_kind("follow") == TaskKind::Following);
    REQUIRE_FALSE(task_kind_from_string("teleport").has_value());
    REQUIRE_THROWS_AS(parse_task_kind("teleport"), ValidationError);
}

TEST_CASE("scenario validation") {
    Scenario sc = open_arena();
    REQUIRE_NOTHROW(sc.validate());
    SECTION("robot start outside bounds") {
        sc.robot_start.position = {25.0, 10.0};
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
    SECTION("end goal outside bounds") {
        sc.end_goal = {-1.0, 10.0};
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
    SECTION("non-positive robot radius") {
        sc.robot_radius = 0.0;
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
    SECTION("pedestrian outside bounds") {
        sc.pedestrians.push_back(scripted(ped_at(0, {21.0, 3.0}, SocialState::Walking)));
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
    SECTION("duplicate pedestrian ids") {
        sc.pedestrians.push_back(scripted(ped_at(1, {3.0, 3.0}, SocialState::Walking)));
        sc.pedestrians.push_back(scripted(ped_at(1, {4.0, 4.0}, SocialState::Idle)));
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
    SECTION("assistance task needs a matching pedestrian") {
        sc.task_kind = TaskKind::Guiding;
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
        sc.pedestrians.push_back(
            scripted(ped_at(0, {12.0, 10.0}, SocialState::RequestingGuide)));
        REQUIRE_NOTHROW(sc.validate());
    }
    SECTION("a scripted future VIP also satisfies the requirement") {
        sc.task_kind = TaskKind::Following;
        StateScript script;
        script.entries.push_back({{ScriptTrigger::Kind::Time, 5.0, {}, 0.0},
                                  SocialState::RequestingFollower, std::nullopt});
        sc.pedestrians.push_back(
            scripted(ped_at(0, {12.0, 10.0}, SocialState::Walking), script));
        REQUIRE_NOTHROW(sc.validate());
    }
    SECTION("bad nested script ordering propagates") {
        StateScript script;
        script.entries.push_back({{ScriptTrigger::Kind::Time, 5.0, {}, 0.0},
                                  SocialState::Idle, std::nullopt});
        script.entries.push_back({{ScriptTrigger::Kind::Time, 4.0, {}, 0.0},
                                  SocialState::Walking, std::nullopt});
        sc.pedestrians.push_back(
            scripted(ped_at(0, {3.0, 3.0}, SocialState::Walking), script));
        REQUIRE_THROWS_AS(sc.validate(), ValidationError);
    }
}

TEST_CASE("reset produces a replicated-history observation") {
    Environment env;
    const auto obs = env.reset(open_arena());
    REQUIRE(obs.size() == kObservationSize);
    REQUIRE_FALSE(env.done());
    REQUIRE(env.step_count() == 0);
    REQUIRE(env.sim_time() == 0.0);
    REQUIRE(env.robot().pose.position == Vec2{5.0, 10.0});
    // every history frame equals the first: goal dist 10, bearing 0, flag 0
    for (int f = 0; f < kHistoryLength; ++f) {
        REQUIRE(obs[static_cast<std::size_t>(obs_offsets::goal(f))] == Approx(10.0));
        REQUIRE(obs[static_cast<std::size_t>(obs_offsets::goal(f) + 1)] ==
                Approx(0.0).margin(1e-12));
        REQUIRE(obs[static_cast<std::size_t>(obs_offsets::flag(f))] == 0.0);
    }
    // empty map, no walls: lidar saturates
    for (int i = 0; i < kLidarBlockSize; ++i)
        REQUIRE(obs[static_cast<std::size_t>(i)] == 3.5);
}

TEST_CASE("reset refreshes pedestrian safety distances") {
    Scenario sc = open_arena();
    Pedestrian p = ped_at(0, {12.0, 10.0}, SocialState::Running);
    p.safety_distance = 0.123; // stale on purpose
    sc.pedestrians.push_back(scripted(p));
    Environment env;
    env.reset(sc);
    REQUIRE(env.pedestrians().size() == 1);
    REQUIRE(env.pedestrians()[0].safety_distance == 1.5);
}

TEST_CASE("a two-step hand-computed episode") {
    Environment env;
    env.reset(open_arena());

    const auto fwd = env.step(Action::Forward);
    const double expected_x = 5.0 + 0.22 * 0.1;
    REQUIRE(env.robot().pose.position.x == expected_x);
    REQUIRE(env.robot().pose.position.y == 10.0);
    const double t1 = 1.0 / 1800.0;
    REQUIRE(fwd.reward_total == Approx(0.018 * std::exp(1.0 - t1)).margin(1e-12));
    REQUIRE(fwd.terms.r_distance == fwd.reward_total);
    REQUIRE(fwd.terms.r_success == 0.0);
    REQUIRE(fwd.terms.r_collision == 0.0);
    REQUIRE(fwd.terms.r_static_safety == 0.0);
    REQUIRE(fwd.terms.r_dynamic_safety == 0.0);
    REQUIRE_FALSE(fwd.done);
    REQUIRE(fwd.done_reason == DoneReason::None);
    REQUIRE(fwd.info.flag == 0);
    REQUIRE(fwd.info.has_goal);
    REQUIRE(fwd.info.goal == Vec2{15.0, 10.0});
    REQUIRE(fwd.info.d_rp == -1.0);
    REQUIRE(fwd.info.robot_speed == 0.22);
    REQUIRE(fwd.info.vip_speed == -1.0);
    REQUIRE(fwd.info.sim_time == Approx(0.1));
    // newest frame leads the history
    REQUIRE(fwd.observation[static_cast<std::size_t>(obs_offsets::goal(0))] ==
            Approx(10.0 - 0.022).margin(1e-12));
    REQUIRE(fwd.observation[static_cast<std::size_t>(obs_offsets::goal(1))] ==
            Approx(10.0));

    const auto stop = env.step(Action::Stop);
    REQUIRE(stop.reward_total == Approx(-0.03).margin(1e-12));
    REQUIRE(env.robot().pose.position.x == expected_x);
    REQUIRE(stop.info.robot_speed == 0.0);
    REQUIRE(env.step_count() == 2);
    REQUIRE(env.sim_time() == Approx(0.2));
}

TEST_CASE("pedestrians move before the reward reads distances") {
    Scenario sc = open_arena();
    sc.pedestrians.push_back(scripted(ped_at(0, {5.9, 10.0}, SocialState::Idle)));
    Environment env;
    env.reset(sc);
    const auto res = env.step(Action::Forward);

    // replay the update order: robot first, then the pedestrian's force step
    const Vec2 robot_pos{5.0 + 0.22 * 0.1, 10.0};
    RobotState robot;
    robot.pose.position = robot_pos;
    Pedestrian p = ped_at(0, {5.9, 10.0}, SocialState::Idle);
    p.safety_distance = 1.0;
    const auto moved = step_pedestrians({p}, robot, sc.map, 0.1);
    REQUIRE(env.pedestrians()[0].position.x == Approx(moved[0].position.x).margin(1e-15));

    const double d_rh = (moved[0].position - robot_pos).norm();
    REQUIRE(d_rh < 1.0);
    const double expected_sd = -0.08 * std::exp(1.0 - d_rh / 1.0);
    REQUIRE(res.terms.r_dynamic_safety == Approx(expected_sd).margin(1e-12));
    const double t1 = 1.0 / 1800.0;
    REQUIRE(res.reward_total ==
            Approx(0.018 * std::exp(1.0 - t1) + expected_sd).margin(1e-12));
}

TEST_CASE("success ends the episode and further steps throw") {
    Scenario sc = open_arena();
    sc.end_goal = {5.25, 10.0};
    Environment env;
    env.reset(sc);
    const auto res = env.step(Action::Forward);
    REQUIRE(res.done);
    REQUIRE(res.done_reason == DoneReason::Success);
    REQUIRE(res.terms.r_success == 2.0);
    REQUIRE(env.done());
    REQUIRE_THROWS_AS(env.step(Action::Stop), ContractViolation);
    SECTION("reset clears the terminal state") {
        env.reset(open_arena());
        REQUIRE_FALSE(env.done());
        REQUIRE_NOTHROW(env.step(Action::Stop));
    }
}

TEST_CASE("driving into a wall collides") {
    Scenario sc = open_arena();
    sc.map.add_border_walls();
    sc.robot_start = {{0.16, 10.0}, kPi};
    Environment env;
    env.reset(sc);
    const auto res = env.step(Action::Forward);
    REQUIRE(res.done);
    REQUIRE(res.done_reason == DoneReason::Collision);
    REQUIRE(res.terms.r_collision == -4.0);
    REQUIRE(res.terms.r_distance == -0.014);       // drove away from the end goal
    REQUIRE(res.terms.r_static_safety == -0.15);   // and inside the wall keep-out
    REQUIRE(res.reward_total == Approx(-4.164).margin(1e-12));
}

TEST_CASE("timeout fires at step_max and success still wins there") {
    Scenario sc = open_arena();
    Environment env_t{[] {
        EnvConfig cfg;
        cfg.reward.step_max = 3;
        return cfg;
    }()};
    env_t.reset(sc);
    REQUIRE_FALSE(env_t.step(Action::Stop).done);
    REQUIRE_FALSE(env_t.step(Action::Stop).done);
    const auto last = env_t.step(Action::Stop);
    REQUIRE(last.done);
    REQUIRE(last.done_reason == DoneReason::Timeout);
    REQUIRE(env_t.done_reason() == DoneReason::Timeout);

    SECTION("success on the final step outranks the timeout") {
        Scenario close = open_arena();
        close.end_goal = {5.05, 10.0};
        Environment env_s{[] {
            EnvConfig cfg;
            cfg.reward.step_max = 1;
            return cfg;
        }()};
        env_s.reset(close);
        const auto res = env_s.step(Action::Stop); // already within the goal disc
        REQUIRE(res.done_reason == DoneReason::Success);
    }
}

TEST_CASE("wandering walkers receive goals, scripted ones do not") {
    Scenario sc = open_arena();
    Pedestrian walker = ped_at(0, {10.0, 10.0}, SocialState::Walking);
    StateScript faraway;
    faraway.entries.push_back({{ScriptTrigger::Kind::Time, 1e6, {}, 0.0},
                               SocialState::Idle, std::nullopt});
    Pedestrian scripted_walker = ped_at(1, {12.0, 12.0}, SocialState::Walking);
    sc.pedestrians.push_back(scripted(walker));
    sc.pedestrians.push_back(scripted(scripted_walker, faraway));

    SECTION("wander on") {
        Environment env;
        env.reset(sc);
        env.step(Action::Stop);
        REQUIRE(env.pedestrians()[0].goal.has_value());
        REQUIRE(sc.map.bounds.contains(*env.pedestrians()[0].goal));
        REQUIRE_FALSE(env.pedestrians()[1].goal.has_value());
    }
    SECTION("wander off leaves everyone goalless") {
        EnvConfig cfg;
        cfg.wander = false;
        Environment env{cfg};
        env.reset(sc);
        env.step(Action::Stop);
        REQUIRE_FALSE(env.pedestrians()[0].goal.has_value());
        const Vec2 before = env.pedestrians()[0].position;
        env.step(Action::Stop);
        // no drive: only residual far-field repulsion, far below any real step
        REQUIRE((env.pedestrians()[0].position - before).norm() < 1e-3);
    }
    SECTION("wander goals are seeded per scenario") {
        Environment a, b;
        Scenario s1 = sc;
        s1.seed = 7;
        Scenario s2 = sc;
        s2.seed = 7;
        a.reset(s1);
        b.reset(s2);
        a.step(Action::Stop);
        b.step(Action::Stop);
        REQUIRE(a.pedestrians()[0].goal.has_value());
        REQUIRE(*a.pedestrians()[0].goal == *b.pedestrians()[0].goal);
    }
}

TEST_CASE("guiding episode latches the VIP and resolves pedestrian goals") {
    Scenario sc = open_arena();
    sc.task_kind = TaskKind::Guiding;
    StateScript script;
    script.entries.push_back({{ScriptTrigger::Kind::RobotNear, 0.0, {}, 2.0},
                              SocialState::FollowingGuide, std::nullopt});
    sc.pedestrians.push_back(
        scripted(ped_at(0, {12.0, 10.0}, SocialState::RequestingGuide), script));

    Environment env;
    env.reset(sc);
    REQUIRE(env.task().flag == 1);
    REQUIRE(env.task().goal == TaskGoal::pedestrian(0));
    REQUIRE(env.vip_id() == 0);
    REQUIRE(env.robot().task_flag == 1);
    REQUIRE(env.robot().goal.has_value());
    REQUIRE(env.robot().goal->x == Approx(12.0));
    const auto res = env.step(Action::Forward);
    REQUIRE(res.info.flag == 1);
    REQUIRE(res.info.d_rp == Approx(12.0 - 5.022).margin(1e-9));
    REQUIRE(res.info.vip_speed >= 0.0);
    // the resolved goal tracks the pedestrian, not a frozen copy
    REQUIRE(res.info.goal.x == Approx(env.pedestrians()[0].position.x));
}

TEST_CASE("a close requesting follower clears the goal") {
    Scenario sc = open_arena();
    sc.task_kind = TaskKind::Following;
    sc.pedestrians.push_back(
        scripted(ped_at(0, {7.0, 10.0}, SocialState::RequestingFollower)));
    Environment env;
    env.reset(sc);
    REQUIRE(env.task().flag == 3);
    REQUIRE(env.task().goal == TaskGoal::none());
    REQUIRE_FALSE(env.robot().goal.has_value());
    const auto res = env.step(Action::Stop);
    REQUIRE_FALSE(res.info.has_goal);
    REQUIRE(res.terms.r_distance == -0.03); // sentinel distances stall
}

TEST_CASE("environment steps are deterministic") {
    const Scenario sc = random_scenario(6, TaskKind::Guiding, 123u);
    Environment a, b;
    auto oa = a.reset(sc);
    auto ob = b.reset(sc);
    REQUIRE(oa.values == ob.values);
    Rng action_rng(9u, "actions");
    for (int i = 0; i < 80 && !a.done(); ++i) {
        const auto act = static_cast<Action>(action_rng.below(6));
        const auto ra = a.step(act);
        const auto rb = b.step(act);
        REQUIRE(ra.observation.values == rb.observation.values);
        REQUIRE(ra.reward_total == rb.reward_total);
        REQUIRE(ra.done == rb.done);
        if (ra.done) break;
    }
}

TEST_CASE("curriculum tracker follows the reference schedule") {
    CurriculumState state;
    oracle::CurriculumRef ref;
    SECTION("a single huge episode raises immediately and clears the window") {
        state = curriculum_update(state, 45.0);
        REQUIRE(state.obstacle_count == 2);
        REQUIRE(state.window.empty());
        state = curriculum_update(state, 45.0);
        REQUIRE(state.obstacle_count == 4);
    }
    SECTION("lowering needs a full window") {
        state.obstacle_count = 4;
        for (int i = 0; i < 49; ++i) {
            state = curriculum_update(state, -1.0);
            REQUIRE(state.obstacle_count == 4);
        }
        state = curriculum_update(state, -1.0);
        REQUIRE(state.obstacle_count == 2);
        REQUIRE(state.window.empty());
    }
    SECTION("clamped at the bounds") {
        state.obstacle_count = 0;
        for (int i = 0; i < 50; ++i) state = curriculum_update(state, -5.0);
        REQUIRE(state.obstacle_count == 0);
        state.obstacle_count = 30;
        state = curriculum_update(state, 100.0);
        REQUIRE(state.obstacle_count == 30);
    }
    SECTION("random stream matches the transcription") {
        Rng rng(3u, "curriculum");
        ref.count = 0;
        for (int i = 0; i < 400; ++i) {
            const double r = rng.uniform(-3.0, 3.0);
            state = curriculum_update(state, r);
            ref.update(state, r);
            REQUIRE(state.obstacle_count == ref.count);
        }
    }
}

TEST_CASE("random scenarios are valid, seeded and sized") {
    const auto sc = random_scenario(8, TaskKind::PointToPoint, 42u);
    REQUIRE(sc.pedestrians.size() == 8);
    REQUIRE(sc.seed == 42u);
    REQUIRE_NOTHROW(sc.validate());
    REQUIRE(sc.map.walls.size() == 4);
    REQUIRE((sc.end_goal - sc.robot_start.position).norm() >= 8.0);

    SECTION("same seed reproduces the scenario") {
        const auto again = random_scenario(8, TaskKind::PointToPoint, 42u);
        REQUIRE(again.robot_start.position == sc.robot_start.position);
        REQUIRE(again.end_goal == sc.end_goal);
        for (std::size_t i = 0; i < sc.pedestrians.size(); ++i)
            REQUIRE(again.pedestrians[i].ped.position == sc.pedestrians[i].ped.position);
    }
    SECTION("different seeds differ") {
        const auto other = random_scenario(8, TaskKind::PointToPoint, 43u);
        REQUIRE_FALSE(other.robot_start.position == sc.robot_start.position);
    }
    SECTION("assistance tasks add one VIP") {
        const auto guide = random_scenario(5, TaskKind::Guiding, 7u);
        REQUIRE(guide.pedestrians.size() == 6);
        REQUIRE(guide.has_task_vip());
        const auto follow = random_scenario(0, TaskKind::Following, 7u);
        REQUIRE(follow.pedestrians.size() == 1);
        REQUIRE(follow.pedestrians[0].ped.state == SocialState::RequestingFollower);
    }
    SECTION("styles shape the crowd") {
        ScenarioOptions opts;
        opts.style = "running";
        const auto running = random_scenario(4, TaskKind::PointToPoint, 11u, opts);
        for (const auto& sp : running.pedestrians)
            REQUIRE(sp.ped.state == SocialState::Running);
        opts.style = "crowds";
        const auto crowds = random_scenario(4, TaskKind::PointToPoint, 11u, opts);
        for (const auto& sp : crowds.pedestrians) {
            REQUIRE(sp.ped.state == SocialState::Walking);
            REQUIRE(sp.script.entries.size() == 1);
            REQUIRE(sp.script.entries[0].next_state == SocialState::Talking);
        }
    }
    SECTION("negative obstacle count is rejected") {
        REQUIRE_THROWS_AS(random_scenario(-1, TaskKind::PointToPoint, 1u),
                          ContractViolation);
    }
}

TEST_CASE("variant configuration masks the live observation") {
    Scenario sc = open_arena();
    sc.pedestrians.push_back(scripted(ped_at(0, {7.0, 10.0}, SocialState::Talking)));
    EnvConfig cfg;
    cfg.variant = AgentVariant::Raw;
    Environment env{cfg};
    const auto obs = env.reset(sc);
    for (int f = 0; f < kHistoryLength; ++f)
        for (int s = 0; s < kPedSlots; ++s)
            for (int k = 0; k < kPedEntrySize; ++k)
                REQUIRE(obs[static_cast<std::size_t>(obs_offsets::ped(f, s) + k)] ==
                        kInvalid);
}
