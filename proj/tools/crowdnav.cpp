#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crowdnav/crowdnav.hpp"

namespace {

using namespace crowdnav;

void print_error(const std::string& kind, const std::string& message) {
    nlohmann::json j = {{"error", message}, {"kind", kind}};
    std::cerr << j.dump() << "\n";
}

struct GenSpec {
    bool random = false;
    std::string file;
    int obstacles = 20;
    TaskKind task = TaskKind::PointToPoint;
    ScenarioOptions opts;
};

// "random:task=point,obstacles=20,map=20,speed=0.3,style=random" or a
// scenario file path.
GenSpec parse_gen_spec(const std::string& spec) {
    GenSpec g;
    if (spec.rfind("random:", 0) != 0 && spec != "random") {
        g.file = spec;
        return g;
    }
    g.random = true;
    const std::string body = spec == "random" ? "" : spec.substr(7);
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t comma = body.find(',', pos);
        if (comma == std::string::npos) comma = body.size();
        const std::string pair = body.substr(pos, comma - pos);
        pos = comma + 1;
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw ValidationError("scenario-gen: expected key=value, got '" +
                                  pair + "'");
        const std::string key = pair.substr(0, eq);
        const std::string val = pair.substr(eq + 1);
        if (key == "task") g.task = parse_task_kind(val);
        else if (key == "obstacles") g.obstacles = std::stoi(val);
        else if (key == "map") g.opts.map_size = std::stod(val);
        else if (key == "speed") g.opts.ped_speed = std::stod(val);
        else if (key == "style") g.opts.style = val;
        else if (key == "sep") g.opts.min_goal_separation = std::stod(val);
        else throw ValidationError("scenario-gen: unknown key '" + key + "'");
    }
    return g;
}

EvalScenarioGen make_gen(const GenSpec& g) {
    if (g.random) {
        return [g](int, std::uint64_t seed) {
            return random_scenario(g.obstacles, g.task, seed, g.opts);
        };
    }
    Scenario base = load_scenario(g.file);
    return [base](int, std::uint64_t seed) {
        Scenario sc = base;
        sc.seed = seed;
        return sc;
    };
}

int cmd_simulate(const std::string& scenario_path, const std::string& policy_desc,
                 std::uint64_t seed, bool seed_given, const std::string& record_out,
                 const std::string& svg_out, const std::string& variant_name) {
    Scenario sc = load_scenario(scenario_path);
    if (seed_given) sc.seed = seed;
    EnvConfig cfg;
    cfg.variant = variant_from_string(variant_name);
    std::unique_ptr<Policy> policy = make_policy(policy_desc);
    if (const auto want = policy->expected_variant();
        want.has_value() && *want != cfg.variant)
        cfg.variant = *want;

    Environment env(cfg);
    RunOptions opt;
    opt.record_steps = true;
    opt.record_ped_paths = true;
    const EpisodeRecord rec = run_episode(env, *policy, sc, sc.seed, opt);

    std::printf("outcome=%s steps=%d time=%.1f path=%.2f reward=%.4f\n",
                to_string(rec.outcome),
                static_cast<int>(rec.steps.size()) - 1, rec.wall_time,
                rec.path_length, [&] {
                    double total = 0.0;
                    for (const StepTrace& s : rec.steps) total += s.reward;
                    return total;
                }());
    if (!record_out.empty()) save_record(rec, record_out);
    if (!svg_out.empty()) save_text(episode_svg(rec), svg_out);
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
    std::ifstream f(config_path);
    if (!f) throw ValidationError("cannot open config: " + config_path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }

    const std::uint64_t seed = j.value("seed", std::uint64_t{1});
    const AgentVariant variant =
        variant_from_string(j.value("variant", std::string("complete")));
    const TaskKind task =
        parse_task_kind(j.value("task", std::string("point")));

    ScenarioOptions opts;
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        opts.map_size = s.value("map_size", opts.map_size);
        opts.ped_speed = s.value("ped_speed", opts.ped_speed);
        opts.style = s.value("style", opts.style);
        opts.min_goal_separation =
            s.value("min_goal_separation", opts.min_goal_separation);
    }

    NetworkSpec spec;
    if (j.contains("network")) {
        const auto& n = j["network"];
        spec.lidar_hidden = n.value("lidar_hidden", spec.lidar_hidden);
        spec.ped_hidden = n.value("ped_hidden", spec.ped_hidden);
        spec.trunk_hidden = n.value("trunk_hidden", spec.trunk_hidden);
        spec.leaky_slope = n.value("leaky_slope", spec.leaky_slope);
        spec.init_scale = n.value("init_scale", spec.init_scale);
    }

    TrainConfig tc;
    if (j.contains("train")) {
        const auto& t = j["train"];
        tc.learning_rate = t.value("learning_rate", tc.learning_rate);
        tc.gamma = t.value("gamma", tc.gamma);
        tc.replay_capacity = t.value("replay_capacity", tc.replay_capacity);
        tc.batch_size = t.value("batch_size", tc.batch_size);
        tc.eps_start = t.value("eps_start", tc.eps_start);
        tc.eps_end = t.value("eps_end", tc.eps_end);
        tc.eps_decay_episodes =
            t.value("eps_decay_episodes", tc.eps_decay_episodes);
        tc.target_update_period =
            t.value("target_update_period", tc.target_update_period);
        tc.max_episodes = t.value("max_episodes", tc.max_episodes);
        tc.train_every = t.value("train_every", tc.train_every);
        tc.warmup_transitions =
            t.value("warmup_transitions", tc.warmup_transitions);
        tc.success_window = t.value("success_window", tc.success_window);
        tc.early_stop_success =
            t.value("early_stop_success", tc.early_stop_success);
        tc.use_curriculum = t.value("use_curriculum", tc.use_curriculum);
        tc.max_steps_per_episode =
            t.value("max_steps_per_episode", tc.max_steps_per_episode);
        tc.curriculum.obstacle_count =
            t.value("initial_obstacles", tc.curriculum.obstacle_count);
    }

    EnvConfig env_cfg;
    env_cfg.variant = variant;
    if (j.contains("env")) {
        const auto& e = j["env"];
        env_cfg.dt = e.value("dt", env_cfg.dt);
        env_cfg.reward.step_max = e.value("step_max", env_cfg.reward.step_max);
        env_cfg.wander = e.value("wander", env_cfg.wander);
    }

    std::filesystem::create_directories(out_dir);
    const TrainResult result =
        train(make_random_scenario_factory(task, opts), spec, env_cfg, tc, seed);

    const std::string ckpt_path =
        (std::filesystem::path(out_dir) / "checkpoint.bin").string();
    const std::string curve_path =
        (std::filesystem::path(out_dir) / "curve.csv").string();
    save_checkpoint(result.best, variant, ckpt_path);
    save_learning_curve(result.curve, curve_path);

    std::printf("episodes=%zu best_success=%.3f optimizer_steps=%ld%s\n",
                result.curve.size(), result.best_success,
                result.optimizer_steps,
                result.early_stopped ? " early_stop=1" : "");
    std::printf("checkpoint=%s curve=%s\n", ckpt_path.c_str(),
                curve_path.c_str());
    return 0;
}

int cmd_eval(const std::string& gen_spec, const std::string& policy_desc,
             int episodes, const std::vector<std::uint64_t>& seeds,
             const std::string& out_dir, int svg_count,
             const std::string& variant_name, bool write_records) {
    const GenSpec g = parse_gen_spec(gen_spec);
    const EvalScenarioGen gen = make_gen(g);
    std::unique_ptr<Policy> policy = make_policy(policy_desc);
    EnvConfig cfg;
    cfg.variant = variant_from_string(variant_name);

    RunOptions opt;
    opt.record_steps = write_records || svg_count > 0;
    opt.record_ped_paths = svg_count > 0;
    const BatchResult result =
        run_batch(gen, *policy, cfg, episodes, seeds, opt);

    std::filesystem::create_directories(out_dir);
    const auto out = [&](const std::string& name) {
        return (std::filesystem::path(out_dir) / name).string();
    };
    save_text(summary_csv({{policy->name(), result.summary}}),
              out("summary.csv"));
    if (write_records) save_text(records_csv(result.records), out("records.csv"));
    for (int i = 0; i < svg_count && i < static_cast<int>(result.records.size());
         ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "episode_%04d.svg", i);
        save_text(episode_svg(result.records[static_cast<std::size_t>(i)]),
                  out(name));
    }

    const MetricsSummary& s = result.summary;
    std::printf("episodes=%zu success_rate=%.4f collision_rate=%.4f "
                "timeout_rate=%.4f mean_time_to_goal=%.2f "
                "mean_path_length=%.2f\n",
                s.episodes, s.success_rate, s.collision_rate, s.timeout_rate,
                s.mean_time_to_goal, s.mean_path_length);
    return 0;
}

int cmd_gen_scenario(int obstacles, const std::string& task,
                     std::uint64_t seed, const std::string& out,
                     double map_size, double ped_speed,
                     const std::string& style) {
    ScenarioOptions opts;
    opts.map_size = map_size;
    opts.ped_speed = ped_speed;
    opts.style = style;
    const Scenario sc =
        random_scenario(obstacles, parse_task_kind(task), seed, opts);
    save_scenario(sc, out);
    std::printf("wrote %s (%d pedestrians, task %s, seed %llu)\n", out.c_str(),
                static_cast<int>(sc.pedestrians.size()), task.c_str(),
                static_cast<unsigned long long>(seed));
    return 0;
}

int cmd_obs_layout() {
    std::printf("%-28s %7s %7s\n", "block", "offset", "length");
    int total = 0;
    for (const LayoutRow& row : observation_layout()) {
        std::printf("%-28s %7d %7d\n", row.name.c_str(), row.offset, row.length);
        total += row.length;
    }
    std::printf("%-28s %7s %7d\n", "total", "", total);
    return 0;
}

int cmd_replay(const std::string& record_path, const std::string& out) {
    const EpisodeRecord rec = load_record(record_path);
    const std::string path = out == "svg" ? record_path + ".svg" : out;
    save_text(episode_svg(rec), path);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crowd navigation simulator and evaluation harness"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run one episode");
    std::string sim_scenario, sim_policy = "greedy-goal", sim_record, sim_svg;
    std::string sim_variant = "complete";
    std::uint64_t sim_seed = 0;
    sim->add_option("--scenario", sim_scenario, "scenario file")->required();
    sim->add_option("--policy", sim_policy,
                    "greedy-goal | random | checkpoint path");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "seed override");
    sim->add_option("--record", sim_record, "write episode record (json)");
    sim->add_option("--svg", sim_svg, "write trajectory svg");
    sim->add_option("--variant", sim_variant, "observation variant");

    auto* train_cmd = app.add_subcommand("train", "train a policy");
    std::string train_config, train_out = "train_out";
    train_cmd->add_option("--config", train_config, "training config (json)")
        ->required();
    train_cmd->add_option("--out", train_out, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "batch evaluation");
    std::string eval_gen, eval_policy = "greedy-goal", eval_out = "eval_out";
    std::string eval_variant = "complete";
    int eval_episodes = 100, eval_svgs = 0;
    bool eval_records = false;
    std::vector<std::uint64_t> eval_seeds;
    eval_cmd->add_option("--scenario-gen", eval_gen,
                         "scenario file or random:key=value,...")
        ->required();
    eval_cmd->add_option("--policy", eval_policy,
                         "greedy-goal | random | checkpoint path");
    eval_cmd->add_option("--episodes", eval_episodes, "episode count");
    eval_cmd->add_option("--seeds", eval_seeds, "episode seeds");
    eval_cmd->add_option("--out", eval_out, "output directory");
    eval_cmd->add_option("--svg", eval_svgs, "render first N episodes");
    eval_cmd->add_option("--variant", eval_variant, "observation variant");
    eval_cmd->add_flag("--records", eval_records, "write per-step records csv");

    auto* gen_cmd = app.add_subcommand("gen-scenario", "write a scenario file");
    int gen_obstacles = 20;
    std::string gen_task = "point", gen_out, gen_style = "random";
    std::uint64_t gen_seed = 0;
    double gen_map = 20.0, gen_speed = 0.3;
    gen_cmd->add_option("--obstacles", gen_obstacles, "pedestrian count");
    gen_cmd->add_option("--task", gen_task, "point | guide | follow");
    gen_cmd->add_option("--seed", gen_seed, "scenario seed");
    gen_cmd->add_option("--out", gen_out, "output file")->required();
    gen_cmd->add_option("--map-size", gen_map, "square map side (m)");
    gen_cmd->add_option("--ped-speed", gen_speed, "walking speed (m/s)");
    gen_cmd->add_option("--style", gen_style, "random | crowds | running");

    auto* layout_cmd =
        app.add_subcommand("obs-layout", "print the observation layout");

    auto* replay_cmd = app.add_subcommand("replay", "render a recorded episode");
    std::string replay_record, replay_out = "svg";
    replay_cmd->add_option("--record", replay_record, "record file (json)")
        ->required();
    replay_cmd->add_option("--out", replay_out,
                           "output path ('svg' = record path + .svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("usage", e.what());
        return 1;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_scenario, sim_policy, sim_seed,
                                sim_seed_opt->count() > 0, sim_record, sim_svg,
                                sim_variant);
        if (train_cmd->parsed()) return cmd_train(train_config, train_out);
        if (eval_cmd->parsed())
            return cmd_eval(eval_gen, eval_policy, eval_episodes, eval_seeds,
                            eval_out, eval_svgs, eval_variant, eval_records);
        if (gen_cmd->parsed())
            return cmd_gen_scenario(gen_obstacles, gen_task, gen_seed, gen_out,
                                    gen_map, gen_speed, gen_style);
        if (layout_cmd->parsed()) return cmd_obs_layout();
        if (replay_cmd->parsed()) return cmd_replay(replay_record, replay_out);
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 2;
    }
    print_error("usage", "no subcommand");
    return 1;
}
