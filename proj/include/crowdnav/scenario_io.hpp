#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "crowdnav/env.hpp"
#include "crowdnav/errors.hpp"

namespace crowdnav {

// Scenario file format: JSON with a schema version tag. Serialization is
// lossless for doubles (shortest round-trip representation).
constexpr int kScenarioSchema = 1;

namespace scenario_json {

using nlohmann::json;

inline json to_json(const Vec2& v) { return json::array({v.x, v.y}); }

inline Vec2 vec2_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw ValidationError(std::string("scenario: expected [x, y] for ") + what);
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const ScriptEntry& e) {
    json trigger;
    switch (e.trigger.kind) {
        case ScriptTrigger::Kind::Time:
            trigger = json{{"time", e.trigger.time}};
            break;
        case ScriptTrigger::Kind::Region:
            trigger = json{{"region", json::array({e.trigger.region.center.x,
                                                   e.trigger.region.center.y,
                                                   e.trigger.region.radius})}};
            break;
        case ScriptTrigger::Kind::RobotNear:
            trigger = json{{"robot_near", e.trigger.robot_distance}};
            break;
    }
    json out{{"trigger", trigger}, {"state", to_string(e.next_state)}};
    out["goal"] = e.new_goal ? to_json(*e.new_goal) : json(nullptr);
    return out;
}

inline ScriptEntry script_entry_from(const json& j) {
    ScriptEntry e;
    const json& trigger = j.at("trigger");
    if (trigger.contains("time")) {
        e.trigger.kind = ScriptTrigger::Kind::Time;
        e.trigger.time = trigger.at("time").get<double>();
    } else if (trigger.contains("region")) {
        const json& r = trigger.at("region");
        if (!r.is_array() || r.size() != 3)
            throw ValidationError("scenario: region trigger expects [cx, cy, radius]");
        e.trigger.kind = ScriptTrigger::Kind::Region;
        e.trigger.region = {{r[0].get<double>(), r[1].get<double>()}, r[2].get<double>()};
    } else if (trigger.contains("robot_near")) {
        e.trigger.kind = ScriptTrigger::Kind::RobotNear;
        e.trigger.robot_distance = trigger.at("robot_near").get<double>();
    } else {
        throw ValidationError("scenario: unknown script trigger");
    }
    const auto state = social_state_from_string(j.at("state").get<std::string>());
    if (!state) throw ValidationError("scenario: unknown social state in script");
    e.next_state = *state;
    if (j.contains("goal") && !j.at("goal").is_null())
        e.new_goal = vec2_from(j.at("goal"), "script goal");
    return e;
}

} // namespace scenario_json

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    using nlohmann::json;
    using scenario_json::to_json;

    json map;
    map["bounds"] = json::array(
        {sc.map.bounds.min.x, sc.map.bounds.min.y, sc.map.bounds.max.x, sc.map.bounds.max.y});
    map["walls"] = json::array();
    for (const auto& w : sc.map.walls)
        map["walls"].push_back(json::array({w.a.x, w.a.y, w.b.x, w.b.y}));
    map["circles"] = json::array();
    for (const auto& c : sc.map.static_obstacles)
        map["circles"].push_back(json::array({c.center.x, c.center.y, c.radius}));

    json peds = json::array();
    for (const auto& sp : sc.pedestrians) {
        json p;
        p["id"] = sp.ped.id;
        p["pos"] = to_json(sp.ped.position);
        p["vel"] = to_json(sp.ped.velocity);
        p["radius"] = sp.ped.radius;
        p["type"] = to_string(sp.ped.ped_type);
        p["state"] = to_string(sp.ped.state);
        p["desired_speed"] = sp.ped.desired_speed;
        p["goal"] = sp.ped.goal ? to_json(*sp.ped.goal) : json(nullptr);
        p["script"] = json::array();
        for (const auto& e : sp.script.entries) p["script"].push_back(to_json(e));
        peds.push_back(std::move(p));
    }

    json out;
    out["schema"] = kScenarioSchema;
    out["task"] = to_string(sc.task_kind);
    out["seed"] = sc.seed;
    out["map"] = std::move(map);
    out["robot"] = json{{"start", json::array({sc.robot_start.position.x,
                                               sc.robot_start.position.y,
                                               sc.robot_start.heading})},
                        {"radius", sc.robot_radius}};
    out["goal"] = to_json(sc.end_goal);
    out["pedestrians"] = std::move(peds);
    return out;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    using scenario_json::vec2_from;

    if (!j.contains("schema") || j.at("schema").get<int>() != kScenarioSchema)
        throw ValidationError("scenario: missing or unsupported schema version");

    Scenario sc;
    const auto kind = task_kind_from_string(j.at("task").get<std::string>());
    if (!kind) throw ValidationError("scenario: unknown task kind");
    sc.task_kind = *kind;
    sc.seed = j.at("seed").get<std::uint64_t>();

    const auto& map = j.at("map");
    const auto& b = map.at("bounds");
    if (!b.is_array() || b.size() != 4)
        throw ValidationError("scenario: bounds expects [xmin, ymin, xmax, ymax]");
    sc.map.bounds = Rect{{b[0].get<double>(), b[1].get<double>()},
                         {b[2].get<double>(), b[3].get<double>()}};
    for (const auto& w : map.value("walls", nlohmann::json::array())) {
        if (!w.is_array() || w.size() != 4)
            throw ValidationError("scenario: wall expects [x1, y1, x2, y2]");
        sc.map.walls.push_back({{w[0].get<double>(), w[1].get<double>()},
                                {w[2].get<double>(), w[3].get<double>()}});
    }
    for (const auto& c : map.value("circles", nlohmann::json::array())) {
        if (!c.is_array() || c.size() != 3)
            throw ValidationError("scenario: circle expects [cx, cy, radius]");
        sc.map.static_obstacles.push_back(
            {{c[0].get<double>(), c[1].get<double>()}, c[2].get<double>()});
    }

    const auto& robot = j.at("robot");
    const auto& start = robot.at("start");
    if (!start.is_array() || start.size() != 3)
        throw ValidationError("scenario: robot start expects [x, y, heading]");
    sc.robot_start.position = {start[0].get<double>(), start[1].get<double>()};
    sc.robot_start.heading = start[2].get<double>();
    sc.robot_radius = robot.value("radius", 0.15);
    sc.end_goal = vec2_from(j.at("goal"), "goal");

    for (const auto& p : j.value("pedestrians", nlohmann::json::array())) {
        ScriptedPedestrian sp;
        sp.ped.id = p.at("id").get<int>();
        sp.ped.position = vec2_from(p.at("pos"), "pedestrian position");
        if (p.contains("vel")) sp.ped.velocity = vec2_from(p.at("vel"), "pedestrian velocity");
        sp.ped.radius = p.value("radius", 0.3);
        const auto type = ped_type_from_string(p.value("type", "adult"));
        if (!type) throw ValidationError("scenario: unknown pedestrian type");
        sp.ped.ped_type = *type;
        const auto state = social_state_from_string(p.value("state", "walking"));
        if (!state) throw ValidationError("scenario: unknown social state");
        sp.ped.state = *state;
        sp.ped.desired_speed = p.value("desired_speed", 0.0);
        if (p.contains("goal") && !p.at("goal").is_null())
            sp.ped.goal = vec2_from(p.at("goal"), "pedestrian goal");
        for (const auto& e : p.value("script", nlohmann::json::array()))
            sp.script.entries.push_back(scenario_json::script_entry_from(e));
        sc.pedestrians.push_back(std::move(sp));
    }

    sc.validate();
    return sc;
}

inline std::string scenario_to_string(const Scenario& sc) {
    return scenario_to_json(sc).dump(2) + "\n";
}

inline Scenario scenario_from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario: invalid JSON: ") + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario: malformed document: ") + e.what());
    }
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << scenario_to_string(sc);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_string(buf.str());
}

} // namespace crowdnav
