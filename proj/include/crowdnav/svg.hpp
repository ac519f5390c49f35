#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "crowdnav/geometry.hpp"
#include "crowdnav/world.hpp"

namespace crowdnav {

struct TrajectoryPath {
    std::string label;
    std::vector<Vec2> points;
    double t_start = 0.0;
    double t_end = 0.0;
};

namespace svg_detail {

inline std::string esc(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Mapper {
    Rect bounds;
    double scale;
    double pad;

    double x(double wx) const { return pad + (wx - bounds.min.x) * scale; }
    double y(double wy) const { return pad + (bounds.max.y - wy) * scale; }
};

inline std::string polyline(const Mapper& m, const std::vector<Vec2>& pts,
                            const std::string& cls, const std::string& color,
                            double width) {
    std::ostringstream out;
    out << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"" << num(width) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) out << ' ';
        out << num(m.x(pts[i].x)) << ',' << num(m.y(pts[i].y));
    }
    out << "\"/>\n";
    return out.str();
}

inline std::string time_label(const Mapper& m, const Vec2& at, double t,
                              const std::string& color) {
    char txt[32];
    std::snprintf(txt, sizeof(txt), "%.1fs", t);
    std::ostringstream out;
    out << "<text x=\"" << num(m.x(at.x) + 3.0) << "\" y=\""
        << num(m.y(at.y) - 3.0) << "\" font-size=\"10\" fill=\"" << color
        << "\">" << txt << "</text>\n";
    return out.str();
}

inline const char* ped_color(std::size_t i) {
    static const char* palette[] = {"#d62728", "#2ca02c", "#9467bd",
                                    "#8c564b", "#e377c2", "#ff7f0e",
                                    "#17becf", "#bcbd22"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

} // namespace svg_detail

// One robot polyline, one polyline per pedestrian with start/end time
// labels in seconds, obstacles, and the goal marker.
inline std::string trajectory_svg(const WorldMap& map, const Vec2* goal,
                                  const TrajectoryPath& robot,
                                  const std::vector<TrajectoryPath>& peds,
                                  double width_px = 640.0) {
    using namespace svg_detail;
    const double span_x = std::max(map.bounds.max.x - map.bounds.min.x, 1e-9);
    const double span_y = std::max(map.bounds.max.y - map.bounds.min.y, 1e-9);
    const double pad = 20.0;
    const double scale = (width_px - 2.0 * pad) / span_x;
    const double height_px = span_y * scale + 2.0 * pad;
    const Mapper m{map.bounds, scale, pad};

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << num(width_px) << "\" height=\"" << num(height_px)
        << "\" viewBox=\"0 0 " << num(width_px) << ' ' << num(height_px)
        << "\">\n";
    out << "<rect x=\"" << num(m.x(map.bounds.min.x)) << "\" y=\""
        << num(m.y(map.bounds.max.y)) << "\" width=\"" << num(span_x * scale)
        << "\" height=\"" << num(span_y * scale)
        << "\" fill=\"#fafafa\" stroke=\"#333333\"/>\n";

    for (const Segment& w : map.walls) {
        out << "<line class=\"wall\" x1=\"" << num(m.x(w.a.x)) << "\" y1=\""
            << num(m.y(w.a.y)) << "\" x2=\"" << num(m.x(w.b.x)) << "\" y2=\""
            << num(m.y(w.b.y)) << "\" stroke=\"#333333\" stroke-width=\"2\"/>\n";
    }
    for (const Circle& c : map.static_obstacles) {
        out << "<circle class=\"obstacle\" cx=\"" << num(m.x(c.center.x))
            << "\" cy=\"" << num(m.y(c.center.y)) << "\" r=\""
            << num(c.radius * scale)
            << "\" fill=\"#bbbbbb\" stroke=\"#666666\"/>\n";
    }
    if (goal != nullptr) {
        out << "<circle class=\"goal\" cx=\"" << num(m.x(goal->x))
            << "\" cy=\"" << num(m.y(goal->y))
            << "\" r=\"6\" fill=\"none\" stroke=\"#1a9850\" "
               "stroke-width=\"2\"/>\n";
    }

    for (std::size_t i = 0; i < peds.size(); ++i) {
        const TrajectoryPath& p = peds[i];
        if (p.points.empty()) continue;
        const char* color = ped_color(i);
        out << polyline(m, p.points, "pedestrian", color, 1.5);
        out << time_label(m, p.points.front(), p.t_start, color);
        out << time_label(m, p.points.back(), p.t_end, color);
        if (!p.label.empty()) {
            out << "<text x=\"" << num(m.x(p.points.front().x) + 3.0)
                << "\" y=\"" << num(m.y(p.points.front().y) + 12.0)
                << "\" font-size=\"10\" fill=\"" << color << "\">"
                << esc(p.label) << "</text>\n";
        }
    }

    if (!robot.points.empty()) {
        out << polyline(m, robot.points, "robot", "#1f77b4", 2.5);
        out << time_label(m, robot.points.front(), robot.t_start, "#1f77b4");
        out << time_label(m, robot.points.back(), robot.t_end, "#1f77b4");
    }

    out << "</svg>\n";
    return out.str();
}

} // namespace crowdnav
