#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace crowdnav {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }

    // Unit vector; zero-length input maps to the fixed fallback (1,0).
    Vec2 normalized() const {
        const double n = norm();
        if (n <= 0.0) return {1.0, 0.0};
        return {x / n, y / n};
    }

    Vec2 rotated(double angle) const {
        const double c = std::cos(angle), s = std::sin(angle);
        return {c * x - s * y, s * x + c * y};
    }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return (b - a).norm(); }
};

struct Circle {
    Vec2 center;
    double radius = 0.0;
};

// Axis-aligned rectangle.
struct Rect {
    Vec2 min;
    Vec2 max;

    bool contains(const Vec2& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
    Vec2 clamp(const Vec2& p) const {
        return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y)};
    }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
};

inline Vec2 closest_point_on_segment(const Vec2& p, const Segment& s) {
    const Vec2 ab = s.b - s.a;
    const double len_sq = ab.norm_sq();
    if (len_sq <= 0.0) return s.a;
    const double t = std::clamp((p - s.a).dot(ab) / len_sq, 0.0, 1.0);
    return s.a + ab * t;
}

inline double distance_to_segment(const Vec2& p, const Segment& s) {
    return (p - closest_point_on_segment(p, s)).norm();
}

// Signed-free distance from a point to a circle boundary; negative when inside.
inline double distance_to_circle(const Vec2& p, const Circle& c) {
    return (p - c.center).norm() - c.radius;
}

// Ray, parametrized as origin + t * dir with unit dir and t >= 0.
struct Ray {
    Vec2 origin;
    Vec2 dir;
};

// Smallest t > eps at which the ray crosses the segment, if any.
inline std::optional<double> ray_segment_intersection(const Ray& r, const Segment& s,
                                                      double eps = 1e-9) {
    const Vec2 v = s.b - s.a;
    const double denom = r.dir.cross(v);
    if (std::abs(denom) < 1e-15) return std::nullopt; // parallel
    const Vec2 w = s.a - r.origin;
    const double t = w.cross(v) / denom;
    const double u = w.cross(r.dir) / denom;
    if (t <= eps || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

// Smallest t > eps at which the ray crosses the circle, if any. A ray starting
// inside the circle reports the exit distance.
inline std::optional<double> ray_circle_intersection(const Ray& r, const Circle& c,
                                                     double eps = 1e-9) {
    const Vec2 oc = r.origin - c.center;
    const double b = oc.dot(r.dir);
    const double q = oc.norm_sq() - c.radius * c.radius;
    const double disc = b * b - q;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    const double t1 = -b - root;
    if (t1 > eps) return t1;
    const double t2 = -b + root;
    if (t2 > eps) return t2;
    return std::nullopt;
}

} // namespace crowdnav
