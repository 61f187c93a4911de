/// @file geometry.hpp Points and vectors on the unwrapped plane covering the 2-torus.

#ifndef DRIFTER_UQ_GEOMETRY_HPP
#define DRIFTER_UQ_GEOMETRY_HPP

#include <cmath>
#include <numbers>

namespace drifter_uq
{

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// A displacement or velocity in the plane.
struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o)
    {
        x += o.x;
        y += o.y;
        return *this;
    }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// A position. Trajectories keep positions unwrapped; periodic fields reduce them modulo 1 on evaluation.
struct Point2
{
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point2 operator+(const Point2& p, const Vec2& v) { return {p.x + v.x, p.y + v.y}; }
    friend constexpr Vec2 operator-(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

/// Reduce a coordinate into [0, 1).
inline double wrap_unit(double v)
{
    double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
}

inline Point2 wrap(const Point2& p) { return {wrap_unit(p.x), wrap_unit(p.y)}; }

/// Shortest displacement between two points on the unit torus.
inline Vec2 torus_delta(const Point2& a, const Point2& b)
{
    Vec2 d = a - b;
    return {d.x - std::round(d.x), d.y - std::round(d.y)};
}

inline double torus_distance(const Point2& a, const Point2& b) { return norm(torus_delta(a, b)); }

} // namespace drifter_uq

#endif
