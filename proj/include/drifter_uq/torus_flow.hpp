/// @file torus_flow.hpp Analytic meandering-jet flow on the 2-torus and its stagnation-point geometry.
///
/// The truth flow is given by the stream function
///
///     psi(x, y, t) = -c y + A sin(2 pi k x) sin(2 pi y) + eps sin(2 pi x - pi t) sin(4 pi y)
///
/// with velocity v = perp-grad psi = (-d psi/dy, d psi/dx). The velocity is periodic in x and y even though
/// psi itself carries the linear jet term -c y.

#ifndef DRIFTER_UQ_TORUS_FLOW_HPP
#define DRIFTER_UQ_TORUS_FLOW_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"

namespace drifter_uq
{

struct FlowParams
{
    double c = std::numbers::pi * 0.5; ///< jet speed
    double A = 0.5;                    ///< eddy amplitude
    int k = 1;                         ///< zonal wavenumber
    double eps = 0.0;                  ///< strength of the travelling perturbation

    void validate() const
    {
        if (!(A > 0.0) || k < 1 || !(eps >= 0.0) || !std::isfinite(c))
            throw std::invalid_argument("FlowParams: require A > 0, k >= 1, eps >= 0");
    }

    /// Same flow without the time-dependent perturbation.
    FlowParams steady() const
    {
        FlowParams p = *this;
        p.eps = 0.0;
        return p;
    }
};

/// Velocity Jacobian [[du/dx, du/dy], [dv/dx, dv/dy]].
using Jacobian2 = std::array<std::array<double, 2>, 2>;

enum class StagnationKind
{
    elliptic,
    hyperbolic
};

struct StagnationPoint
{
    Point2 location;
    StagnationKind kind;
};

namespace detail
{
// Second derivatives of psi; shared by the Jacobian and the stagnation classifier.
struct Hessian
{
    double xx, yy, xy;
};

inline Hessian stream_hessian(const Point2& p, double t, const FlowParams& f)
{
    const double kx = two_pi * f.k * p.x;
    const double wy = two_pi * p.y;
    const double phase = two_pi * p.x - std::numbers::pi * t;
    const double tk = two_pi * f.k;
    const double s = f.A * std::sin(kx) * std::sin(wy);
    const double s1 = f.eps * std::sin(phase) * std::sin(2.0 * wy);
    return {
        -tk * tk * s - two_pi * two_pi * s1,
        -two_pi * two_pi * s - 4.0 * two_pi * two_pi * s1,
        tk * two_pi * f.A * std::cos(kx) * std::cos(wy) + 2.0 * two_pi * two_pi * f.eps * std::cos(phase) * std::cos(2.0 * wy),
    };
}
} // namespace detail

inline double stream_function(const Point2& p, double t, const FlowParams& f)
{
    return -f.c * p.y + f.A * std::sin(two_pi * f.k * p.x) * std::sin(two_pi * p.y)
           + f.eps * std::sin(two_pi * p.x - std::numbers::pi * t) * std::sin(2.0 * two_pi * p.y);
}

/// perp-grad of the perturbation psi_1(x, y, t) = sin(2 pi x - pi t) sin(4 pi y), without the eps factor.
inline Vec2 perturbation_velocity(const Point2& p, double t)
{
    const double phase = two_pi * p.x - std::numbers::pi * t;
    const double wy = 2.0 * two_pi * p.y;
    return {-2.0 * two_pi * std::sin(phase) * std::cos(wy), two_pi * std::cos(phase) * std::sin(wy)};
}

inline Vec2 velocity(const Point2& p, double t, const FlowParams& f)
{
    const double kx = two_pi * f.k * p.x;
    const double wy = two_pi * p.y;
    Vec2 v{f.c - two_pi * f.A * std::sin(kx) * std::cos(wy), two_pi * f.k * f.A * std::cos(kx) * std::sin(wy)};
    if (f.eps != 0.0)
        v += f.eps * perturbation_velocity(p, t);
    return v;
}

inline Jacobian2 velocity_jacobian(const Point2& p, double t, const FlowParams& f)
{
    const auto h = detail::stream_hessian(p, t, f);
    return {{{-h.xy, -h.yy}, {h.xx, h.xy}}};
}

/// Zeros of the instantaneous velocity in [0,1)^2, located by Newton iteration from a 64x64 seed grid.
///
/// Seeds that fail to converge are dropped. Points closer than 1e-6 on the torus are merged. The velocity
/// Jacobian is trace-free, so a positive determinant means purely imaginary eigenvalues (elliptic) and a
/// negative one a real saddle pair (hyperbolic).
inline std::vector<StagnationPoint> find_stagnation_points(const FlowParams& f, double t = 0.0)
{
    constexpr int seeds_per_axis = 64;
    constexpr int max_iterations = 60;
    constexpr double dedup_radius = 1e-6;

    std::vector<StagnationPoint> found;
    for (int i = 0; i < seeds_per_axis; ++i)
    {
        for (int j = 0; j < seeds_per_axis; ++j)
        {
            Point2 p{(i + 0.5) / seeds_per_axis, (j + 0.5) / seeds_per_axis};
            bool converged = false;
            for (int it = 0; it < max_iterations; ++it)
            {
                const Vec2 v = velocity(p, t, f);
                if (norm(v) < 1e-14)
                {
                    converged = true;
                    break;
                }
                const auto J = velocity_jacobian(p, t, f);
                const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                if (std::abs(det) < 1e-300)
                    break;
                const Vec2 step{(J[1][1] * v.x - J[0][1] * v.y) / det, (-J[1][0] * v.x + J[0][0] * v.y) / det};
                p = Point2{p.x - step.x, p.y - step.y};
                if (!std::isfinite(p.x) || !std::isfinite(p.y))
                    break;
                if (norm(step) < 1e-15)
                {
                    converged = norm(velocity(p, t, f)) < 1e-10;
                    break;
                }
            }
            if (!converged || norm(velocity(p, t, f)) >= 1e-10)
                continue;
            p = wrap(p);
            bool duplicate = false;
            for (const auto& s : found)
                if (torus_distance(s.location, p) < dedup_radius)
                {
                    duplicate = true;
                    break;
                }
            if (duplicate)
                continue;
            const auto h = detail::stream_hessian(p, t, f);
            const double det = h.xx * h.yy - h.xy * h.xy;
            found.push_back({p, det > 0.0 ? StagnationKind::elliptic : StagnationKind::hyperbolic});
        }
    }
    return found;
}

/// The dividing streamline of the recirculation regime in the lower-left of the unit cell.
struct Separatrix
{
    double level;           ///< psi on the separatrix
    Point2 center;          ///< elliptic point inside the eddy
    Point2 saddle;          ///< hyperbolic point on the boundary (image nearest to center)
    double eddy_side;       ///< +1 if psi > level inside the eddy, -1 otherwise
};

/// Locate the eddy around the elliptic point nearest the origin corner and the saddle closest to it.
///
/// psi is not periodic in y, so the saddle is evaluated at the image closest to the eddy center.
inline Separatrix find_separatrix(const FlowParams& f)
{
    if (f.eps != 0.0)
        throw std::invalid_argument("find_separatrix: defined for the steady flow only");
    const auto points = find_stagnation_points(f, 0.0);

    std::optional<Point2> center;
    for (const auto& s : points)
        if (s.kind == StagnationKind::elliptic
            && (!center || s.location.x + s.location.y < center->x + center->y))
            center = s.location;
    if (!center)
        throw std::runtime_error("find_separatrix: flow has no elliptic stagnation point");

    std::optional<Point2> saddle;
    double best = 0.0;
    for (const auto& s : points)
    {
        if (s.kind != StagnationKind::hyperbolic)
            continue;
        const double d = torus_distance(s.location, *center);
        if (!saddle || d < best)
        {
            saddle = s.location;
            best = d;
        }
    }
    if (!saddle)
        throw std::runtime_error("find_separatrix: flow has no hyperbolic stagnation point");

    const Point2 image{saddle->x + std::round(center->x - saddle->x), saddle->y + std::round(center->y - saddle->y)};
    const double level = stream_function(image, 0.0, f);
    const double inside = stream_function(*center, 0.0, f);
    return {level, *center, image, inside > level ? 1.0 : -1.0};
}

inline double separatrix_level(const FlowParams& f) { return find_separatrix(f).level; }

} // namespace drifter_uq

#endif
