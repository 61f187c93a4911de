/// @file drifter.hpp Controlled drifter advection: control laws, fixed-step RK4, the two-phase release protocol
/// and eddy-escape detection.

#ifndef DRIFTER_UQ_DRIFTER_HPP
#define DRIFTER_UQ_DRIFTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "spectral_prior.hpp"
#include "torus_flow.hpp"

namespace drifter_uq
{

enum class ControlKind
{
    none,
    zonal,
    bidirectional,
    grad_mean
};

inline std::string to_string(ControlKind k)
{
    switch (k)
    {
    case ControlKind::none: return "none";
    case ControlKind::zonal: return "zonal";
    case ControlKind::bidirectional: return "bidirectional";
    case ControlKind::grad_mean: return "grad_mean";
    }
    return "none";
}

inline ControlKind control_kind_from_string(const std::string& s)
{
    if (s == "none") return ControlKind::none;
    if (s == "zonal") return ControlKind::zonal;
    if (s == "bidirectional") return ControlKind::bidirectional;
    if (s == "grad_mean") return ControlKind::grad_mean;
    throw std::invalid_argument("unknown control kind: " + s);
}

/// Which forcing the drifter applies once the control is switched on, and how strongly.
class ControlSpec
{
public:
    ControlSpec() = default;

    static ControlSpec none() { return {}; }
    static ControlSpec zonal(double zeta) { return {ControlKind::zonal, zeta}; }
    static ControlSpec bidirectional(double zeta) { return {ControlKind::bidirectional, zeta}; }

    /// f(x) = -zeta grad psi_mean(x) for a (posterior mean) stream function.
    static ControlSpec grad_mean(double zeta, SpectralField field)
    {
        ControlSpec c{ControlKind::grad_mean, zeta};
        c.field_ = std::make_shared<const SpectralField>(std::move(field));
        c.evaluator_ = std::make_shared<const SpectralEvaluator>(*c.field_);
        return c;
    }

    static ControlSpec make(ControlKind kind, double zeta)
    {
        if (kind == ControlKind::grad_mean)
            throw std::invalid_argument("ControlSpec: grad_mean control requires a field");
        return {kind, zeta};
    }

    ControlKind kind() const { return kind_; }
    double zeta() const { return zeta_; }
    const SpectralField* field() const { return field_.get(); }

    Vec2 operator()(const Point2& p) const
    {
        if (zeta_ == 0.0)
            return {};
        switch (kind_)
        {
        case ControlKind::none: return {};
        case ControlKind::zonal: return {zeta_, 0.0};
        case ControlKind::bidirectional: return {zeta_, zeta_};
        case ControlKind::grad_mean: return -zeta_ * evaluator_->grad_stream(p);
        }
        return {};
    }

private:
    ControlSpec(ControlKind kind, double zeta) : kind_(kind), zeta_(zeta)
    {
        if (!(zeta >= 0.0) || !std::isfinite(zeta))
            throw std::invalid_argument("ControlSpec: zeta must be finite and >= 0");
    }

    ControlKind kind_ = ControlKind::none;
    double zeta_ = 0.0;
    std::shared_ptr<const SpectralField> field_;
    std::shared_ptr<const SpectralEvaluator> evaluator_;
};

inline Vec2 control_eval(const ControlSpec& spec, const Point2& p) { return spec(p); }

/// Observation timing. The control switches on at t_half = (K/2) dt_obs.
struct Schedule
{
    int K = 50;
    double dt_obs = 0.2;
    double dt_int = 5e-3;

    /// Integrator steps per observation interval.
    long substeps() const { return std::lround(dt_obs / dt_int); }
    double t_half() const { return (K / 2) * dt_obs; }
    double t_end() const { return K * dt_obs; }

    void validate() const
    {
        if (K < 2 || K % 2 != 0)
            throw std::invalid_argument("Schedule: K must be even and positive");
        if (!(dt_obs > 0.0) || !(dt_int > 0.0))
            throw std::invalid_argument("Schedule: time steps must be positive");
        if (substeps() < 1 || std::abs(substeps() * dt_int - dt_obs) > 1e-12 * dt_obs)
            throw std::invalid_argument("Schedule: dt_int must divide dt_obs");
    }
};

/// Drifter positions (unwrapped) at equally spaced times, starting with the release point.
struct Trajectory
{
    std::vector<double> times;
    std::vector<Point2> positions;

    std::size_t size() const { return times.size(); }
};

namespace detail
{
// RK4 from global step index i0 to i1 (time = i * dt), recording every `stride` steps including i0.
template <class Rhs>
void rk4_steps(Rhs&& rhs, Point2 x, long i0, long i1, long stride, double dt, Trajectory& out)
{
    out.times.push_back(static_cast<double>(i0) * dt);
    out.positions.push_back(x);
    for (long i = i0; i < i1; ++i)
    {
        const double t = static_cast<double>(i) * dt;
        const double th = t + 0.5 * dt;
        const double tn = static_cast<double>(i + 1) * dt;
        const Vec2 k1 = rhs(x, t);
        const Vec2 k2 = rhs(x + (0.5 * dt) * k1, th);
        const Vec2 k3 = rhs(x + (0.5 * dt) * k2, th);
        const Vec2 k4 = rhs(x + dt * k3, tn);
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((i + 1 - i0) % stride == 0)
        {
            out.times.push_back(tn);
            out.positions.push_back(x);
        }
    }
}

inline long step_index(double t, double dt)
{
    const long i = std::lround(t / dt);
    if (std::abs(static_cast<double>(i) * dt - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw std::invalid_argument("integrate: time is not a multiple of the integrator step");
    return i;
}
} // namespace detail

/// Integrate dx/dt = flow(x, t) + control(x) with classical RK4 on [t0, t1].
///
/// `flow` is any callable (Point2, double) -> Vec2. Positions are recorded at t0 and every dt_obs after it.
template <class Flow>
Trajectory integrate(const Flow& flow, const ControlSpec& spec, const Point2& x0, double t0, double t1,
                     const Schedule& sched)
{
    if (!(t1 > t0))
        throw std::invalid_argument("integrate: require t1 > t0");
    sched.validate();
    const long i0 = detail::step_index(t0, sched.dt_int);
    const long i1 = detail::step_index(t1, sched.dt_int);
    const long stride = sched.substeps();
    if ((i1 - i0) % stride != 0)
        throw std::invalid_argument("integrate: interval is not a multiple of dt_obs");
    Trajectory out;
    out.times.reserve(static_cast<std::size_t>((i1 - i0) / stride + 1));
    out.positions.reserve(out.times.capacity());
    auto rhs = [&](const Point2& p, double t) { return flow(p, t) + spec(p); };
    detail::rk4_steps(rhs, x0, i0, i1, stride, sched.dt_int, out);
    return out;
}

/// Uncontrolled on (0, t_half], controlled by `spec` on (t_half, t_end]. Returns K + 1 samples (t = 0 first).
template <class Flow>
Trajectory simulate_two_phase(const Flow& flow, const ControlSpec& spec, const Point2& x0, const Schedule& sched)
{
    sched.validate();
    Trajectory first = integrate(flow, ControlSpec::none(), x0, 0.0, sched.t_half(), sched);
    Trajectory second = integrate(flow, spec, first.positions.back(), sched.t_half(), sched.t_end(), sched);
    first.times.insert(first.times.end(), second.times.begin() + 1, second.times.end());
    first.positions.insert(first.positions.end(), second.positions.begin() + 1, second.positions.end());
    return first;
}

/// First sample time at which the drifter is on or beyond the separatrix, judged with the steady stream
/// function at the wrapped position. A release point outside the eddy gives the first sample time.
inline std::optional<double> escape_time(const Trajectory& traj, const Separatrix& sep, const FlowParams& params)
{
    const FlowParams steady = params.steady();
    for (std::size_t i = 0; i < traj.size(); ++i)
    {
        const double psi = stream_function(wrap(traj.positions[i]), 0.0, steady);
        if (sep.eddy_side * (psi - sep.level) <= 0.0)
            return traj.times[i];
    }
    return std::nullopt;
}

inline std::optional<double> escape_time(const Trajectory& traj, const FlowParams& params)
{
    return escape_time(traj, find_separatrix(params.steady()), params);
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t,x,y\n";
    char buf[96];
    for (std::size_t i = 0; i < traj.size(); ++i)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", traj.times[i], traj.positions[i].x,
                      traj.positions[i].y);
        os << buf;
    }
}

} // namespace drifter_uq

#endif
