#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <drifter_uq/drifter.hpp>

using namespace drifter_uq;

namespace
{
auto still = [](const Point2&, double) { return Vec2{}; };

auto truth_flow(const FlowParams& f)
{
    return [f](const Point2& p, double t) { return velocity(p, t, f); };
}

Schedule schedule(int K, double dt_obs, double dt_int)
{
    Schedule s;
    s.K = K;
    s.dt_obs = dt_obs;
    s.dt_int = dt_int;
    return s;
}

// Rigid rotation about (0.5, 0.5) with period 1.
Vec2 rotation(const Point2& p, double)
{
    return {-two_pi * (p.y - 0.5), two_pi * (p.x - 0.5)};
}

double orbit_error(double dt)
{
    const Point2 x0{0.8, 0.5};
    const auto traj = integrate(rotation, ControlSpec::none(), x0, 0.0, 1.0, schedule(2, 0.5, dt));
    return norm(traj.positions.back() - x0);
}
} // namespace

TEST(Drifter, ControlLaws)
{
    const Point2 p{0.3, 0.7};
    EXPECT_EQ(control_eval(ControlSpec::none(), p), Vec2{});
    EXPECT_EQ(control_eval(ControlSpec::zonal(1.5), p), (Vec2{1.5, 0.0}));
    EXPECT_EQ(control_eval(ControlSpec::bidirectional(0.4), p), (Vec2{0.4, 0.4}));
    EXPECT_EQ(control_eval(ControlSpec::zonal(0.0), p), Vec2{});
    EXPECT_THROW(ControlSpec::zonal(-1.0), std::invalid_argument);
    EXPECT_THROW(ControlSpec::make(ControlKind::grad_mean, 1.0), std::invalid_argument);
    EXPECT_EQ(control_kind_from_string(to_string(ControlKind::bidirectional)), ControlKind::bidirectional);
    EXPECT_THROW(control_kind_from_string("sideways"), std::invalid_argument);
}

TEST(Drifter, GradMeanControlIsDescentAlongStreamFunction)
{
    SpectralField f(4);
    f.set_mode(1, 0, {0.0, -0.5}); // psi = sin(2 pi x)
    const auto spec = ControlSpec::grad_mean(0.5, f);
    const Vec2 c = control_eval(spec, {0.0, 0.3});
    EXPECT_NEAR(c.x, -0.5 * two_pi, 1e-13);
    EXPECT_NEAR(c.y, 0.0, 1e-13);
    EXPECT_EQ(control_eval(ControlSpec::grad_mean(0.0, f), {0.0, 0.3}), Vec2{});
    ASSERT_NE(spec.field(), nullptr);
    EXPECT_TRUE(*spec.field() == f);
}

TEST(Drifter, ConstantControlInStillWaterIsExact)
{
    const auto s = schedule(10, 0.25, 0.0625);
    const auto traj = integrate(still, ControlSpec::zonal(2.0), {0.1, 0.2}, 0.0, 2.5, s);
    ASSERT_EQ(traj.size(), 11u);
    for (std::size_t k = 0; k < traj.size(); ++k)
    {
        EXPECT_EQ(traj.times[k], 0.25 * k);
        EXPECT_NEAR(traj.positions[k].x, 0.1 + 2.0 * traj.times[k], 1e-14);
        EXPECT_EQ(traj.positions[k].y, 0.2);
    }
}

TEST(Drifter, CircularOrbitConvergesAtFourthOrder)
{
    const double e1 = orbit_error(1.0 / 100);
    const double e2 = orbit_error(1.0 / 200);
    const double e3 = orbit_error(1.0 / 400);
    const double slope1 = std::log2(e1 / e2);
    const double slope2 = std::log2(e2 / e3);
    EXPECT_GT(slope1, 3.8);
    EXPECT_LT(slope1, 4.2);
    EXPECT_GT(slope2, 3.8);
    EXPECT_LT(slope2, 4.2);
}

TEST(Drifter, StreamFunctionConservedInSteadyFlow)
{
    const FlowParams f;
    const auto traj = integrate(truth_flow(f), ControlSpec::none(), {0.3, 0.2}, 0.0, 10.0, schedule(50, 0.2, 1e-3));
    const double psi0 = stream_function(traj.positions.front(), 0.0, f);
    for (const auto& p : traj.positions)
        EXPECT_NEAR(stream_function(p, 0.0, f), psi0, 1e-6);
}

TEST(Drifter, IntegratorRecordsAtObservationTimes)
{
    const auto s = schedule(4, 0.2, 0.01);
    const auto traj = integrate(still, ControlSpec::none(), {0.5, 0.5}, 0.4, 1.0, s);
    ASSERT_EQ(traj.size(), 4u);
    EXPECT_NEAR(traj.times.front(), 0.4, 1e-15);
    EXPECT_NEAR(traj.times.back(), 1.0, 1e-15);
    EXPECT_THROW(integrate(still, ControlSpec::none(), {0, 0}, 0.0, 0.3, s), std::invalid_argument);
    EXPECT_THROW(integrate(still, ControlSpec::none(), {0, 0}, 1.0, 1.0, s), std::invalid_argument);
    EXPECT_THROW(schedule(3, 0.2, 0.01).validate(), std::invalid_argument);
    EXPECT_THROW(schedule(4, 0.2, 0.03).validate(), std::invalid_argument);
}

TEST(Drifter, FirstHalfIndependentOfControl)
{
    const FlowParams f;
    const Schedule s;
    const auto a = simulate_two_phase(truth_flow(f), ControlSpec::none(), {0.3, 0.2}, s);
    const auto b = simulate_two_phase(truth_flow(f), ControlSpec::bidirectional(2.0), {0.3, 0.2}, s);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(s.K + 1));
    ASSERT_EQ(b.size(), a.size());
    for (int k = 0; k <= s.K / 2; ++k)
    {
        EXPECT_EQ(a.positions[k], b.positions[k]);
        EXPECT_EQ(a.times[k], b.times[k]);
    }
    EXPECT_NE(a.positions.back(), b.positions.back());
}

TEST(Drifter, TwoPhaseSpliceMatchesSingleIntegration)
{
    const FlowParams f;
    const Schedule s;
    const auto two = simulate_two_phase(truth_flow(f), ControlSpec::none(), {0.3, 0.2}, s);
    const auto one = integrate(truth_flow(f), ControlSpec::none(), {0.3, 0.2}, 0.0, s.t_end(), s);
    ASSERT_EQ(one.size(), two.size());
    for (std::size_t k = 0; k < one.size(); ++k)
        EXPECT_EQ(one.positions[k], two.positions[k]);
}

TEST(Drifter, SuperpositionOfUniformDrift)
{
    // Uniform drift plus constant control: x(t) = x0 + (u + zeta) t.
    const auto s = schedule(8, 0.125, 0.015625);
    auto drift = [](const Point2&, double) { return Vec2{0.5, -0.25}; };
    const auto traj = integrate(drift, ControlSpec::bidirectional(0.25), {0.0, 0.0}, 0.0, 1.0, s);
    for (std::size_t k = 0; k < traj.size(); ++k)
    {
        EXPECT_NEAR(traj.positions[k].x, 0.75 * traj.times[k], 1e-14);
        EXPECT_NEAR(traj.positions[k].y, 0.0, 1e-15);
    }
}

TEST(Drifter, UncontrolledDrifterStaysInEddy)
{
    const FlowParams f;
    const auto traj = simulate_two_phase(truth_flow(f), ControlSpec::none(), {0.3, 0.2}, Schedule{});
    EXPECT_FALSE(escape_time(traj, f).has_value());
}

TEST(Drifter, StrongZonalControlEscapes)
{
    const FlowParams f;
    const Schedule s;
    const auto traj = simulate_two_phase(truth_flow(f), ControlSpec::zonal(3.0), {0.3, 0.2}, s);
    const auto t = escape_time(traj, f);
    ASSERT_TRUE(t.has_value());
    EXPECT_GT(*t, s.t_half());
}

TEST(Drifter, ReleaseOutsideEddyEscapesImmediately)
{
    const FlowParams f;
    const auto traj = simulate_two_phase(truth_flow(f), ControlSpec::none(), {0.5, 0.5}, Schedule{});
    const auto t = escape_time(traj, f);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(*t, 0.0);
}

TEST(Drifter, EscapeIsJudgedOnWrappedPositions)
{
    const FlowParams f;
    Trajectory traj;
    traj.times = {0.0, 1.0};
    traj.positions = {{0.3, 0.2}, {3.3, -1.8}}; // same point on the torus
    EXPECT_FALSE(escape_time(traj, f).has_value());
    traj.positions.push_back({0.3, 0.6});
    traj.times.push_back(2.0);
    EXPECT_EQ(escape_time(traj, f).value(), 2.0);
}

TEST(Drifter, TrajectoryCsv)
{
    Trajectory traj;
    traj.times = {0.0, 0.2};
    traj.positions = {{0.1, 0.2}, {1.0 / 3.0, 0.5}};
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream is(os.str());
    std::string header, row0, row1;
    std::getline(is, header);
    std::getline(is, row0);
    std::getline(is, row1);
    EXPECT_EQ(header, "t,x,y");
    EXPECT_EQ(row0, "0,0.10000000000000001,0.20000000000000001");
    double t, x, y;
    char c1, c2;
    std::istringstream(row1) >> t >> c1 >> x >> c2 >> y;
    EXPECT_EQ(x, 1.0 / 3.0);
}
