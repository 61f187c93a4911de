#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <drifter_uq/posterior_analysis.hpp>

#include "oracles.hpp"

using namespace drifter_uq;

namespace
{
PriorParams small_prior()
{
    PriorParams p;
    p.N = 3;
    p.tau = 5.0;
    return p;
}

std::vector<CoordVector> prior_draws(const PriorParams& p, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<CoordVector> out;
    for (int i = 0; i < n; ++i)
        out.push_back(sample_prior_coords(rng, p));
    return out;
}
} // namespace

TEST(PosteriorAnalysis, GridNodesAreCellCentred)
{
    const GridSpec g;
    EXPECT_EQ(g.node(0, 0), (Point2{0.5 / 64, 0.25 / 32}));
    EXPECT_DOUBLE_EQ(g.node(63, 31).x, 1.0 - 0.5 / 64);
    EXPECT_DOUBLE_EQ(g.node(63, 31).y, 0.5 - 0.25 / 32);
}

TEST(PosteriorAnalysis, IdenticalSamplesHaveZeroVariance)
{
    const auto p = small_prior();
    const auto u = prior_draws(p, 1, 3).front();
    const auto g = variance_grid(std::vector<CoordVector>(5, u), p);
    for (double v : g.values)
        EXPECT_EQ(v, 0.0);
    EXPECT_THROW(variance_grid(std::vector<CoordVector>(1, u), p), std::invalid_argument);
}

TEST(PosteriorAnalysis, MeanFlowShiftGivesUniformVariance)
{
    const auto p = small_prior();
    auto a = prior_draws(p, 1, 4).front();
    auto b = a;
    b[b.size() - 2] += 0.5; // whitened mean_u, scaled by mean_flow_std = 1
    const auto g = variance_grid({a, b}, p, GridSpec{8, 4});
    for (double v : g.values)
        EXPECT_NEAR(v, 0.125, 1e-13);
    const auto n = norms(g);
    EXPECT_NEAR(n.max, 0.125, 1e-13);
    EXPECT_NEAR(n.min, 0.125, 1e-13);
    EXPECT_NEAR(n.l1, 0.125 * 0.5, 1e-13);
    EXPECT_NEAR(n.l2, 0.125 * std::sqrt(0.5), 1e-13);
}

TEST(PosteriorAnalysis, WelfordMatchesTwoPassVariance)
{
    const auto p = small_prior();
    const auto samples = prior_draws(p, 50, 5);
    const GridSpec grid{6, 5};
    const auto g = variance_grid(samples, p, grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
        {
            std::vector<double> u;
            for (const auto& s : samples)
                u.push_back(eval_velocity(to_field(s, p), grid.node(i, j)).x);
            double m = 0.0;
            for (double x : u)
                m += x / u.size();
            double v = 0.0;
            for (double x : u)
                v += (x - m) * (x - m) / (u.size() - 1.0);
            EXPECT_NEAR(g.at(i, j), v, 1e-10 * v);
        }
}

TEST(PosteriorAnalysis, PriorDrawsReproducePointwisePriorVariance)
{
    const auto p = small_prior();
    const auto g = variance_grid(prior_draws(p, 20000, 6), p, GridSpec{4, 4});
    const double expected = oracle::prior_u_variance(p);
    for (double v : g.values)
        EXPECT_NEAR(v / expected, 1.0, 0.05);
}

TEST(PosteriorAnalysis, NormsOfKnownGrid)
{
    VarianceGrid g{GridSpec{2, 2, 0.0, 1.0, 0.0, 1.0}, {1.0, 2.0, 3.0, 4.0}};
    const auto n = norms(g);
    EXPECT_EQ(n.max, 4.0);
    EXPECT_EQ(n.min, 1.0);
    EXPECT_DOUBLE_EQ(n.l1, 2.5);
    EXPECT_DOUBLE_EQ(n.l2, std::sqrt(7.5));
}

TEST(PosteriorAnalysis, PosteriorMeanFieldAveragesCoordinates)
{
    const auto p = small_prior();
    const auto samples = prior_draws(p, 10, 7);
    const auto mean = posterior_mean_field(samples, p);
    const auto coords = to_coords(mean, p);
    for (std::size_t i = 0; i < coords.size(); ++i)
    {
        double m = 0.0;
        for (const auto& s : samples)
            m += s[i];
        EXPECT_NEAR(coords[i], m / 10.0, 1e-14);
    }
    EXPECT_THROW(posterior_mean_field(std::vector<CoordVector>{}, p), std::invalid_argument);
}

TEST(PosteriorAnalysis, MeanFlowMagnitudeMatchesBruteForce)
{
    const FlowParams f;
    const Schedule s;
    auto flow = [&](const Point2& p, double t) { return velocity(p, t, f); };
    const auto traj = simulate_two_phase(flow, ControlSpec::zonal(1.0), {0.3, 0.2}, s);
    double sum = 0.0;
    for (int k = s.K / 2 + 1; k <= s.K; ++k)
    {
        const Vec2 v = velocity(traj.positions[k], traj.times[k], f);
        sum += std::hypot(v.x, v.y);
    }
    EXPECT_NEAR(mean_flow_magnitude(flow, traj, s), sum / (s.K / 2), 1e-12);

    auto uniform = [](const Point2&, double) { return Vec2{3.0, 4.0}; };
    EXPECT_DOUBLE_EQ(mean_flow_magnitude(uniform, traj, s), 5.0);

    Trajectory short_traj;
    short_traj.times = {0.0};
    short_traj.positions = {{0.0, 0.0}};
    EXPECT_THROW(mean_flow_magnitude(flow, short_traj, s), std::invalid_argument);
}

TEST(PosteriorAnalysis, CsvFormats)
{
    VarianceGrid g{GridSpec{2, 1, 0.0, 1.0, 0.0, 0.5}, {0.5, 0.25}};
    std::ostringstream vs;
    write_variance_csv(vs, g);
    EXPECT_EQ(vs.str(), "x,y,var_u\n0.25,0.25,0.5\n0.75,0.25,0.25\n");

    std::ostringstream cs;
    write_curve_csv(cs, {{0.0, 1.0, 0.5, 0.25, false, 2.0}, {0.25, 0.5, 0.125, 0.0625, true, 1.5}});
    EXPECT_EQ(cs.str(), "zeta,max,l1,l2,escaped,mean_flow_mag\n0,1,0.5,0.25,false,2\n0.25,0.5,0.125,0.0625,true,1.5\n");
}
