#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <drifter_uq/observation.hpp>

using namespace drifter_uq;

namespace
{
ForwardConfig config(ControlSpec control = ControlSpec::none())
{
    ForwardConfig cfg;
    cfg.control = std::move(control);
    return cfg;
}
} // namespace

TEST(Observation, MixSeedSeparatesStreams)
{
    EXPECT_EQ(mix_seed(7, 1), mix_seed(7, 1));
    EXPECT_NE(mix_seed(7, 1), mix_seed(7, 2));
    EXPECT_NE(mix_seed(7, 1), mix_seed(8, 1));
}

TEST(Observation, MeanFlowOnlyGivesStraightLines)
{
    SpectralField v0(8);
    v0.mean_u = 0.7;
    const auto cfg = config();
    const auto y = forward(v0, cfg);
    ASSERT_EQ(y.size(), static_cast<std::size_t>(cfg.schedule.K));
    for (int k = 1; k <= cfg.schedule.K; ++k)
    {
        const double t = k * cfg.schedule.dt_obs;
        EXPECT_NEAR(y[k - 1].x, cfg.x0.x + 0.7 * t, 1e-12);
        EXPECT_EQ(y[k - 1].y, cfg.x0.y);
    }
    EXPECT_EQ(forward(v0, cfg, DataSpan::first_half).size(), static_cast<std::size_t>(cfg.schedule.K / 2));
}

TEST(Observation, ModelVelocityReducesToInitialFieldAtStartAndPeriod)
{
    std::mt19937_64 rng(1);
    PriorParams prior;
    prior.tau = 20.0;
    const auto v0 = sample_prior(rng, prior);
    const SpectralEvaluator eval(v0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i)
    {
        const Point2 p{u(rng), u(rng)};
        EXPECT_EQ(model_velocity(eval, p, 0.0, 0.3), eval.velocity(p));
        const Vec2 a = model_velocity(eval, p, 2.0, 0.3);
        EXPECT_NEAR(a.x, eval.velocity(p).x, 1e-12);
        EXPECT_NEAR(a.y, eval.velocity(p).y, 1e-12);
        EXPECT_EQ(model_velocity(eval, p, 0.7, 0.0), eval.velocity(p));
    }
}

TEST(Observation, ModelOfProjectedTruthIsTruthAtAllTimes)
{
    FlowParams flow;
    flow.eps = 0.2;
    const SpectralEvaluator eval(project_truth(flow, PriorParams{}));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i)
    {
        const Point2 p{u(rng), u(rng)};
        const double t = 10.0 * u(rng);
        const Vec2 a = model_velocity(eval, p, t, flow.eps);
        const Vec2 b = velocity(p, t, flow);
        EXPECT_NEAR(a.x, b.x, 1e-10);
        EXPECT_NEAR(a.y, b.y, 1e-10);
    }
}

TEST(Observation, IdenticalTwinForwardMatchesTruth)
{
    for (double eps : {0.0, 0.1})
    {
        FlowParams flow;
        flow.eps = eps;
        auto cfg = config(ControlSpec::zonal(1.0));
        cfg.eps = eps;
        const auto truth = truth_trajectory(flow, cfg);
        const auto pred = forward(project_truth(flow, PriorParams{}), cfg);
        ASSERT_EQ(pred.size() + 1, truth.size());
        for (std::size_t k = 0; k < pred.size(); ++k)
            EXPECT_LT(norm(pred[k] - truth.positions[k + 1]), 1e-9);
    }
}

TEST(Observation, SynthesizedNoiseStatistics)
{
    const FlowParams flow;
    auto cfg = config();
    cfg.schedule.K = 2000;
    cfg.schedule.dt_obs = 0.01;
    const auto truth = truth_trajectory(flow, cfg);
    const auto obs = synthesize(flow, cfg, 0.05, 11);
    double mean = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k)
    {
        const Vec2 r = obs.positions[k] - truth.positions[k + 1];
        mean += r.x + r.y;
        sq += r.x * r.x + r.y * r.y;
    }
    const double n = 2.0 * obs.size();
    EXPECT_LT(std::abs(mean / n), 4.0 * 0.05 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(sq / n), 0.05, 0.05 * 0.05);
}

TEST(Observation, TinyNoiseRecoversTruth)
{
    const FlowParams flow;
    const auto cfg = config(ControlSpec::bidirectional(0.5));
    const auto truth = truth_trajectory(flow, cfg);
    const auto obs = synthesize(flow, cfg, 1e-14, 3);
    for (std::size_t k = 0; k < obs.size(); ++k)
    {
        EXPECT_LT(norm(obs.positions[k] - truth.positions[k + 1]), 1e-12);
        EXPECT_EQ(obs.times[k], truth.times[k + 1]);
    }
    EXPECT_EQ(obs.half_index, cfg.schedule.K / 2);
    EXPECT_EQ(obs.control_kind, ControlKind::bidirectional);
    EXPECT_EQ(obs.zeta, 0.5);
    EXPECT_THROW(synthesize(flow, cfg, 0.0, 3), std::invalid_argument);
}

TEST(Observation, FirstHalfNoiseIsSharedAcrossSecondHalfSeeds)
{
    const FlowParams flow;
    const auto a = synthesize(flow, config(ControlSpec::zonal(1.0)), 0.02, NoiseSeeds{5, 100});
    const auto b = synthesize(flow, config(ControlSpec::zonal(2.0)), 0.02, NoiseSeeds{5, 200});
    const int half = a.half_index;
    for (int k = 0; k < half; ++k)
        EXPECT_EQ(a.positions[k], b.positions[k]);
    EXPECT_NE(a.positions[half], b.positions[half]);
    EXPECT_TRUE(synthesize(flow, config(), 0.02, 9) == synthesize(flow, config(), 0.02, 9));
}

TEST(Observation, PotentialIsHalfSumOfSquaredResiduals)
{
    const FlowParams flow;
    const auto cfg = config();
    const auto obs = synthesize(flow, cfg, 0.02, 21);
    SpectralField v0(8);
    v0.mean_u = 0.4;
    const auto pred = forward(v0, cfg);
    double expected = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k)
    {
        const double dx = pred[k].x - obs.positions[k].x;
        const double dy = pred[k].y - obs.positions[k].y;
        expected += (dx * dx + dy * dy) / (2.0 * 0.02 * 0.02);
    }
    EXPECT_NEAR(potential(v0, obs, cfg), expected, 1e-9 * expected);
    EXPECT_GE(potential(v0, obs, cfg, DataSpan::first_half), 0.0);
    EXPECT_LT(potential(v0, obs, cfg, DataSpan::first_half), potential(v0, obs, cfg));

    auto other = cfg;
    other.schedule.K = 10;
    EXPECT_THROW(potential(v0, obs, other), std::invalid_argument);
}

TEST(Observation, PotentialAtTruthIsNoiseLevel)
{
    // At the truth, 2 Phi is a chi-square with 2K degrees of freedom.
    const FlowParams flow;
    const auto cfg = config();
    const auto truth = project_truth(flow, PriorParams{});
    double sum = 0.0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r)
        sum += potential(truth, synthesize(flow, cfg, 0.02, 1000 + r), cfg);
    const double K = cfg.schedule.K;
    EXPECT_NEAR(sum / reps, K, 4.0 * std::sqrt(K) / std::sqrt(double(reps)));
}

TEST(Observation, UnwrappedResidualsDoNotJump)
{
    // A drifter carried across x = 1 by the mean flow is compared without wrapping.
    SpectralField v0(2);
    v0.mean_u = 1.0;
    auto cfg = config();
    cfg.x0 = {0.9, 0.5};
    auto obs = synthesize(FlowParams{}, cfg, 0.02, 1);
    const auto pred = forward(v0, cfg);
    obs.positions.assign(pred.begin(), pred.end());
    EXPECT_EQ(potential(v0, obs, cfg), 0.0);
    EXPECT_GT(pred.back().x, 1.0);
}

TEST(Observation, JsonRoundTrip)
{
    const auto obs = synthesize(FlowParams{}, config(ControlSpec::zonal(0.75)), 0.02, NoiseSeeds{3, 4});
    const auto text = to_json(obs).dump();
    const auto back = observation_set_from_json(nlohmann::json::parse(text));
    EXPECT_TRUE(back == obs);

    auto j = to_json(obs);
    j["format_version"] = 2;
    EXPECT_THROW(observation_set_from_json(j), std::runtime_error);
    j = to_json(obs);
    j["y"].erase(0);
    EXPECT_THROW(observation_set_from_json(j), std::runtime_error);
}
