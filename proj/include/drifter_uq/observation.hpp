/// @file observation.hpp Forward operator (initial velocity -> drifter positions), identical-twin data
/// synthesis and the Gaussian misfit potential.

#ifndef DRIFTER_UQ_OBSERVATION_HPP
#define DRIFTER_UQ_OBSERVATION_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "drifter.hpp"
#include "spectral_prior.hpp"
#include "torus_flow.hpp"

namespace drifter_uq
{

/// splitmix64 finaliser; used to derive independent seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0)
{
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Everything the forward operator needs besides the unknown initial field.
struct ForwardConfig
{
    Schedule schedule;
    ControlSpec control;
    Point2 x0{0.30, 0.20};
    double eps = 0.0; ///< known strength of the travelling perturbation
};

/// v(x, t) = v0(x) + eps [perp-grad psi_1(x, t) - perp-grad psi_1(x, 0)].
inline Vec2 model_velocity(const SpectralEvaluator& v0, const Point2& p, double t, double eps)
{
    Vec2 v = v0.velocity(p);
    if (eps != 0.0 && t != 0.0)
        v += eps * (perturbation_velocity(p, t) - perturbation_velocity(p, 0.0));
    return v;
}

inline Vec2 model_velocity(const SpectralField& v0, const Point2& p, double t, double eps)
{
    return model_velocity(SpectralEvaluator(v0), p, t, eps);
}

enum class DataSpan
{
    full,      ///< all K observations
    first_half ///< y^1 only: the uncontrolled observations
};

/// Predicted drifter positions at t_1 .. t_K (or t_1 .. t_{K/2} for DataSpan::first_half).
inline std::vector<Point2> forward(const SpectralEvaluator& v0, const ForwardConfig& cfg, DataSpan span = DataSpan::full)
{
    auto flow = [&](const Point2& p, double t) { return model_velocity(v0, p, t, cfg.eps); };
    const Trajectory traj = span == DataSpan::full
                                ? simulate_two_phase(flow, cfg.control, cfg.x0, cfg.schedule)
                                : integrate(flow, ControlSpec::none(), cfg.x0, 0.0, cfg.schedule.t_half(), cfg.schedule);
    return {traj.positions.begin() + 1, traj.positions.end()};
}

inline std::vector<Point2> forward(const SpectralField& v0, const ForwardConfig& cfg, DataSpan span = DataSpan::full)
{
    return forward(SpectralEvaluator(v0), cfg, span);
}

struct ObservationSet
{
    std::vector<double> times;
    std::vector<Point2> positions;
    double sigma = 0.02;
    int half_index = 0;
    ControlKind control_kind = ControlKind::none;
    double zeta = 0.0;
    Point2 x0;
    double eps = 0.0;
    std::uint64_t seed = 0;    ///< noise seed of the uncontrolled half
    std::uint64_t seed_y2 = 0; ///< noise seed of the controlled half

    std::size_t size() const { return positions.size(); }
    friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

/// Seeds for the two observation halves; sweeps share the first and vary the second per cell.
struct NoiseSeeds
{
    std::uint64_t first_half;
    std::uint64_t second_half;
};

/// Noiseless truth trajectory (t = 0 first) under the analytic flow and the configured control.
inline Trajectory truth_trajectory(const FlowParams& truth, const ForwardConfig& cfg)
{
    auto flow = [&](const Point2& p, double t) { return velocity(p, t, truth); };
    return simulate_two_phase(flow, cfg.control, cfg.x0, cfg.schedule);
}

/// Add i.i.d. N(0, sigma^2) noise to each coordinate of the sampled truth positions.
inline ObservationSet synthesize(const FlowParams& truth, const ForwardConfig& cfg, double sigma, NoiseSeeds seeds)
{
    if (!(sigma > 0.0))
        throw std::invalid_argument("synthesize: sigma must be positive");
    const Trajectory traj = truth_trajectory(truth, cfg);
    const int K = cfg.schedule.K;

    ObservationSet obs;
    obs.sigma = sigma;
    obs.half_index = K / 2;
    obs.control_kind = cfg.control.kind();
    obs.zeta = cfg.control.zeta();
    obs.x0 = cfg.x0;
    obs.eps = cfg.eps;
    obs.seed = seeds.first_half;
    obs.seed_y2 = seeds.second_half;

    std::mt19937_64 first(seeds.first_half);
    std::mt19937_64 second(mix_seed(seeds.second_half, 2));
    std::normal_distribution<double> noise(0.0, sigma);
    for (int k = 1; k <= K; ++k)
    {
        auto& rng = k <= K / 2 ? first : second;
        const double nx = noise(rng);
        const double ny = noise(rng);
        const Point2& p = traj.positions[static_cast<std::size_t>(k)];
        obs.times.push_back(traj.times[static_cast<std::size_t>(k)]);
        obs.positions.push_back({p.x + nx, p.y + ny});
    }
    return obs;
}

inline ObservationSet synthesize(const FlowParams& truth, const ForwardConfig& cfg, double sigma, std::uint64_t seed)
{
    return synthesize(truth, cfg, sigma, NoiseSeeds{seed, seed});
}

/// Phi = sum |prediction - y|^2 / (2 sigma^2) over the first `count` observations.
inline double misfit(const std::vector<Point2>& predicted, const ObservationSet& obs, std::size_t count)
{
    if (predicted.size() < count || obs.size() < count)
        throw std::invalid_argument("misfit: fewer predictions or observations than requested");
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i)
    {
        const Vec2 r = predicted[i] - obs.positions[i];
        sum += r.x * r.x + r.y * r.y;
    }
    return sum / (2.0 * obs.sigma * obs.sigma);
}

inline double potential(const SpectralEvaluator& v0, const ObservationSet& obs, const ForwardConfig& cfg,
                        DataSpan span = DataSpan::full)
{
    const auto K = static_cast<std::size_t>(cfg.schedule.K);
    if (obs.size() != K)
        throw std::invalid_argument("potential: observation count does not match the schedule");
    const std::size_t count = span == DataSpan::full ? K : K / 2;
    return misfit(forward(v0, cfg, span), obs, count);
}

inline double potential(const SpectralField& v0, const ObservationSet& obs, const ForwardConfig& cfg,
                        DataSpan span = DataSpan::full)
{
    return potential(SpectralEvaluator(v0), obs, cfg, span);
}

inline constexpr int observation_format_version = 1;

inline nlohmann::json to_json(const ObservationSet& obs)
{
    nlohmann::json y = nlohmann::json::array();
    for (const auto& p : obs.positions)
        y.push_back({p.x, p.y});
    return {{"format_version", observation_format_version},
            {"times", obs.times},
            {"y", std::move(y)},
            {"sigma", obs.sigma},
            {"half_index", obs.half_index},
            {"control", {{"kind", to_string(obs.control_kind)}, {"zeta", obs.zeta}}},
            {"x0", {obs.x0.x, obs.x0.y}},
            {"eps", obs.eps},
            {"seed", obs.seed},
            {"seed_y2", obs.seed_y2}};
}

inline ObservationSet observation_set_from_json(const nlohmann::json& j)
{
    if (j.at("format_version").get<int>() != observation_format_version)
        throw std::runtime_error("ObservationSet: unsupported format_version");
    ObservationSet obs;
    obs.times = j.at("times").get<std::vector<double>>();
    for (const auto& p : j.at("y"))
        obs.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (obs.times.size() != obs.positions.size() || obs.positions.size() % 2 != 0)
        throw std::runtime_error("ObservationSet: times and positions must have equal, even length");
    obs.sigma = j.at("sigma").get<double>();
    obs.half_index = j.at("half_index").get<int>();
    obs.control_kind = control_kind_from_string(j.at("control").at("kind").get<std::string>());
    obs.zeta = j.at("control").at("zeta").get<double>();
    obs.x0 = {j.at("x0").at(0).get<double>(), j.at("x0").at(1).get<double>()};
    obs.eps = j.at("eps").get<double>();
    obs.seed = j.at("seed").get<std::uint64_t>();
    obs.seed_y2 = j.value("seed_y2", obs.seed);
    return obs;
}

} // namespace drifter_uq

#endif
