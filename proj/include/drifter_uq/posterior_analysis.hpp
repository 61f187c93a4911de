/// @file posterior_analysis.hpp Diagnostics computed from posterior samples: pointwise variance of the
/// horizontal velocity on a grid, its norms, the posterior mean field and the mean flow speed along a path.

#ifndef DRIFTER_UQ_POSTERIOR_ANALYSIS_HPP
#define DRIFTER_UQ_POSTERIOR_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "drifter.hpp"
#include "pcn_sampler.hpp"
#include "spectral_prior.hpp"

namespace drifter_uq
{

/// Cell-centred nodes on [x_min, x_max] x [y_min, y_max].
struct GridSpec
{
    int nx = 64;
    int ny = 32;
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 0.5;

    double dx() const { return (x_max - x_min) / nx; }
    double dy() const { return (y_max - y_min) / ny; }
    Point2 node(int i, int j) const { return {x_min + (i + 0.5) * dx(), y_min + (j + 0.5) * dy()}; }
};

struct VarianceGrid
{
    GridSpec grid;
    std::vector<double> values; ///< row-major, x fastest: values[j * nx + i]

    double at(int i, int j) const { return values[static_cast<std::size_t>(j * grid.nx + i)]; }
};

struct VarianceNorms
{
    double max = 0.0;
    double min = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

struct CurvePoint
{
    double zeta = 0.0;
    double norm_max = 0.0;
    double norm_l1 = 0.0;
    double norm_l2 = 0.0;
    bool escaped = false;
    double mean_flow_mag = 0.0;
};

/// Unbiased sample variance of u = mean_u - d psi/dy at every node, accumulated with Welford's update.
inline VarianceGrid variance_grid(const std::vector<CoordVector>& samples, const PriorParams& prior,
                                  const GridSpec& grid = {})
{
    if (samples.size() < 2)
        throw std::invalid_argument("variance_grid: need at least two samples");
    const auto nodes = static_cast<std::size_t>(grid.nx * grid.ny);
    std::vector<double> mean(nodes, 0.0), m2(nodes, 0.0);
    std::vector<Point2> points;
    points.reserve(nodes);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            points.push_back(grid.node(i, j));

    double n = 0.0;
    for (const auto& u : samples)
    {
        const SpectralEvaluator eval(to_field(u, prior));
        n += 1.0;
        for (std::size_t k = 0; k < nodes; ++k)
        {
            const double value = eval.velocity(points[k]).x;
            const double delta = value - mean[k];
            mean[k] += delta / n;
            m2[k] += delta * (value - mean[k]);
        }
    }
    VarianceGrid out{grid, std::vector<double>(nodes)};
    for (std::size_t k = 0; k < nodes; ++k)
        out.values[k] = std::max(0.0, m2[k] / (n - 1.0));
    return out;
}

inline VarianceGrid variance_grid(const SampleStore& store, const PriorParams& prior, const GridSpec& grid = {})
{
    return variance_grid(store.samples, prior, grid);
}

/// Max, min and midpoint-rule L1 / L2 norms over the grid's rectangle.
inline VarianceNorms norms(const VarianceGrid& g)
{
    if (g.values.empty())
        return {};
    const double cell = g.grid.dx() * g.grid.dy();
    VarianceNorms r;
    r.max = *std::max_element(g.values.begin(), g.values.end());
    r.min = *std::min_element(g.values.begin(), g.values.end());
    double s1 = 0.0, s2 = 0.0;
    for (double v : g.values)
    {
        s1 += v;
        s2 += v * v;
    }
    r.l1 = cell * s1;
    r.l2 = std::sqrt(cell * s2);
    return r;
}

inline SpectralField posterior_mean_field(const std::vector<CoordVector>& samples, const PriorParams& prior)
{
    if (samples.empty())
        throw std::invalid_argument("posterior_mean_field: no samples");
    CoordVector mean{std::vector<double>(samples.front().size(), 0.0)};
    for (const auto& u : samples)
        for (std::size_t i = 0; i < u.size(); ++i)
            mean[i] += u[i];
    for (auto& v : mean.values)
        v /= static_cast<double>(samples.size());
    return to_field(mean, prior);
}

inline SpectralField posterior_mean_field(const SampleStore& store, const PriorParams& prior)
{
    return posterior_mean_field(store.samples, prior);
}

/// (2/K) sum_{k=K/2+1}^{K} |v(z_k, t_k)| over the controlled half of a two-phase trajectory (t = 0 first).
template <class Flow>
double mean_flow_magnitude(const Flow& flow, const Trajectory& traj, const Schedule& sched)
{
    const auto K = static_cast<std::size_t>(sched.K);
    if (traj.size() < K + 1)
        throw std::invalid_argument("mean_flow_magnitude: trajectory does not cover the controlled half");
    double sum = 0.0;
    for (std::size_t k = K / 2 + 1; k <= K; ++k)
        sum += norm(flow(traj.positions[k], traj.times[k]));
    return 2.0 * sum / static_cast<double>(K);
}

inline void write_variance_csv(std::ostream& os, const VarianceGrid& g)
{
    os << "x,y,var_u\n";
    char buf[96];
    for (int j = 0; j < g.grid.ny; ++j)
        for (int i = 0; i < g.grid.nx; ++i)
        {
            const Point2 p = g.grid.node(i, j);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, g.at(i, j));
            os << buf;
        }
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve)
{
    os << "zeta,max,l1,l2,escaped,mean_flow_mag\n";
    char buf[160];
    for (const auto& c : curve)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,%.17g\n", c.zeta, c.norm_max, c.norm_l1, c.norm_l2,
                      c.escaped ? "true" : "false", c.mean_flow_mag);
        os << buf;
    }
}

} // namespace drifter_uq

#endif
