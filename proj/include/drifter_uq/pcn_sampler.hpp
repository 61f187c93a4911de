/// @file pcn_sampler.hpp Preconditioned Crank-Nicolson Metropolis-Hastings in whitened prior coordinates.
///
/// The proposal u' = sqrt(1 - beta^2) u + beta w, w ~ N(0, I), is reversible with respect to the Gaussian
/// prior, so the acceptance probability only involves the potential: min(1, exp(Phi(u) - Phi(u'))).

#ifndef DRIFTER_UQ_PCN_SAMPLER_HPP
#define DRIFTER_UQ_PCN_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "observation.hpp"
#include "spectral_prior.hpp"

namespace drifter_uq
{

struct ChainConfig
{
    long n_steps = 100000;
    long burn_in = 20000;
    long thin = 10;
    double beta = 0.1;
    bool adapt = true;
    double target_acceptance = 0.23;
    long adapt_window = 100;
    std::uint64_t seed = 1;

    void validate() const
    {
        if (n_steps < 1 || burn_in < 0 || burn_in >= n_steps)
            throw std::invalid_argument("ChainConfig: require 0 <= burn_in < n_steps");
        if (!(beta > 0.0 && beta <= 1.0))
            throw std::invalid_argument("ChainConfig: beta must lie in (0, 1]");
        if (thin < 1 || adapt_window < 1)
            throw std::invalid_argument("ChainConfig: thin and adapt_window must be >= 1");
        if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
            throw std::invalid_argument("ChainConfig: target acceptance must lie in (0, 1)");
    }

    long kept_count() const { return (n_steps - burn_in) / thin; }
};

struct SampleStore
{
    std::vector<CoordVector> samples;
    long accepted = 0;             ///< accepted proposals over the whole chain
    long accepted_after_burn_in = 0;
    long n_steps = 0;
    long burn_in = 0;
    std::vector<double> phi_trace; ///< potential of the current state after every step
    double beta_final = 0.0;
    std::uint64_t seed = 0;

    double acceptance_rate() const { return n_steps > 0 ? static_cast<double>(accepted) / n_steps : 0.0; }

    double acceptance_rate_after_burn_in() const
    {
        const long n = n_steps - burn_in;
        return n > 0 ? static_cast<double>(accepted_after_burn_in) / n : 0.0;
    }

    friend bool operator==(const SampleStore&, const SampleStore&) = default;
};

template <class Rng>
CoordVector propose(const CoordVector& u, double beta, Rng& rng)
{
    std::normal_distribution<double> normal;
    const double keep = std::sqrt(1.0 - beta * beta);
    CoordVector out{std::vector<double>(u.size())};
    for (std::size_t i = 0; i < u.size(); ++i)
        out[i] = keep * u[i] + beta * normal(rng);
    return out;
}

inline double accept_prob(double phi_current, double phi_proposed)
{
    if (!std::isfinite(phi_proposed))
        return 0.0;
    const double d = phi_current - phi_proposed;
    return d >= 0.0 ? 1.0 : std::exp(d);
}

/// Run a pCN chain for an arbitrary potential `phi(const CoordVector&) -> double` starting from `start`.
///
/// During burn-in beta is rescaled after every adaptation window by exp(rate - target); it is frozen
/// afterwards so the kept samples come from a fixed Markov kernel.
template <class Potential>
SampleStore run_chain(const Potential& phi, CoordVector start, const ChainConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    SampleStore store;
    store.n_steps = cfg.n_steps;
    store.burn_in = cfg.burn_in;
    store.seed = cfg.seed;
    store.samples.reserve(static_cast<std::size_t>(cfg.kept_count()));
    store.phi_trace.reserve(static_cast<std::size_t>(cfg.n_steps));

    CoordVector u = std::move(start);
    double phi_u = phi(u);
    if (!std::isfinite(phi_u))
        throw std::runtime_error("run_chain: potential is not finite at the starting point");
    double beta = cfg.beta;
    long window_accepted = 0;

    for (long step = 0; step < cfg.n_steps; ++step)
    {
        CoordVector v = propose(u, beta, rng);
        const double phi_v = phi(v);
        const double a = accept_prob(phi_u, phi_v);
        if (uniform(rng) < a)
        {
            u = std::move(v);
            phi_u = phi_v;
            ++store.accepted;
            ++window_accepted;
            if (step >= cfg.burn_in)
                ++store.accepted_after_burn_in;
        }
        store.phi_trace.push_back(phi_u);

        if (step < cfg.burn_in && cfg.adapt && (step + 1) % cfg.adapt_window == 0)
        {
            const double rate = static_cast<double>(window_accepted) / cfg.adapt_window;
            beta = std::clamp(beta * std::exp(rate - cfg.target_acceptance), 1e-6, 1.0);
            window_accepted = 0;
        }
        if (step >= cfg.burn_in && (step - cfg.burn_in + 1) % cfg.thin == 0)
            store.samples.push_back(u);
    }
    store.beta_final = beta;
    return store;
}

/// Posterior sampling for the drifter problem, started at the prior mean (the zero field).
inline SampleStore run_chain(const ObservationSet& obs, const ForwardConfig& fwd, const PriorParams& prior,
                             const ChainConfig& cfg, DataSpan span = DataSpan::full)
{
    prior.validate();
    auto phi = [&](const CoordVector& u) { return potential(SpectralEvaluator(to_field(u, prior)), obs, fwd, span); };
    return run_chain(phi, CoordVector{std::vector<double>(prior.dimension(), 0.0)}, cfg);
}

/// Binary store: magic, version, a JSON metadata block, then the samples and the potential trace as raw
/// little-endian doubles.
namespace detail
{
inline constexpr char sample_store_magic[8] = {'D', 'U', 'Q', 'S', 'A', 'M', 'P', '\0'};
inline constexpr std::uint32_t sample_store_version = 1;

template <class T>
void write_raw(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_raw(std::istream& is)
{
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is)
        throw std::runtime_error("SampleStore: truncated file");
    return v;
}
} // namespace detail

inline void write_sample_store(std::ostream& os, const SampleStore& s, const nlohmann::json& configs = {})
{
    const std::size_t dim = s.samples.empty() ? 0 : s.samples.front().size();
    const nlohmann::json meta = {{"acceptance_rate", s.acceptance_rate()},
                                 {"acceptance_rate_after_burn_in", s.acceptance_rate_after_burn_in()},
                                 {"accepted", s.accepted},
                                 {"accepted_after_burn_in", s.accepted_after_burn_in},
                                 {"n_steps", s.n_steps},
                                 {"burn_in", s.burn_in},
                                 {"beta_final", s.beta_final},
                                 {"seed", s.seed},
                                 {"dimension", dim},
                                 {"kept", s.samples.size()},
                                 {"phi_trace_length", s.phi_trace.size()},
                                 {"configs", configs}};
    const std::string text = meta.dump();
    os.write(detail::sample_store_magic, sizeof detail::sample_store_magic);
    detail::write_raw(os, detail::sample_store_version);
    detail::write_raw(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& u : s.samples)
    {
        if (u.size() != dim)
            throw std::invalid_argument("SampleStore: samples of unequal dimension");
        os.write(reinterpret_cast<const char*>(u.values.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    }
    os.write(reinterpret_cast<const char*>(s.phi_trace.data()),
             static_cast<std::streamsize>(s.phi_trace.size() * sizeof(double)));
}

/// Returns the store; the metadata block (including "configs") is written to `meta_out` when given.
inline SampleStore read_sample_store(std::istream& is, nlohmann::json* meta_out = nullptr)
{
    char magic[sizeof detail::sample_store_magic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, detail::sample_store_magic, sizeof magic) != 0)
        throw std::runtime_error("SampleStore: bad magic");
    if (detail::read_raw<std::uint32_t>(is) != detail::sample_store_version)
        throw std::runtime_error("SampleStore: unsupported version");
    const auto len = detail::read_raw<std::uint64_t>(is);
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is)
        throw std::runtime_error("SampleStore: truncated metadata");
    const auto meta = nlohmann::json::parse(text);

    SampleStore s;
    s.accepted = meta.at("accepted").get<long>();
    s.accepted_after_burn_in = meta.at("accepted_after_burn_in").get<long>();
    s.n_steps = meta.at("n_steps").get<long>();
    s.burn_in = meta.at("burn_in").get<long>();
    s.beta_final = meta.at("beta_final").get<double>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    const auto dim = meta.at("dimension").get<std::size_t>();
    const auto kept = meta.at("kept").get<std::size_t>();
    s.samples.assign(kept, CoordVector{std::vector<double>(dim)});
    for (auto& u : s.samples)
    {
        is.read(reinterpret_cast<char*>(u.values.data()), static_cast<std::streamsize>(dim * sizeof(double)));
        if (!is)
            throw std::runtime_error("SampleStore: truncated samples");
    }
    s.phi_trace.resize(meta.at("phi_trace_length").get<std::size_t>());
    is.read(reinterpret_cast<char*>(s.phi_trace.data()), static_cast<std::streamsize>(s.phi_trace.size() * sizeof(double)));
    if (!is)
        throw std::runtime_error("SampleStore: truncated potential trace");
    if (meta_out)
        *meta_out = meta;
    return s;
}

} // namespace drifter_uq

#endif
