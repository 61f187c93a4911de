/// @file spectral_prior.hpp Truncated Fourier (Karhunen-Loeve) stream functions and the Gaussian prior
/// N(0, tau^2 (-Laplacian)^-alpha) on the 2-torus.
///
/// A SpectralField holds the complex coefficients psi_k for wavenumbers 0 < |k|_inf <= N and two constant
/// mean-velocity components. The velocity is (mean_u, mean_v) + perp-grad psi.
///
/// Whitened coordinates: for every wavenumber k in the half plane H = {kx > 0} U {kx = 0, ky > 0} we store
/// (a, b) with psi_k = tau lambda_k^(1/2) (a + i b) / sqrt(2), lambda_k = (4 pi^2 |k|^2)^-alpha, followed by
/// mean_u / s and mean_v / s where s is the mean-flow prior standard deviation. Under the prior every
/// coordinate is an independent standard normal.

#ifndef DRIFTER_UQ_SPECTRAL_PRIOR_HPP
#define DRIFTER_UQ_SPECTRAL_PRIOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geometry.hpp"
#include "torus_flow.hpp"

namespace drifter_uq
{

struct PriorParams
{
    double alpha = 3.0;
    double tau = 1.0;
    int N = 8;
    double mean_flow_std = 1.0;

    void validate() const
    {
        if (!(alpha > 1.0) || N < 1 || !(tau > 0.0) || !(mean_flow_std >= 0.0))
            throw std::invalid_argument("PriorParams: require alpha > 1, N >= 1, tau > 0, mean_flow_std >= 0");
    }

    /// Number of whitened coordinates: two per half-plane wavenumber plus the two mean-flow entries.
    std::size_t dimension() const { return static_cast<std::size_t>((2 * N + 1) * (2 * N + 1) - 1) + 2; }

    /// Eigenvalue lambda_k of (-Laplacian)^-alpha for the Fourier mode k.
    double eigenvalue(int kx, int ky) const
    {
        const double k2 = static_cast<double>(kx * kx + ky * ky);
        return std::pow(two_pi * two_pi * k2, -alpha);
    }
};

/// Flat whitened coordinate vector; layout documented at the top of this file.
struct CoordVector
{
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    friend bool operator==(const CoordVector&, const CoordVector&) = default;
};

/// Wavenumbers of the half plane in coordinate order.
inline std::vector<std::pair<int, int>> half_plane_modes(int N)
{
    std::vector<std::pair<int, int>> modes;
    modes.reserve(static_cast<std::size_t>((2 * N + 1) * (2 * N + 1) - 1) / 2);
    for (int ky = 1; ky <= N; ++ky)
        modes.emplace_back(0, ky);
    for (int kx = 1; kx <= N; ++kx)
        for (int ky = -N; ky <= N; ++ky)
            modes.emplace_back(kx, ky);
    return modes;
}

class SpectralField
{
public:
    using complex = std::complex<double>;

    SpectralField() : SpectralField(1) {}

    explicit SpectralField(int N) : N_(N), coeffs_(static_cast<std::size_t>((2 * N + 1) * (2 * N + 1)))
    {
        if (N < 1)
            throw std::invalid_argument("SpectralField: truncation radius must be >= 1");
    }

    int truncation() const { return N_; }
    std::size_t side() const { return static_cast<std::size_t>(2 * N_ + 1); }

    /// Row-major storage over (kx, ky) in [-N, N]^2, kx slowest. The k = 0 slot is always zero.
    const std::vector<complex>& coefficients() const { return coeffs_; }

    complex coeff(int kx, int ky) const { return coeffs_[index(kx, ky)]; }

    /// Set psi_k and its Hermitian partner psi_{-k} = conj(psi_k).
    void set_mode(int kx, int ky, complex value)
    {
        if (kx == 0 && ky == 0)
            throw std::invalid_argument("SpectralField: the k = 0 mode is not represented");
        if (std::abs(kx) > N_ || std::abs(ky) > N_)
            throw std::out_of_range("SpectralField: wavenumber outside truncation");
        coeffs_[index(kx, ky)] = value;
        coeffs_[index(-kx, -ky)] = std::conj(value);
    }

    double mean_u = 0.0;
    double mean_v = 0.0;

    friend bool operator==(const SpectralField&, const SpectralField&) = default;

    /// a * f + b * g for fields of equal truncation.
    friend SpectralField linear_combination(double a, const SpectralField& f, double b, const SpectralField& g)
    {
        if (f.N_ != g.N_)
            throw std::invalid_argument("linear_combination: truncation mismatch");
        SpectralField out(f.N_);
        for (std::size_t i = 0; i < out.coeffs_.size(); ++i)
            out.coeffs_[i] = a * f.coeffs_[i] + b * g.coeffs_[i];
        out.mean_u = a * f.mean_u + b * g.mean_u;
        out.mean_v = a * f.mean_v + b * g.mean_v;
        return out;
    }

private:
    std::size_t index(int kx, int ky) const
    {
        return static_cast<std::size_t>(kx + N_) * side() + static_cast<std::size_t>(ky + N_);
    }

    int N_;
    std::vector<complex> coeffs_;
};

inline SpectralField to_field(const CoordVector& u, const PriorParams& prior)
{
    if (u.size() != prior.dimension())
        throw std::invalid_argument("to_field: coordinate vector has the wrong dimension");
    SpectralField f(prior.N);
    std::size_t i = 0;
    for (const auto& [kx, ky] : half_plane_modes(prior.N))
    {
        const double scale = prior.tau * std::sqrt(prior.eigenvalue(kx, ky)) / std::numbers::sqrt2;
        f.set_mode(kx, ky, {scale * u[i], scale * u[i + 1]});
        i += 2;
    }
    f.mean_u = prior.mean_flow_std * u[i];
    f.mean_v = prior.mean_flow_std * u[i + 1];
    return f;
}

inline CoordVector to_coords(const SpectralField& f, const PriorParams& prior)
{
    if (f.truncation() != prior.N)
        throw std::invalid_argument("to_coords: truncation mismatch");
    CoordVector u{std::vector<double>(prior.dimension())};
    std::size_t i = 0;
    for (const auto& [kx, ky] : half_plane_modes(prior.N))
    {
        const double scale = std::numbers::sqrt2 / (prior.tau * std::sqrt(prior.eigenvalue(kx, ky)));
        const auto c = f.coeff(kx, ky);
        u[i] = scale * c.real();
        u[i + 1] = scale * c.imag();
        i += 2;
    }
    u[i] = prior.mean_flow_std > 0.0 ? f.mean_u / prior.mean_flow_std : 0.0;
    u[i + 1] = prior.mean_flow_std > 0.0 ? f.mean_v / prior.mean_flow_std : 0.0;
    return u;
}

/// Draw whitened coordinates from the prior.
template <class Rng>
CoordVector sample_prior_coords(Rng& rng, const PriorParams& prior)
{
    std::normal_distribution<double> normal;
    CoordVector u{std::vector<double>(prior.dimension())};
    for (auto& v : u.values)
        v = normal(rng);
    return u;
}

template <class Rng>
SpectralField sample_prior(Rng& rng, const PriorParams& prior)
{
    prior.validate();
    return to_field(sample_prior_coords(rng, prior), prior);
}

/// Evaluates psi and its derivatives for one field many times.
///
/// Sums run over the half plane only (psi = 2 Re sum_H psi_k e_k). Powers of exp(2 pi i x) and exp(2 pi i y)
/// come from a single sincos each plus complex recurrences. Coefficients are stored ky-major with kx
/// contiguous (padded to a multiple of 4) so the per-kx partial sums over ky vectorize without reassociation.
class SpectralEvaluator
{
public:
    static constexpr int max_truncation = 32;

    struct Values
    {
        double psi;
        double dpsi_dx;
        double dpsi_dy;
    };

    explicit SpectralEvaluator(const SpectralField& f)
        : N_(f.truncation()),
          width_(static_cast<std::size_t>(2 * N_ + 1)),
          stride_((static_cast<std::size_t>(N_) + 4) / 4 * 4),
          re_(width_ * stride_),
          im_(re_.size()),
          mean_u_(f.mean_u),
          mean_v_(f.mean_v)
    {
        if (N_ > max_truncation)
            throw std::invalid_argument("SpectralEvaluator: truncation radius exceeds max_truncation");
        for (int kx = 0; kx <= N_; ++kx)
            for (int ky = -N_; ky <= N_; ++ky)
            {
                if (kx == 0 && ky <= 0)
                    continue;
                const auto c = f.coeff(kx, ky);
                const std::size_t i = static_cast<std::size_t>(ky + N_) * stride_ + static_cast<std::size_t>(kx);
                re_[i] = c.real();
                im_[i] = c.imag();
            }
    }

    Values evaluate(const Point2& p) const
    {
        Powers w;
        fill_powers(wrap(p), w);
        // Per-kx partial sums S = sum_ky c e_y and T = sum_ky ky c e_y.
        alignas(64) std::array<double, max_truncation + 4> sr{}, si{}, tr{}, ti{};
        for (std::size_t j = 0; j < width_; ++j)
        {
            const double er = w.ey_re[j], ei = w.ey_im[j], ky = w.ky[j];
            const double* cr = &re_[j * stride_];
            const double* ci = &im_[j * stride_];
            for (std::size_t kx = 0; kx < stride_; ++kx)
            {
                const double pr = cr[kx] * er - ci[kx] * ei;
                const double pi = cr[kx] * ei + ci[kx] * er;
                sr[kx] += pr;
                si[kx] += pi;
                tr[kx] += ky * pr;
                ti[kx] += ky * pi;
            }
        }
        double psi = 0.0, gx = 0.0, gy = 0.0;
        for (int kx = 0; kx <= N_; ++kx)
        {
            const auto k = static_cast<std::size_t>(kx);
            const double xr = w.ex_re[k], xi = w.ex_im[k];
            psi += xr * sr[k] - xi * si[k];
            gx -= kx * (xr * si[k] + xi * sr[k]);
            gy -= xr * ti[k] + xi * tr[k];
        }
        return {2.0 * psi, 2.0 * two_pi * gx, 2.0 * two_pi * gy};
    }

    double stream(const Point2& p) const { return evaluate(p).psi; }

    Vec2 grad_stream(const Point2& p) const
    {
        const auto v = evaluate(p);
        return {v.dpsi_dx, v.dpsi_dy};
    }

    /// Mean flow plus perp-grad psi.
    Vec2 velocity(const Point2& p) const
    {
        const auto v = evaluate(p);
        return {mean_u_ - v.dpsi_dy, mean_v_ + v.dpsi_dx};
    }

    Vec2 mean_flow() const { return {mean_u_, mean_v_}; }

private:
    struct Powers
    {
        std::array<double, max_truncation + 1> ex_re, ex_im;
        std::array<double, 2 * max_truncation + 1> ey_re, ey_im, ky;
    };

    void fill_powers(const Point2& p, Powers& w) const
    {
        const double ax = two_pi * p.x, ay = two_pi * p.y;
        const double cx = std::cos(ax), sx = std::sin(ax);
        const double cy = std::cos(ay), sy = std::sin(ay);
        w.ex_re[0] = 1.0;
        w.ex_im[0] = 0.0;
        for (std::size_t k = 1; k <= static_cast<std::size_t>(N_); ++k)
        {
            w.ex_re[k] = w.ex_re[k - 1] * cx - w.ex_im[k - 1] * sx;
            w.ex_im[k] = w.ex_re[k - 1] * sx + w.ex_im[k - 1] * cx;
        }
        const auto n = static_cast<std::size_t>(N_);
        for (std::size_t j = 0; j < 2 * n + 1; ++j)
            w.ky[j] = static_cast<double>(j) - static_cast<double>(n);
        w.ey_re[n] = 1.0;
        w.ey_im[n] = 0.0;
        for (std::size_t k = 1; k <= n; ++k)
        {
            const double r = w.ey_re[n + k - 1] * cy - w.ey_im[n + k - 1] * sy;
            const double i = w.ey_re[n + k - 1] * sy + w.ey_im[n + k - 1] * cy;
            w.ey_re[n + k] = r;
            w.ey_im[n + k] = i;
            w.ey_re[n - k] = r;
            w.ey_im[n - k] = -i;
        }
    }

    int N_;
    std::size_t width_;
    std::size_t stride_;
    std::vector<double> re_, im_;
    double mean_u_, mean_v_;
};

inline double eval_stream(const SpectralField& f, const Point2& p) { return SpectralEvaluator(f).stream(p); }
inline Vec2 eval_velocity(const SpectralField& f, const Point2& p) { return SpectralEvaluator(f).velocity(p); }
inline Vec2 eval_grad_stream(const SpectralField& f, const Point2& p) { return SpectralEvaluator(f).grad_stream(p); }

/// Express the truth flow at t = 0 in the spectral basis.
///
/// A sin(2 pi k x) sin(2 pi y) = -(A/4) [e(k,1) - e(k,-1) - e(-k,1) + e(-k,-1)], the jet -c y becomes
/// mean_u = c, and for eps != 0 the initial perturbation eps sin(2 pi x) sin(4 pi y) is added the same way,
/// so the projected field is the exact initial velocity of the truth run.
inline SpectralField project_truth(const FlowParams& flow, const PriorParams& prior)
{
    const int needed = flow.eps != 0.0 ? std::max(flow.k, 2) : flow.k;
    if (prior.N < needed)
        throw std::invalid_argument("project_truth: truncation too small for the truth flow");
    SpectralField f(prior.N);
    auto add_product = [&f](int kx, int ky, double amplitude) {
        f.set_mode(kx, ky, f.coeff(kx, ky) - amplitude / 4.0);
        f.set_mode(kx, -ky, f.coeff(kx, -ky) + amplitude / 4.0);
    };
    add_product(flow.k, 1, flow.A);
    if (flow.eps != 0.0)
        add_product(1, 2, flow.eps);
    f.mean_u = flow.c;
    f.mean_v = 0.0;
    return f;
}

inline constexpr int spectral_field_format_version = 1;

inline nlohmann::json to_json(const SpectralField& f)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : f.coefficients())
        coeffs.push_back({c.real(), c.imag()});
    return {{"format_version", spectral_field_format_version},
            {"N", f.truncation()},
            {"coefficients", std::move(coeffs)},
            {"mean_u", f.mean_u},
            {"mean_v", f.mean_v}};
}

inline SpectralField spectral_field_from_json(const nlohmann::json& j)
{
    if (j.at("format_version").get<int>() != spectral_field_format_version)
        throw std::runtime_error("SpectralField: unsupported format_version");
    SpectralField f(j.at("N").get<int>());
    const auto& coeffs = j.at("coefficients");
    if (coeffs.size() != f.coefficients().size())
        throw std::runtime_error("SpectralField: coefficient count does not match N");
    const int N = f.truncation();
    std::size_t i = 0;
    for (int kx = -N; kx <= N; ++kx)
        for (int ky = -N; ky <= N; ++ky, ++i)
        {
            if (kx < 0 || (kx == 0 && ky <= 0))
                continue;
            f.set_mode(kx, ky, {coeffs[i].at(0).get<double>(), coeffs[i].at(1).get<double>()});
        }
    f.mean_u = j.at("mean_u").get<double>();
    f.mean_v = j.at("mean_v").get<double>();
    return f;
}

/// FNV-1a over the bit patterns of every stored number; identifies a field in run artifacts.
inline std::uint64_t field_hash(const SpectralField& f)
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b)
        {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<double>(f.truncation()));
    for (const auto& c : f.coefficients())
    {
        mix(c.real());
        mix(c.imag());
    }
    mix(f.mean_u);
    mix(f.mean_v);
    return h;
}

} // namespace drifter_uq

#endif
