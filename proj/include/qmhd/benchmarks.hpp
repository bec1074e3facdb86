#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "qmhd/operators.hpp"

namespace qmhd {

enum class BenchmarkId { ConstantPerturbed, DensityBump, RandomSmooth };

inline std::string to_string(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::ConstantPerturbed: return "constant_perturbed";
        case BenchmarkId::DensityBump: return "density_bump";
        case BenchmarkId::RandomSmooth: return "random_smooth";
    }
    return "?";
}

inline BenchmarkId benchmark_from_string(const std::string& s) {
    if (s == "constant_perturbed") return BenchmarkId::ConstantPerturbed;
    if (s == "density_bump") return BenchmarkId::DensityBump;
    if (s == "random_smooth") return BenchmarkId::RandomSmooth;
    throw ValidationError("initial.benchmark", "unknown benchmark '" + s + "'");
}

struct BenchmarkParams {
    double rho_mean = 1.0;
    double density_amplitude = 0.5;   // bump and random density amplitude
    double velocity_amplitude = 0.1;
    int velocity_component = 0;       // single-mode velocity direction
    double b_mean = 0.0;              // uniform B along x
    double b_amplitude = 0.1;
    int random_kmax = 3;
    std::uint64_t seed = 20240917;

    bool operator==(const BenchmarkParams&) const = default;
};

struct InitialData {
    ScalarField rho;
    VectorField u;
    VectorField B;
};

namespace detail {

// Smooth real field with modes |k_a| <= kmax, amplitudes ~ 1/(1+|k|^2), scaled to max |f| = 1.
inline ScalarField random_smooth_field(const TorusGrid& g, int kmax, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    Spectrum s(g);
    for_each_mode(g, [&](std::size_t p, const auto&, const std::array<int, 3>& n) {
        int k2 = 0;
        for (int a = 0; a < g.dim(); ++a) {
            if (std::abs(n[a]) > kmax) return;
            k2 += n[a] * n[a];
        }
        if (k2 == 0) return;
        s[p] = cplx(ud(rng), ud(rng)) / (1.0 + k2);
    });
    ScalarField f = inverse(s);
    const double m = f.max_abs();
    if (m > 0.0) f *= 1.0 / m;
    return f;
}

}  // namespace detail

inline InitialData make_benchmark(BenchmarkId id, const TorusGrid& g, const BenchmarkParams& p) {
    if (p.velocity_component < 0 || p.velocity_component > 2)
        throw ValidationError("initial.velocity_component", "must be 0, 1 or 2");
    InitialData d{ScalarField(g, p.rho_mean), VectorField(g), VectorField(g)};
    d.B[0] += p.b_mean;
    switch (id) {
        case BenchmarkId::ConstantPerturbed:
            d.u[p.velocity_component] = ScalarField::from_function(
                g, [&](double x, double, double) { return p.velocity_amplitude * std::sin(x); });
            break;
        case BenchmarkId::DensityBump:
            d.rho = ScalarField::from_function(
                g, [&](double x, double, double) { return p.rho_mean + p.density_amplitude * std::cos(x); });
            d.B[1] += ScalarField::from_function(g, [&](double x, double, double) { return p.b_amplitude * std::cos(x); });
            d.B[2] += ScalarField::from_function(g, [&](double x, double, double) { return p.b_amplitude * std::sin(x); });
            break;
        case BenchmarkId::RandomSmooth: {
            std::mt19937_64 rng(p.seed);
            ScalarField r = detail::random_smooth_field(g, p.random_kmax, rng);
            r *= p.density_amplitude * p.rho_mean;
            r += p.rho_mean;
            d.rho = std::move(r);
            for (int c = 0; c < 3; ++c)
                d.u[c] = p.velocity_amplitude * detail::random_smooth_field(g, p.random_kmax, rng);
            VectorField a(g);
            for (int c = 0; c < 3; ++c) a[c] = detail::random_smooth_field(g, p.random_kmax, rng);
            VectorField b = curl(a);
            const double m = b.max_norm();
            if (m > 0.0) b *= p.b_amplitude / m;
            d.B += b;
            break;
        }
    }
    if (!(d.rho.min() > 0.0)) throw ValidationError("initial", "benchmark density is not positive");
    return d;
}

}  // namespace qmhd
