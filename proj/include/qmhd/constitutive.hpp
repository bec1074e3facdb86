#pragma once

#include <cmath>
#include <string>

#include "qmhd/operators.hpp"

namespace qmhd {

struct ResistivityParams {
    double d0 = 1.0;
    double d1 = 1.0;
    double d2 = 1.0;  // must equal d0 * M^-a
    double d3 = 1.0;
    double a = 2.0;
    double a_prime = 2.5;
    double b = 0.0;  // accepted, unused by the law
    double M = 1.0;

    double continuous_d2() const { return d0 * std::pow(M, -a); }
    bool operator==(const ResistivityParams&) const = default;
};

struct PhysParams {
    double gamma = 5.0 / 3.0;
    double gamma_minus = 4.0;
    double kappa = 0.1;
    double c1 = 1.0;
    double c2 = 1.0;
    ResistivityParams nu;

    bool operator==(const PhysParams&) const = default;

    void validate() const {
        auto req = [](bool ok, const char* field, const char* what) {
            if (!ok) throw ValidationError(field, what);
        };
        req(std::isfinite(gamma) && gamma > 1.0, "physics.gamma", "must be > 1");
        req(std::isfinite(gamma_minus) && gamma_minus >= 1.0, "physics.gamma_minus", "must be >= 1");
        req(std::isfinite(kappa) && kappa >= 0.0, "physics.kappa", "must be >= 0");
        req(std::isfinite(c1) && c1 > 0.0, "physics.c1", "must be > 0");
        req(std::isfinite(c2) && c2 > 0.0, "physics.c2", "must be > 0");
        req(nu.d0 > 0.0 && nu.d1 > 0.0 && nu.d2 > 0.0 && nu.d3 > 0.0, "physics.d0..d3",
            "must be > 0");
        req(nu.a >= 2.0 && nu.a < nu.a_prime && nu.a_prime < 3.0, "physics.a, physics.a_prime",
            "need 2 <= a < a_prime < 3");
        req(nu.b >= 0.0, "physics.b", "must be >= 0");
        req(std::isfinite(nu.M) && nu.M > 0.0, "physics.M", "must be > 0");
        req(std::abs(nu.d2 - nu.continuous_d2()) <= 1e-12 * nu.continuous_d2(), "physics.d2",
            "must equal d0 * M^-a");
    }
};

namespace detail {
template <class T>
void require_positive(T rho, const char* what) {
    if (!(rho > T(0))) throw NonpositiveDensity(std::string(what) + ": density must be positive");
}
}  // namespace detail

template <class T>
T pressure(T rho, const PhysParams& p) {
    detail::require_positive(rho, "pressure");
    return std::pow(rho, T(p.gamma));
}

template <class T>
T pressure_derivative(T rho, const PhysParams& p) {
    detail::require_positive(rho, "pressure_derivative");
    return T(p.gamma) * std::pow(rho, T(p.gamma) - 1);
}

template <class T>
T cold_pressure_derivative(T rho, const PhysParams& p) {
    detail::require_positive(rho, "cold_pressure_derivative");
    if (rho <= T(1)) return T(p.c1) * std::pow(rho, -T(p.gamma_minus) - 1);
    return T(p.c2) * std::pow(rho, T(p.gamma) - 1);
}

// Equals rho*Hc'(rho) - Hc(rho); negative below the knot and unbounded below at vacuum.
template <class T>
T cold_pressure(T rho, const PhysParams& p) {
    detail::require_positive(rho, "cold_pressure");
    if (rho <= T(1)) {
        const T gm = T(p.gamma_minus);
        return T(p.c1) / gm * (1 - std::pow(rho, -gm));
    }
    const T g = T(p.gamma);
    return T(p.c2) / g * (std::pow(rho, g) - 1);
}

template <class T>
T enthalpy_H(T rho, const PhysParams& p) {
    detail::require_positive(rho, "enthalpy_H");
    return std::pow(rho, T(p.gamma)) / (T(p.gamma) - 1);
}

template <class T>
T enthalpy_H_prime(T rho, const PhysParams& p) {
    detail::require_positive(rho, "enthalpy_H_prime");
    const T g = T(p.gamma);
    return g * std::pow(rho, g - 1) / (g - 1);
}

template <class T>
T enthalpy_H_second(T rho, const PhysParams& p) {
    return pressure_derivative(rho, p) / rho;
}

// Normalized by Hc(1) = Hc'(1) = 0.
template <class T>
T enthalpy_Hc(T rho, const PhysParams& p) {
    detail::require_positive(rho, "enthalpy_Hc");
    if (rho <= T(1)) {
        const T gm = T(p.gamma_minus);
        return T(p.c1) / (gm + 1) * ((rho - 1) + (std::pow(rho, -gm) - 1) / gm);
    }
    const T g = T(p.gamma);
    return T(p.c2) / (g - 1) * ((std::pow(rho, g) - 1) / g - (rho - 1));
}

template <class T>
T enthalpy_Hc_prime(T rho, const PhysParams& p) {
    detail::require_positive(rho, "enthalpy_Hc_prime");
    if (rho <= T(1)) {
        const T gm = T(p.gamma_minus);
        return T(p.c1) / (gm + 1) * (1 - std::pow(rho, -gm - 1));
    }
    const T g = T(p.gamma);
    return T(p.c2) / (g - 1) * (std::pow(rho, g - 1) - 1);
}

template <class T>
T enthalpy_Hc_second(T rho, const PhysParams& p) {
    return cold_pressure_derivative(rho, p) / rho;
}

template <class T>
T magnetic_diffusivity(T rho, const PhysParams& p) {
    detail::require_positive(rho, "magnetic_diffusivity");
    if (rho < T(p.nu.M)) return T(p.nu.d0) * std::pow(rho, -T(p.nu.a));
    return T(p.nu.d2);
}

inline double magnetic_diffusivity_lower_bound(const PhysParams& p) {
    return std::min(p.nu.d2, p.nu.continuous_d2());
}

namespace detail {
inline void require_positive_field(const ScalarField& rho, const char* what) {
    if (!rho.all_finite()) throw NonFiniteInput(std::string(what) + ": non-finite density");
    if (!(rho.min() > 0.0)) throw NonpositiveDensity(std::string(what) + ": density must be positive");
}
}  // namespace detail

inline void require_density_floor(const ScalarField& rho, double floor) {
    if (!rho.all_finite()) throw NonFiniteInput("density has non-finite samples");
    const double m = rho.min();
    if (!(m >= floor)) throw DensityFloorViolation(m, floor);
}

inline ScalarField pressure_field(const ScalarField& rho, const PhysParams& p) {
    detail::require_positive_field(rho, "pressure_field");
    return rho.map([&](double r) { return pressure(r, p); });
}

inline ScalarField cold_pressure_field(const ScalarField& rho, const PhysParams& p) {
    detail::require_positive_field(rho, "cold_pressure_field");
    return rho.map([&](double r) { return cold_pressure(r, p); });
}

inline ScalarField magnetic_diffusivity_field(const ScalarField& rho, const PhysParams& p) {
    detail::require_positive_field(rho, "magnetic_diffusivity_field");
    return rho.map([&](double r) { return magnetic_diffusivity(r, p); });
}

inline constexpr double kDefaultDensityFloor = 1e-8;

// The Bohm forms filter sqrt(rho), quotients and products with the 2/3 rule.

// 2 kappa^2 rho grad(Lap sqrt(rho) / sqrt(rho)).
inline VectorField bohm_force_primary(const ScalarField& rho, double kappa,
                                      double floor = kDefaultDensityFloor) {
    require_density_floor(rho, floor);
    if (kappa == 0.0) return VectorField(rho.grid());
    const ScalarField psi = rho.map([](double r) { return std::sqrt(r); });
    ScalarField q = laplacian(dealias(psi));
    for (std::size_t i = 0; i < q.size(); ++i) q[i] /= psi[i];
    VectorField f = gradient(dealias(q));
    f *= rho;
    f = dealias(f);
    f *= 2.0 * kappa * kappa;
    return f;
}

// kappa^2 grad Lap rho - 4 kappa^2 div(grad sqrt(rho) (x) grad sqrt(rho)).
inline VectorField bohm_force_divergence_form(const ScalarField& rho, double kappa,
                                              double floor = kDefaultDensityFloor) {
    require_density_floor(rho, floor);
    const TorusGrid& g = rho.grid();
    if (kappa == 0.0) return VectorField(g);
    const VectorField gpsi = gradient(dealias(rho.map([](double r) { return std::sqrt(r); })));
    TensorField t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            t[i][j] = j < i ? t[j][i] : dealias(gpsi[i] * gpsi[j]);
    VectorField f = gradient(laplacian(dealias(rho)));
    f -= 4.0 * divergence(t);
    f *= kappa * kappa;
    return f;
}

// kappa^2 grad Lap rho - kappa^2 div(grad rho (x) grad rho / rho): the divergence
// form with 4 grad sqrt(rho) (x) grad sqrt(rho) rewritten through rho itself.
inline VectorField bohm_force_log_form(const ScalarField& rho, double kappa,
                                       double floor = kDefaultDensityFloor) {
    require_density_floor(rho, floor);
    const TorusGrid& g = rho.grid();
    if (kappa == 0.0) return VectorField(g);
    const ScalarField rd = dealias(rho);
    const VectorField gr = gradient(rd);
    TensorField t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (j < i) {
                t[i][j] = t[j][i];
                continue;
            }
            t[i][j] = gr[i] * gr[j];
            for (std::size_t p = 0; p < rho.size(); ++p) t[i][j][p] /= rho[p];
            t[i][j] = dealias(t[i][j]);
        }
    VectorField f = gradient(laplacian(rd));
    f -= divergence(t);
    f *= kappa * kappa;
    return f;
}

}  // namespace qmhd
