#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "qmhd/solver.hpp"

namespace qmhd {

struct EnergyReport {
    double kinetic = 0.0;    // 1/2 int rho |u|^2
    double internal = 0.0;   // int H(rho)
    double cold = 0.0;       // int Hc(rho)
    double quantum = 0.0;    // 2 kappa^2 int |grad sqrt(rho)|^2
    double magnetic = 0.0;   // 1/2 int |B|^2
    double capillary = 0.0;  // delta/2 int |grad^{2s+1} rho|^2
    double total() const { return kinetic + internal + cold + quantum + magnetic + capillary; }
};

struct DissipationReport {
    double viscous = 0.0;         // 2 int rho |D(u)|^2
    double pressure_diss = 0.0;   // eps int (H'' + Hc'') |grad rho|^2
    double magnetic_diss = 0.0;   // int nu_b |curl B|^2
    double hyper = 0.0;           // eta int |Lap u|^2
    double capillary_diss = 0.0;  // delta eps int |Lap^{s+1} rho|^2
    double quantum_diss = 0.0;    // eps kappa^2 int rho |Hess log rho|^2
    double total() const {
        return viscous + pressure_diss + magnetic_diss + hyper + capillary_diss + quantum_diss;
    }
};

struct BDEntropyReport {
    double bd_energy = 0.0;
    std::array<double, 9> lhs{};  // see bd_lhs_names
    std::array<double, 6> rhs{};  // see bd_rhs_names
    double spot_first_rhs = 0.0;  // -4 eps int |Lap rho|^2 / rho
    double lhs_total() const {
        double s = 0.0;
        for (double v : lhs) s += v;
        return s;
    }
    double rhs_total() const {
        double s = 0.0;
        for (double v : rhs) s += v;
        return s;
    }
};

inline constexpr std::array<const char*, 9> bd_lhs_names{
    "hyper", "antisymmetric_viscous", "pressure_gradient", "quantum", "eps_quantum",
    "magnetic", "eps_capillary", "eps_pressure", "capillary"};
inline constexpr std::array<const char*, 6> bd_rhs_names{
    "eps_phi_lap", "eps_grad_rho_grad_u", "eps_grad_phi_sq", "eta_lap_u", "eps_div_rho_u", "lorentz"};

namespace detail {

inline double sum_of_squares(const TensorField& t) {
    double s = 0.0;
    for (const auto& row : t)
        for (const auto& f : row) s += inner_product(f, f);
    return s;
}

inline double weighted_sum_of_squares(const ScalarField& w, const TensorField& t) {
    ScalarField acc(w.grid());
    for (const auto& row : t)
        for (const auto& f : row) acc += f * f;
    return inner_product(w, acc);
}

inline TensorField hessian(const ScalarField& f) {
    TensorField h;
    const VectorField g = gradient(f);
    for (int i = 0; i < 3; ++i) {
        const VectorField gi = gradient(g[i]);
        for (int j = 0; j < 3; ++j) h[i][j] = gi[j];
    }
    return h;
}

inline ScalarField log_field(const ScalarField& rho) {
    return rho.map([](double r) { return std::log(r); });
}

}  // namespace detail

// int |grad^m f|^2 with the full order-m derivative tensor; by Parseval this is
// the volume times sum |k|^(2m) |f_k|^2.
inline double derivative_tensor_norm_sq(const ScalarField& f, int m) {
    const Spectrum s = forward(f);
    double acc = 0.0;
    for_each_mode(f.grid(), [&](std::size_t p, const auto& k, const auto&) {
        acc += std::pow(ksq(k), m) * std::norm(s[p]);
    });
    return acc * f.grid().volume();
}

inline double capillary_energy(const ScalarField& rho, const RegParams& reg) {
    if (reg.delta == 0.0) return 0.0;
    return 0.5 * reg.delta * derivative_tensor_norm_sq(rho, 2 * reg.s + 1);
}

inline EnergyReport compute_energy(const State& s, const PhysParams& phys, const RegParams& reg) {
    require_density_floor(s.rho, reg.density_floor);
    EnergyReport e;
    e.kinetic = 0.5 * inner_product(s.rho, dot(s.u, s.u));
    e.internal = integrate(s.rho.map([&](double r) { return enthalpy_H(r, phys); }));
    e.cold = integrate(s.rho.map([&](double r) { return enthalpy_Hc(r, phys); }));
    if (phys.kappa > 0.0) {
        const VectorField g = gradient(s.rho.map([](double r) { return std::sqrt(r); }));
        e.quantum = 2.0 * phys.kappa * phys.kappa * inner_product(g, g);
    }
    e.magnetic = 0.5 * inner_product(s.B, s.B);
    e.capillary = capillary_energy(s.rho, reg);
    return e;
}

inline DissipationReport compute_dissipation(const State& s, const PhysParams& phys, const RegParams& reg) {
    require_density_floor(s.rho, reg.density_floor);
    const TorusGrid& g = s.rho.grid();
    DissipationReport d;
    const TensorField gu = jacobian(s.u);
    TensorField sym;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sym[i][j] = 0.5 * (gu[i][j] + gu[j][i]);
    d.viscous = 2.0 * detail::weighted_sum_of_squares(s.rho, sym);
    const VectorField j = curl(s.B);
    d.magnetic_diss = inner_product(magnetic_diffusivity_field(s.rho, phys), dot(j, j));
    if (reg.eta > 0.0) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) {
            const ScalarField l = laplacian(s.u[c]);
            acc += inner_product(l, l);
        }
        d.hyper = reg.eta * acc;
    }
    if (reg.epsilon > 0.0) {
        const VectorField gr = gradient(s.rho);
        ScalarField w(g);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double r = s.rho[p];
            w[p] = (pressure_derivative(r, phys) + cold_pressure_derivative(r, phys)) / r;
        }
        d.pressure_diss = reg.epsilon * inner_product(w, dot(gr, gr));
        if (reg.delta > 0.0) {
            const ScalarField l = power_laplacian(s.rho, reg.s + 1);
            d.capillary_diss = reg.delta * reg.epsilon * inner_product(l, l);
        }
        if (phys.kappa > 0.0)
            d.quantum_diss = reg.epsilon * phys.kappa * phys.kappa *
                             detail::weighted_sum_of_squares(s.rho, detail::hessian(detail::log_field(s.rho)));
    }
    return d;
}

// Terms of the entropy identity with phi(rho) = 2 log rho.
inline BDEntropyReport compute_bd_terms(const State& s, const PhysParams& phys, const RegParams& reg) {
    require_density_floor(s.rho, reg.density_floor);
    const TorusGrid& g = s.rho.grid();
    const double eps = reg.epsilon, eta = reg.eta, delta = reg.delta;
    const double k2 = phys.kappa * phys.kappa;
    const ScalarField& rho = s.rho;
    BDEntropyReport r;

    const VectorField grho = gradient(rho);
    VectorField gphi = grho;
    ScalarField dphi = rho.map([](double x) { return 2.0 / x; });
    gphi *= dphi;
    const VectorField w = s.u + gphi;

    const EnergyReport e = compute_energy(s, phys, reg);
    r.bd_energy = 0.5 * inner_product(rho, dot(w, w)) + e.internal + e.cold + e.quantum + e.magnetic +
                  e.capillary;

    const TensorField gu = jacobian(s.u);
    TensorField anti;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) anti[i][j] = 0.5 * (gu[i][j] - gu[j][i]);
    ScalarField pw(g);
    for (std::size_t p = 0; p < g.size(); ++p)
        pw[p] = (pressure_derivative(rho[p], phys) + cold_pressure_derivative(rho[p], phys)) / rho[p];
    const double pgrad = inner_product(pw, dot(grho, grho));
    const double hess = k2 > 0.0 ? detail::weighted_sum_of_squares(rho, detail::hessian(detail::log_field(rho))) : 0.0;
    const VectorField jb = curl(s.B);
    std::array<ScalarField, 3> lap_u;
    double lap_u_sq = 0.0;
    for (int c = 0; c < 3; ++c) {
        lap_u[c] = laplacian(s.u[c]);
        lap_u_sq += inner_product(lap_u[c], lap_u[c]);
    }
    double lap_s1_sq = 0.0;
    if (delta > 0.0) {
        const ScalarField l = power_laplacian(rho, reg.s + 1);
        lap_s1_sq = inner_product(l, l);
    }

    r.lhs[0] = eta * lap_u_sq;
    r.lhs[1] = 2.0 * detail::weighted_sum_of_squares(rho, anti);
    r.lhs[2] = 2.0 * pgrad;
    r.lhs[3] = 2.0 * k2 * hess;
    r.lhs[4] = eps * k2 * hess;
    r.lhs[5] = inner_product(magnetic_diffusivity_field(rho, phys), dot(jb, jb));
    r.lhs[6] = eps * delta * lap_s1_sq;
    r.lhs[7] = eps * pgrad;
    r.lhs[8] = 2.0 * delta * lap_s1_sq;

    const ScalarField lap_rho = laplacian(rho);
    if (eps > 0.0) {
        r.rhs[0] = eps * inner_product(rho, dot(gphi, gradient(dphi * lap_rho)));
        ScalarField acc(g);
        for (int a = 0; a < 3; ++a) {
            ScalarField c = grho[0] * gu[a][0];
            c += grho[1] * gu[a][1];
            c += grho[2] * gu[a][2];
            acc += c * gphi[a];
        }
        r.rhs[1] = -eps * integrate(acc);
        r.rhs[2] = eps * 0.5 * inner_product(dot(gphi, gphi), lap_rho);
        r.rhs[4] = -eps * inner_product(divergence(rho * s.u) * dphi, lap_rho);
        ScalarField q = lap_rho * lap_rho;
        for (std::size_t p = 0; p < g.size(); ++p) q[p] /= rho[p];
        r.spot_first_rhs = -4.0 * eps * integrate(q);
    }
    if (eta > 0.0) {
        const VectorField glp = gradient(laplacian(2.0 * detail::log_field(rho)));
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += inner_product(lap_u[c], glp[c]);
        r.rhs[3] = -eta * acc;
    }
    r.rhs[5] = inner_product(cross(jb, s.B), gphi);
    return r;
}

struct ResidualSample {
    double time = 0.0;
    double residual = 0.0;
    double relative = 0.0;  // residual / max |term|
};

namespace detail {
inline double uniform_step(std::span<const State> states) {
    if (states.size() < 3) throw NonuniformSampling("need at least three states");
    const double dt = states[1].time - states[0].time;
    if (!(std::abs(dt) > 0.0)) throw NonuniformSampling("repeated sample time");
    for (std::size_t k = 1; k < states.size(); ++k) {
        const double h = states[k].time - states[k - 1].time;
        if (std::abs(h - dt) > 1e-9 * std::abs(dt)) throw NonuniformSampling("sample times are not uniform");
    }
    return dt;
}
}  // namespace detail

// [E_{k+1} - E_{k-1}]/(2 dt) + dissipation_k at interior samples.
inline std::vector<ResidualSample> energy_identity_residual(std::span<const State> states,
                                                            const PhysParams& phys, const RegParams& reg) {
    const double dt = detail::uniform_step(states);
    std::vector<double> energy;
    for (const auto& s : states) energy.push_back(compute_energy(s, phys, reg).total());
    std::vector<ResidualSample> out;
    for (std::size_t k = 1; k + 1 < states.size(); ++k) {
        const double dedt = (energy[k + 1] - energy[k - 1]) / (2.0 * dt);
        const DissipationReport d = compute_dissipation(states[k], phys, reg);
        const double scale = std::max({std::abs(dedt), d.viscous, d.pressure_diss, d.magnetic_diss, d.hyper,
                                       d.capillary_diss, d.quantum_diss});
        const double res = dedt + d.total();
        out.push_back({states[k].time, res, scale > 0.0 ? res / scale : 0.0});
    }
    return out;
}

inline std::vector<ResidualSample> bd_entropy_residual(std::span<const State> states, const PhysParams& phys,
                                                       const RegParams& reg) {
    const double dt = detail::uniform_step(states);
    std::vector<BDEntropyReport> rep;
    for (const auto& s : states) rep.push_back(compute_bd_terms(s, phys, reg));
    std::vector<ResidualSample> out;
    for (std::size_t k = 1; k + 1 < states.size(); ++k) {
        const double dedt = (rep[k + 1].bd_energy - rep[k - 1].bd_energy) / (2.0 * dt);
        double scale = std::abs(dedt);
        for (double v : rep[k].lhs) scale = std::max(scale, std::abs(v));
        for (double v : rep[k].rhs) scale = std::max(scale, std::abs(v));
        const double res = dedt + rep[k].lhs_total() - rep[k].rhs_total();
        out.push_back({states[k].time, res, scale > 0.0 ? res / scale : 0.0});
    }
    return out;
}

struct BohmCheck {
    double primary_vs_divergence = 0.0;  // || primary - divergence || / kappa^2
    double log_vs_divergence = 0.0;      // || log form - divergence || / kappa^2
};

inline BohmCheck bohm_identity_check(const ScalarField& rho, double kappa,
                                     double floor = kDefaultDensityFloor) {
    require_density_floor(rho, floor);
    if (kappa == 0.0) return {};
    const VectorField d = bohm_force_divergence_form(rho, kappa, floor);
    const double k2 = kappa * kappa;
    return {norm_l2(bohm_force_primary(rho, kappa, floor) - d) / k2,
            norm_l2(bohm_force_log_form(rho, kappa, floor) - d) / k2};
}

struct QuantumInequality {
    double hess_sqrt = 0.0;       // int |Hess sqrt(rho)|^2
    double grad_quarter4 = 0.0;   // int |grad rho^{1/4}|^4
    double rho_grad_log = 0.0;    // int rho |grad log rho|^2
    double rho_hess_log = 0.0;    // int rho |Hess log rho|^2
    // Largest constants admissible with the other constant set to zero, per right side.
    double c1_first = 0.0, c2_first = 0.0;
    double c1_second = 0.0, c2_second = 0.0;
};

inline QuantumInequality quantum_inequality_check(const ScalarField& rho, double floor = kDefaultDensityFloor) {
    require_density_floor(rho, floor);
    QuantumInequality q;
    q.hess_sqrt = detail::sum_of_squares(detail::hessian(rho.map([](double r) { return std::sqrt(r); })));
    const VectorField g4 = gradient(rho.map([](double r) { return std::pow(r, 0.25); }));
    const ScalarField m2 = dot(g4, g4);
    q.grad_quarter4 = inner_product(m2, m2);
    const ScalarField lr = detail::log_field(rho);
    const VectorField gl = gradient(lr);
    q.rho_grad_log = inner_product(rho, dot(gl, gl));
    q.rho_hess_log = detail::weighted_sum_of_squares(rho, detail::hessian(lr));
    auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
    q.c1_first = ratio(q.rho_grad_log, q.hess_sqrt);
    q.c2_first = ratio(q.rho_grad_log, q.grad_quarter4);
    q.c1_second = ratio(q.rho_hess_log, q.hess_sqrt);
    q.c2_second = ratio(q.rho_hess_log, q.grad_quarter4);
    return q;
}

struct NormMonitor {
    double rho_lgamma = 0.0;        // ||rho||_{L^gamma}
    double rho_inv_lgm = 0.0;       // ||1/rho||_{L^gamma_minus}
    double grad_sqrt_rho = 0.0;     // ||grad sqrt(rho)||_{L2}
    double sqrt_rho_u = 0.0;        // ||sqrt(rho) u||_{L2}
    double sqrt_rho_du = 0.0;       // ||sqrt(rho) D(u)||_{L2}
    double grad_rho_gamma2 = 0.0;   // ||grad rho^{gamma/2}||_{L2}
    double b_l2 = 0.0;              // ||B||_{L2}
    double grad_b = 0.0;            // ||grad B||_{L2}
    double rho_inv_linf = 0.0;      // ||1/rho||_{L^inf}
    double sqrt_rho_h2 = 0.0;       // ||sqrt(rho)||_{H2}
    double grad_quarter_l4 = 0.0;   // ||grad rho^{1/4}||_{L4}
    double min_rho = 0.0;
    double max_rho = 0.0;
};

inline NormMonitor norm_monitor(const State& s, const PhysParams& phys, const RegParams& reg) {
    require_density_floor(s.rho, reg.density_floor);
    const ScalarField& rho = s.rho;
    NormMonitor m;
    m.rho_lgamma = std::pow(integrate(rho.map([&](double r) { return std::pow(r, phys.gamma); })), 1.0 / phys.gamma);
    m.rho_inv_lgm = std::pow(integrate(rho.map([&](double r) { return std::pow(r, -phys.gamma_minus); })),
                             1.0 / phys.gamma_minus);
    const ScalarField psi = rho.map([](double r) { return std::sqrt(r); });
    m.grad_sqrt_rho = norm_l2(gradient(psi));
    m.sqrt_rho_u = std::sqrt(inner_product(rho, dot(s.u, s.u)));
    const TensorField gu = jacobian(s.u);
    TensorField sym;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sym[i][j] = 0.5 * (gu[i][j] + gu[j][i]);
    m.sqrt_rho_du = std::sqrt(detail::weighted_sum_of_squares(rho, sym));
    m.grad_rho_gamma2 = norm_l2(gradient(rho.map([&](double r) { return std::pow(r, 0.5 * phys.gamma); })));
    m.b_l2 = norm_l2(s.B);
    m.grad_b = std::sqrt(detail::sum_of_squares(jacobian(s.B)));
    m.min_rho = rho.min();
    m.max_rho = rho.max();
    m.rho_inv_linf = 1.0 / m.min_rho;
    m.sqrt_rho_h2 = std::sqrt(inner_product(psi, psi) + derivative_tensor_norm_sq(psi, 1) +
                              derivative_tensor_norm_sq(psi, 2));
    const VectorField g4 = gradient(rho.map([](double r) { return std::pow(r, 0.25); }));
    const ScalarField m2 = dot(g4, g4);
    m.grad_quarter_l4 = std::pow(inner_product(m2, m2), 0.25);
    return m;
}

// Space-time test function chi(t) * profile(x) * e_component with chi(t) = (1 - (t - t0)/T)^2.
// component < 0 marks a scalar test function (continuity only).
struct TestFunction {
    std::array<int, 3> k{};
    TrigKind kind = TrigKind::Cos;
    int component = -1;
};

// Lowest modes with |k_i| <= kmax on the active axes, scalar and vector copies.
inline std::vector<TestFunction> default_battery(const TorusGrid& g, int kmax = 1) {
    std::vector<TestFunction> out;
    const int k1 = g.dim() >= 2 ? kmax : 0, k2 = g.dim() >= 3 ? kmax : 0;
    for (int a = 0; a <= kmax; ++a)
        for (int b = -k1; b <= k1; ++b)
            for (int c = -k2; c <= k2; ++c) {
                const std::array<int, 3> k{a, b, c};
                if (a == 0 && (b < 0 || (b == 0 && c < 0))) continue;
                const bool zero = a == 0 && b == 0 && c == 0;
                for (TrigKind kind : {TrigKind::Cos, TrigKind::Sin}) {
                    if (zero && kind == TrigKind::Sin) continue;
                    for (int comp = -1; comp < 3; ++comp) out.push_back({k, kind, comp});
                }
            }
    return out;
}

namespace detail {
inline ScalarField test_profile(const TorusGrid& g, const TestFunction& t) {
    return ScalarField::from_function(g, [&](double x, double y, double z) {
        const double ph = t.k[0] * x + t.k[1] * y + t.k[2] * z;
        return t.kind == TrigKind::Cos ? std::cos(ph) : std::sin(ph);
    });
}

inline VectorField test_vector(const TorusGrid& g, const TestFunction& t) {
    VectorField v(g);
    v[t.component] = test_profile(g, t);
    return v;
}

// Trapezoid weights and the cutoff chi on the sample times.
struct TimeWeights {
    std::vector<double> w, chi, dchi;
};

inline TimeWeights time_weights(std::span<const State> states) {
    if (states.size() < 2) throw NonuniformSampling("need at least two states");
    const double dt = states[1].time - states[0].time;
    if (!(dt > 0.0)) throw NonuniformSampling("sample times must increase");
    for (std::size_t k = 1; k < states.size(); ++k)
        if (std::abs(states[k].time - states[k - 1].time - dt) > 1e-9 * dt)
            throw NonuniformSampling("sample times are not uniform");
    const double t0 = states.front().time, span = states.back().time - t0;
    TimeWeights tw;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const double tau = (states[k].time - t0) / span;
        tw.w.push_back((k == 0 || k + 1 == states.size()) ? 0.5 * dt : dt);
        tw.chi.push_back((1.0 - tau) * (1.0 - tau));
        tw.dchi.push_back(-2.0 * (1.0 - tau) / span);
    }
    return tw;
}
}  // namespace detail

struct WeakFormResidual {
    std::vector<TestFunction> battery;
    std::vector<double> continuity;  // scalar entries only, NaN elsewhere
    std::vector<double> momentum;    // vector entries only, NaN elsewhere
    std::vector<double> magnetic;
    double max_continuity() const { return max_finite(continuity); }
    double max_momentum() const { return max_finite(momentum); }
    double max_magnetic() const { return max_finite(magnetic); }

private:
    static double max_finite(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v)
            if (std::isfinite(x)) m = std::max(m, x);
        return m;
    }
};

// |initial term + space-time integral| of each weak form, time integrals by the trapezoid rule
// over the stored samples (uniform spacing, first sample is the initial state).
inline WeakFormResidual weak_form_residual(const GalerkinSolver& solver, std::span<const State> states,
                                           const std::vector<TestFunction>& battery) {
    const detail::TimeWeights tw = detail::time_weights(states);
    const TorusGrid& g = solver.grid();
    const double eps = solver.reg().epsilon;
    const std::size_t nb = battery.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    WeakFormResidual r{battery, std::vector<double>(nb, nan), std::vector<double>(nb, nan),
                       std::vector<double>(nb, nan)};

    std::vector<ScalarField> psi;
    std::vector<VectorField> phi, curl_phi;
    for (const auto& t : battery) {
        if (t.component < 0) {
            psi.push_back(detail::test_profile(g, t));
            phi.emplace_back(g);
            curl_phi.emplace_back(g);
        } else {
            psi.emplace_back(g);
            phi.push_back(detail::test_vector(g, t));
            curl_phi.push_back(curl(phi.back()));
        }
    }
    std::vector<double> cont(nb, 0.0), mom(nb, 0.0), mag(nb, 0.0);
    for (std::size_t n = 0; n < states.size(); ++n) {
        const State& s = states[n];
        const double w = tw.w[n], chi = tw.chi[n], dchi = tw.dchi[n];
        const VectorField m = s.rho * s.u;
        const VectorField f = solver.force_density(s.rho, s.u, s.B);
        const VectorField e = cross(s.u, s.B) - magnetic_diffusivity_field(s.rho, solver.phys()) * curl(s.B);
        for (std::size_t j = 0; j < nb; ++j) {
            if (battery[j].component < 0) {
                cont[j] += w * (dchi * inner_product(s.rho, psi[j]) + chi * inner_product(m, gradient(psi[j])) +
                                chi * eps * inner_product(s.rho, laplacian(psi[j])));
            } else {
                mom[j] += w * (dchi * inner_product(m, phi[j]) + chi * inner_product(f, phi[j]));
                mag[j] += w * (dchi * inner_product(s.B, phi[j]) + chi * inner_product(e, curl_phi[j]));
            }
        }
    }
    const State& s0 = states.front();
    const VectorField m0 = s0.rho * s0.u;
    for (std::size_t j = 0; j < nb; ++j) {
        if (battery[j].component < 0) {
            r.continuity[j] = std::abs(cont[j] + inner_product(s0.rho, psi[j]));
        } else {
            r.momentum[j] = std::abs(mom[j] + inner_product(m0, phi[j]));
            r.magnetic[j] = std::abs(mag[j] + inner_product(s0.B, phi[j]));
        }
    }
    return r;
}

}  // namespace qmhd
