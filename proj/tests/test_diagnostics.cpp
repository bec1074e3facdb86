#include <catch_amalgamated.hpp>

#include <random>

#include "qmhd/benchmarks.hpp"
#include "qmhd/diagnostics.hpp"

using namespace qmhd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScalarField bump(const TorusGrid& g) {
    return ScalarField::from_function(g, [](double x, double, double) { return 2.0 + std::cos(x); });
}

VectorField random_band(const TorusGrid& g, std::uint64_t seed, double amp, int kmax = 3) {
    std::mt19937_64 rng(seed);
    VectorField v(g);
    for (int c = 0; c < 3; ++c) v[c] = amp * detail::random_smooth_field(g, kmax, rng);
    return v;
}

State constant_state(const TorusGrid& g, double rho, std::array<double, 3> b) {
    State s{0.0, ScalarField(g, rho), {}, VectorField(g), VectorField(g)};
    for (int c = 0; c < 3; ++c) s.B[c] += b[c];
    return s;
}

PhysParams phys_with_kappa(double kappa) {
    PhysParams p;
    p.kappa = kappa;
    return p;
}

RegParams full_reg() {
    RegParams r;
    r.epsilon = 0.05;
    r.eta = 0.01;
    r.delta = 1e-3;
    return r;
}

}  // namespace

TEST_CASE("energy and dissipation of a constant state") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const PhysParams ph = phys_with_kappa(0.2);
    const RegParams rg = full_reg();
    for (double rho : {0.5, 1.0, 2.5}) {
        const State s = constant_state(g, rho, {0.3, -0.4, 0.1});
        const EnergyReport e = compute_energy(s, ph, rg);
        const double v = g.volume();
        CHECK(e.kinetic == 0.0);
        CHECK(e.quantum == 0.0);
        CHECK(e.capillary == 0.0);
        CHECK_THAT(e.internal, WithinRel(enthalpy_H(rho, ph) * v, 1e-14));
        CHECK_THAT(e.cold, WithinAbs(enthalpy_Hc(rho, ph) * v, 1e-14 * v + 1e-14 * e.cold));
        CHECK_THAT(e.magnetic, WithinRel(0.5 * 0.26 * v, 1e-14));
        CHECK_THAT(e.total(), WithinRel(e.internal + e.cold + e.magnetic, 1e-15));
        const DissipationReport d = compute_dissipation(s, ph, rg);
        CHECK(d.total() == 0.0);
        const BDEntropyReport bd = compute_bd_terms(s, ph, rg);
        for (double t : bd.lhs) CHECK(t == 0.0);
        for (double t : bd.rhs) CHECK(t == 0.0);
        CHECK_THAT(bd.bd_energy, WithinRel(e.total(), 1e-14));
    }
}

TEST_CASE("kinetic energy of a single orthonormal mode") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const GalerkinBasis b(g, 20);
    const double alpha = 0.37;
    Coeffs lam(b.size(), 0.0);
    lam[11] = alpha;
    const State s{0.0, ScalarField(g, 1.0), lam, b.reconstruct(lam), VectorField(g)};
    CHECK_THAT(compute_energy(s, PhysParams{}, RegParams{}).kinetic, WithinRel(0.5 * alpha * alpha, 1e-13));
}

TEST_CASE("functionals agree with refined quadrature") {
    // Oracle: literal formulas on a 4x grid.
    const TorusGrid g = TorusGrid::cube(1, 64), fine = TorusGrid::cube(1, 256);
    const PhysParams ph = phys_with_kappa(0.3);
    RegParams rg = full_reg();
    auto u_f = [](double x, double, double) {
        return std::array<double, 3>{0.2 * std::sin(x), 0.1 * std::cos(2 * x), 0.05};
    };
    auto b_f = [](double x, double, double) { return std::array<double, 3>{0.4, 0.3 * std::cos(x), 0.2 * std::sin(x)}; };
    const State s{0.0, bump(g), {}, VectorField::from_function(g, u_f), VectorField::from_function(g, b_f)};
    const EnergyReport e = compute_energy(s, ph, rg);
    const DissipationReport d = compute_dissipation(s, ph, rg);

    const ScalarField r = bump(fine);
    const VectorField u = VectorField::from_function(fine, u_f), B = VectorField::from_function(fine, b_f);
    auto rx = [&](double x) { return -std::sin(x); };
    const ScalarField drho = ScalarField::from_function(fine, [&](double x, double, double) { return rx(x); });
    const ScalarField d2rho = ScalarField::from_function(fine, [](double x, double, double) { return -std::cos(x); });
    const double k2 = ph.kappa * ph.kappa;

    CHECK_THAT(e.kinetic, WithinAbs(0.5 * inner_product(r, dot(u, u)), 1e-10));
    CHECK_THAT(e.internal, WithinAbs(integrate(r.map([&](double q) { return enthalpy_H(q, ph); })), 1e-10));
    CHECK_THAT(e.cold, WithinAbs(integrate(r.map([&](double q) { return enthalpy_Hc(q, ph); })), 1e-10));
    // |grad sqrt rho|^2 = |rho'|^2 / (4 rho).
    CHECK_THAT(e.quantum, WithinAbs(2 * k2 * integrate(drho * drho * r.map([](double q) { return 0.25 / q; })), 1e-10));
    CHECK_THAT(e.magnetic, WithinAbs(0.5 * inner_product(B, B), 1e-10));
    // d^3/dx^3 cos x = sin x.
    CHECK_THAT(e.capillary, WithinAbs(0.5 * rg.delta * inner_product(drho, drho), 1e-10));

    // D(u) in 1D: only the x-derivatives of u enter.
    const ScalarField ux = ScalarField::from_function(fine, [](double x, double, double) { return 0.2 * std::cos(x); });
    const ScalarField vx = ScalarField::from_function(fine, [](double x, double, double) { return -0.2 * std::sin(2 * x); });
    const double dsq = inner_product(r, ux * ux) + 0.5 * inner_product(r, vx * vx);
    CHECK_THAT(d.viscous, WithinAbs(2.0 * dsq, 1e-10));
    const ScalarField w = r.map([&](double q) { return (pressure_derivative(q, ph) + cold_pressure_derivative(q, ph)) / q; });
    CHECK_THAT(d.pressure_diss, WithinAbs(rg.epsilon * inner_product(w, drho * drho), 1e-10));
    const ScalarField jy = ScalarField::from_function(fine, [](double x, double, double) { return -0.2 * std::cos(x); });
    const ScalarField jz = ScalarField::from_function(fine, [](double x, double, double) { return -0.3 * std::sin(x); });
    CHECK_THAT(d.magnetic_diss,
               WithinAbs(inner_product(magnetic_diffusivity_field(r, ph), jy * jy + jz * jz), 1e-10));
    const ScalarField lux = ScalarField::from_function(fine, [](double x, double, double) { return -0.2 * std::sin(x); });
    const ScalarField luy = ScalarField::from_function(fine, [](double x, double, double) { return -0.4 * std::cos(2 * x); });
    CHECK_THAT(d.hyper, WithinAbs(rg.eta * (inner_product(lux, lux) + inner_product(luy, luy)), 1e-10));
    // Lap^2 cos x = cos x.
    CHECK_THAT(d.capillary_diss, WithinAbs(rg.delta * rg.epsilon * inner_product(d2rho, d2rho), 1e-10));
    // (log rho)'' = rho''/rho - rho'^2/rho^2.
    ScalarField h(fine);
    for (std::size_t p = 0; p < fine.size(); ++p) h[p] = d2rho[p] / r[p] - drho[p] * drho[p] / (r[p] * r[p]);
    CHECK_THAT(d.quantum_diss, WithinAbs(rg.epsilon * k2 * inner_product(r, h * h), 1e-10));
}

TEST_CASE("derivative tensor norm equals the literal tensor sum") {
    const TorusGrid g = TorusGrid::cube(2, 24);
    std::mt19937_64 rng(9);
    const ScalarField f = detail::random_smooth_field(g, 4, rng);
    double literal = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const ScalarField d = derivative(derivative(derivative(f, i), j), k);
                literal += inner_product(d, d);
            }
    CHECK_THAT(derivative_tensor_norm_sq(f, 3), WithinRel(literal, 1e-12));
    RegParams rg;
    rg.delta = 0.02;
    CHECK_THAT(capillary_energy(f, rg), WithinRel(0.01 * literal, 1e-12));
}

TEST_CASE("dissipation entries are nonnegative on random states") {
    const TorusGrid g = TorusGrid::cube(2, 24);
    const PhysParams ph = phys_with_kappa(0.2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const InitialData d = make_benchmark(BenchmarkId::RandomSmooth, g, BenchmarkParams{.seed = seed});
        const State s{0.0, d.rho, {}, d.u, d.B};
        const DissipationReport r = compute_dissipation(s, ph, full_reg());
        for (double t : {r.viscous, r.pressure_diss, r.magnetic_diss, r.hyper, r.capillary_diss, r.quantum_diss})
            CHECK(t >= 0.0);
        const BDEntropyReport bd = compute_bd_terms(s, ph, full_reg());
        for (double t : bd.lhs) CHECK(t >= 0.0);
    }
}

TEST_CASE("entropy spot identity") {
    const TorusGrid g = TorusGrid::cube(2, 32);
    const InitialData d = make_benchmark(BenchmarkId::RandomSmooth, g, BenchmarkParams{.rho_mean = 2.0});
    const State s{0.0, d.rho, {}, d.u, d.B};
    const BDEntropyReport bd = compute_bd_terms(s, phys_with_kappa(0.1), full_reg());
    CHECK_THAT(bd.rhs[0], WithinAbs(bd.spot_first_rhs, 1e-10 * std::abs(bd.spot_first_rhs)));
    CHECK(bd.spot_first_rhs < 0.0);
}

TEST_CASE("identity residuals: sampling checks and a resting state") {
    const TorusGrid g = TorusGrid::cube(1, 16);
    std::vector<State> st(4, constant_state(g, 1.3, {0.2, 0.0, 0.0}));
    for (int k = 0; k < 4; ++k) st[k].time = 0.1 * k;
    for (const auto& r : energy_identity_residual(st, PhysParams{}, full_reg())) CHECK(r.residual == 0.0);
    for (const auto& r : bd_entropy_residual(st, PhysParams{}, full_reg())) CHECK(r.residual == 0.0);
    st[2].time = 0.25;
    CHECK_THROWS_AS(energy_identity_residual(st, PhysParams{}, full_reg()), NonuniformSampling);
    CHECK_THROWS_AS(bd_entropy_residual(std::span(st).first(2), PhysParams{}, full_reg()), NonuniformSampling);
}

TEST_CASE("energy residual of exact Beltrami decay") {
    // B = b (0, sin x, cos x) with uniform rho carries no force and decays as exp(-nu t);
    // the centered difference of exp(-2 nu t) misses the exact slope by sinh(a)/a - 1, a = 2 nu dt.
    const TorusGrid g = TorusGrid::cube(1, 16);
    PhysParams ph;
    ph.kappa = 0.0;
    const double nu = magnetic_diffusivity(1.0, ph), dt = 0.01, b = 0.3;
    std::vector<State> st;
    for (int k = 0; k < 5; ++k) {
        const double t = k * dt, a = b * std::exp(-nu * t);
        st.push_back({t, ScalarField(g, 1.0), {}, VectorField(g),
                      VectorField::from_function(g, [&](double x, double, double) {
                          return std::array<double, 3>{0.0, a * std::sin(x), a * std::cos(x)};
                      })});
    }
    const auto res = energy_identity_residual(st, ph, RegParams{});
    const double a2 = 2 * nu * dt;
    for (std::size_t k = 0; k < res.size(); ++k) {
        const double diss = compute_dissipation(st[k + 1], ph, RegParams{}).magnetic_diss;
        CHECK_THAT(diss, WithinRel(nu * b * b * std::exp(-2 * nu * st[k + 1].time) * g.volume(), 1e-13));
        CHECK_THAT(res[k].residual, WithinAbs(-diss * (std::sinh(a2) / a2 - 1.0), 1e-12));
    }
}

TEST_CASE("Bohm check trivial cases") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const BohmCheck c = bohm_identity_check(ScalarField(g, 1.7), 0.3);
    CHECK(c.primary_vs_divergence <= 1e-14);
    CHECK(c.log_vs_divergence <= 1e-14);
    const BohmCheck z = bohm_identity_check(bump(g), 0.0);
    CHECK(z.primary_vs_divergence == 0.0);
}

TEST_CASE("quantum inequality record") {
    const TorusGrid g = TorusGrid::cube(1, 64);
    const QuantumInequality c = quantum_inequality_check(ScalarField(g, 3.0));
    CHECK(c.hess_sqrt <= 1e-25);
    CHECK(c.rho_hess_log <= 1e-25);
    const QuantumInequality q = quantum_inequality_check(bump(g));
    for (double v : {q.hess_sqrt, q.grad_quarter4, q.rho_grad_log, q.rho_hess_log}) CHECK(v > 0.0);
    // Every integral is homogeneous of degree one under rho -> c rho.
    const QuantumInequality s = quantum_inequality_check(5.0 * bump(g));
    CHECK_THAT(s.hess_sqrt, WithinRel(5.0 * q.hess_sqrt, 1e-10));
    CHECK_THAT(s.grad_quarter4, WithinRel(5.0 * q.grad_quarter4, 1e-10));
    CHECK_THAT(s.rho_hess_log, WithinRel(5.0 * q.rho_hess_log, 1e-10));
    CHECK_THAT(s.c1_second, WithinRel(q.c1_second, 1e-10));
    CHECK_THROWS_AS(quantum_inequality_check(ScalarField(g, 0.0)), DensityFloorViolation);
}

TEST_CASE("norm monitor closed forms and dealias monotonicity") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const PhysParams ph;
    const State s = constant_state(g, 1.6, {0.0, 0.5, 0.0});
    const NormMonitor m = norm_monitor(s, ph, RegParams{});
    const double v = g.volume();
    CHECK_THAT(m.rho_lgamma, WithinRel(1.6 * std::pow(v, 1 / ph.gamma), 1e-13));
    CHECK_THAT(m.rho_inv_lgm, WithinRel(std::pow(v, 1 / ph.gamma_minus) / 1.6, 1e-13));
    CHECK_THAT(m.b_l2, WithinRel(0.5 * std::sqrt(v), 1e-13));
    CHECK_THAT(m.sqrt_rho_h2, WithinRel(std::sqrt(1.6 * v), 1e-13));
    CHECK_THAT(m.rho_inv_linf, WithinRel(1 / 1.6, 1e-15));
    CHECK(m.grad_sqrt_rho == 0.0);
    CHECK(m.sqrt_rho_u == 0.0);
    CHECK(m.grad_b == 0.0);

    const VectorField r = random_band(g, 3, 1.0, 7);
    for (int c = 0; c < 3; ++c) CHECK(norm_l2(dealias(r[c])) <= norm_l2(r[c]));
}

TEST_CASE("Lorentz work equals minus induction work") {
    const TorusGrid g = TorusGrid::cube(2, 32);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const VectorField u = random_band(g, seed, 0.5), B = random_band(g, seed + 10, 0.5);
        const double lhs = inner_product(cross(curl(B), B), u);
        const double rhs = -inner_product(curl(cross(u, B)), B);
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-10));
    }
}

TEST_CASE("pressure work chain") {
    const TorusGrid g = TorusGrid::cube(2, 64);
    const PhysParams ph;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const InitialData d = make_benchmark(BenchmarkId::RandomSmooth, g,
                                             BenchmarkParams{.rho_mean = 2.0, .seed = seed});
        const ScalarField& rho = d.rho;
        const ScalarField p = rho.map([&](double r) { return pressure(r, ph) + cold_pressure(r, ph); });
        const ScalarField h = rho.map([&](double r) { return enthalpy_H_prime(r, ph) + enthalpy_Hc_prime(r, ph); });
        const double lhs = inner_product(gradient(p), d.u);
        const double rhs = -inner_product(h, divergence(rho * d.u));
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-10));
    }
}

TEST_CASE("weak-form residuals") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph = phys_with_kappa(0.1);
    RegParams rg;
    rg.eta = 0.01;
    rg.dt = 0.01;
    rg.picard_tol = 1e-13;
    const GalerkinSolver sol(GalerkinBasis::full_band(g), ph, rg);
    const auto battery = default_battery(g, 2);
    CHECK(battery.size() == 4 * 5);

    VectorField B(g);
    B[1] += 0.4;
    const Trajectory rest = run_simulation(sol, sol.make_state(ScalarField(g, 1.2), VectorField(g), B), 0.1);
    const WeakFormResidual r0 = weak_form_residual(sol, rest.states, battery);
    CHECK(r0.max_continuity() <= 1e-12);
    CHECK(r0.max_momentum() <= 1e-12);
    CHECK(r0.max_magnetic() <= 1e-12);
    CHECK(weak_form_residual(sol, rest.states, {}).continuity.empty());

    const InitialData d = make_benchmark(BenchmarkId::DensityBump, g,
                                         BenchmarkParams{.rho_mean = 2.0, .velocity_amplitude = 0.2});
    std::vector<double> mom, mag;
    for (double dt : {0.02, 0.01, 0.005}) {
        rg.dt = dt;
        const GalerkinSolver sd(GalerkinBasis::full_band(g), ph, rg);
        const Trajectory t = run_simulation(sd, sd.make_state(d.rho, d.u, d.B), 0.2);
        const WeakFormResidual r = weak_form_residual(sd, t.states, battery);
        CHECK(r.max_continuity() <= 1e-9);
        mom.push_back(r.max_momentum());
        mag.push_back(r.max_magnetic());
    }
    // Second order in dt on the fixed battery.
    for (int k = 0; k < 2; ++k) {
        CHECK(mom[k + 1] * 3.5 <= mom[k]);
        CHECK(mag[k + 1] * 3.5 <= mag[k]);
    }
}
