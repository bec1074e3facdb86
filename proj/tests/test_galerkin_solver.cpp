#include <catch_amalgamated.hpp>

#include <boost/numeric/odeint.hpp>
#include <random>

#include "qmhd/benchmarks.hpp"
#include "qmhd/solver.hpp"

using namespace qmhd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_diff(const VectorField& a, const VectorField& b) {
    return std::max({max_diff(a[0], b[0]), max_diff(a[1], b[1]), max_diff(a[2], b[2])});
}

ScalarField smooth_density(const TorusGrid& g, std::uint64_t seed, double mean = 1.5, double amp = 0.3,
                           int kmax = 3) {
    std::mt19937_64 rng(seed);
    ScalarField r = detail::random_smooth_field(g, kmax, rng);
    r *= amp;
    r += mean;
    return r;
}

VectorField smooth_vector(const TorusGrid& g, std::uint64_t seed, double amp, int kmax = 3) {
    std::mt19937_64 rng(seed);
    VectorField v(g);
    for (int c = 0; c < 3; ++c) v[c] = amp * detail::random_smooth_field(g, kmax, rng);
    return v;
}

Coeffs random_coeffs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Coeffs c(n);
    for (double& x : c) x = nd(rng);
    return c;
}

double norm(const Coeffs& c) { return as_eigen(c).norm(); }

}  // namespace

TEST_CASE("basis is orthonormal and ordered") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const GalerkinBasis b(g, 40);
    REQUIRE(b.size() == 40);
    const Eigen::MatrixXd gram = mass_matrix(b, ScalarField(g, 1.0));
    CHECK((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff() <= 1e-12);
    // Same Gram by direct grid quadrature of the mode fields.
    for (std::size_t i = 0; i < b.size(); i += 7)
        for (std::size_t j = 0; j < b.size(); j += 5)
            CHECK_THAT(inner_product(b.mode_field(i), b.mode_field(j)), WithinAbs(i == j ? 1.0 : 0.0, 1e-12));
    // Constant modes first, then |k| = 1 shells: k = (0,1) precedes (1,0).
    for (int c = 0; c < 3; ++c) CHECK(b.mode(c).k == std::array<int, 3>{0, 0, 0});
    CHECK(b.mode(3).k == std::array<int, 3>{0, 1, 0});
    CHECK(b.mode(3).kind == TrigKind::Cos);
    CHECK(b.mode(6).kind == TrigKind::Sin);
    CHECK(b.mode(9).k == std::array<int, 3>{1, 0, 0});
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b.k2(i) >= b.k2(i - 1));
    CHECK(GalerkinBasis(g, 40).modes() == b.modes());
}

TEST_CASE("basis modes are Laplacian eigenfunctions") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const GalerkinBasis b = GalerkinBasis::full_band(g);
    for (std::size_t i = 0; i < b.size(); i += 3) {
        const ScalarField& f = b.profile_field(i);
        CHECK(max_diff(laplacian(f), -b.k2(i) * f) <= 1e-11);
    }
}

TEST_CASE("basis size limits and explicit mode lists") {
    const TorusGrid g = TorusGrid::cube(1, 16);
    CHECK(GalerkinBasis::full_band(g).size() == 3 * (2 * 5 + 1));
    CHECK_THROWS_AS(GalerkinBasis(g, 1000), ValidationError);
    CHECK_THROWS_AS(GalerkinBasis(g, std::vector<GalerkinMode>{{{0, 1, 0}, TrigKind::Sin, 1}}), ValidationError);
    CHECK_THROWS_AS(GalerkinBasis(g, std::vector<GalerkinMode>{{{-1, 0, 0}, TrigKind::Sin, 1}}), ValidationError);
    const GalerkinBasis one(g, std::vector<GalerkinMode>{{{1, 0, 0}, TrigKind::Sin, 1}});
    CHECK(one.size() == 1);
    CHECK(GalerkinBasis::with_cutoff(g, 2).size() == 15);
}

TEST_CASE("reconstruction and projection are inverse") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    const GalerkinBasis b(g, 60);
    const Coeffs lam = random_coeffs(b.size(), 2);
    const VectorField u = b.reconstruct(lam);
    const Coeffs back = b.project(u);
    for (std::size_t i = 0; i < lam.size(); ++i) CHECK_THAT(back[i], WithinAbs(lam[i], 1e-12));
    VectorField direct(g);
    for (std::size_t i = 0; i < b.size(); ++i) direct += lam[i] * b.mode_field(i);
    CHECK(max_diff(direct, u) <= 1e-12);
}

TEST_CASE("trig product integrals equal grid quadrature") {
    const TorusGrid g = TorusGrid::cube(2, 24);
    const GalerkinBasis b = GalerkinBasis::full_band(g);
    const ScalarField rho = smooth_density(g, 4);
    const Spectrum w = forward(rho);
    for (std::size_t i = 0; i < b.size(); i += 11)
        for (std::size_t j = 0; j < b.size(); j += 13) {
            const double quad = inner_product(rho, b.profile_field(i) * b.profile_field(j));
            CHECK_THAT(weighted_product_integral(w, b.profile(i), b.profile(j)), WithinAbs(quad, 1e-12));
        }
}

TEST_CASE("mass operator apply, solve and bounds") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    const GalerkinBasis b(g, 21);
    const ScalarField one(g, 1.0);
    const Coeffs v = random_coeffs(b.size(), 8);
    const Coeffs mv = mass_operator_apply(b, one, v);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK_THAT(mv[i], WithinAbs(v[i], 1e-12));

    const ScalarField rho = smooth_density(g, 1);
    const Coeffs back = mass_operator_solve(b, rho, mass_operator_apply(b, rho, v));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK_THAT(back[i], WithinAbs(v[i], 1e-12 * norm(v)));

    // Apply is the Galerkin projection of rho * u.
    const Coeffs proj = b.project(rho * b.reconstruct(v));
    const Coeffs app = mass_operator_apply(b, rho, v);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK_THAT(app[i], WithinAbs(proj[i], 1e-12));

    const double n = double(b.size()), vol = g.volume();
    const Eigen::MatrixXd m = mass_matrix(b, rho);
    CHECK(m.norm() <= n * (2.0 / vol) * integrate(rho.map([](double r) { return std::abs(r); })));

    CHECK_THROWS_AS(mass_operator_solve(b, ScalarField(g, -1.0), v), SingularMass);
}

TEST_CASE("inverse mass operator is Lipschitz in rho") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    const GalerkinBasis b(g, 15);
    const double n = double(b.size()), vol = g.volume();
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const ScalarField r1 = smooth_density(g, seed);
        const ScalarField r2 = smooth_density(g, seed + 100);
        const double floor = std::min(r1.min(), r2.min());
        const Eigen::MatrixXd d = mass_matrix(b, r1).inverse() - mass_matrix(b, r2).inverse();
        const double bound = n * (2.0 / vol) * std::sqrt(vol) * norm_l2(r1 - r2) / (floor * floor);
        CHECK(d.operatorNorm() <= bound);
    }
}

TEST_CASE("momentum residual vanishes on a resting uniform state") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    PhysParams ph;
    RegParams rg;
    rg.epsilon = 0.1;
    rg.eta = 0.01;
    rg.delta = 1e-3;
    const GalerkinSolver sol(GalerkinBasis(g, 30), ph, rg);
    VectorField B(g);
    B[0] += 0.7;
    B[2] += -0.3;
    const Coeffs r = sol.momentum_residual(ScalarField(g, 1.3), VectorField(g), B);
    CHECK(norm(r) <= 1e-12);
}

TEST_CASE("momentum residual matches refined weak-form quadrature") {
    // Pressure, convection and viscosity only; oracle integrates the weak form
    // rho u(x)u : grad e + (P + Pc) div e - 2 rho D(u) : grad e on a 4x grid.
    const int n = 32;
    const TorusGrid g = TorusGrid::cube(1, n), fine = TorusGrid::cube(1, 4 * n);
    PhysParams ph;
    ph.kappa = 0.0;
    RegParams rg;
    const GalerkinBasis b(g, 21);
    const GalerkinSolver sol(b, ph, rg);
    auto rho_f = [](double x, double, double) { return 1.5 + 0.2 * std::cos(x); };
    auto u_f = [](double x, double, double) { return std::array<double, 3>{0.3 * std::sin(x), 0.1 * std::sin(x), 0.0}; };
    const ScalarField rho = ScalarField::from_function(g, rho_f);
    const VectorField u = b.reconstruct(b.project(VectorField::from_function(g, u_f)));
    const Coeffs res = sol.momentum_residual(rho, u, VectorField(g));

    const ScalarField rf = ScalarField::from_function(fine, rho_f);
    const VectorField uf = VectorField::from_function(fine, u_f);
    const ScalarField pf = rf.map([&](double r) { return pressure(r, ph) + cold_pressure(r, ph); });
    const GalerkinBasis bf(fine, b.modes());
    const TensorField gu = jacobian(uf);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const VectorField e = bf.mode_field(i);
        const TensorField ge = jacobian(e);
        double acc = inner_product(pf, divergence(e));
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                acc += inner_product(rf * uf[a] * uf[c], ge[a][c]);
                acc -= inner_product(rf * (gu[a][c] + gu[c][a]), ge[a][c]);
            }
        CHECK_THAT(res[i], WithinAbs(acc, 1e-10));
    }
}

TEST_CASE("Lorentz entries against closed-form integrals") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    ph.kappa = 0.0;
    const GalerkinBasis b = GalerkinBasis::full_band(g);
    const GalerkinSolver sol(b, ph, RegParams{});
    const auto B = VectorField::from_function(g, [](double x, double, double) {
        return std::array<double, 3>{0.0, std::sin(x), 0.0};
    });
    const Coeffs r = sol.momentum_residual(ScalarField(g, 1.0), VectorField(g), B);
    // (curl B) x B = -(sin x cos x, 0, 0) = -(sin 2x / 2, 0, 0).
    const double expected = -0.5 * std::sqrt(2.0 / g.volume()) * g.volume() / 2.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto& m = b.mode(i);
        const bool hit = m.k == std::array<int, 3>{2, 0, 0} && m.kind == TrigKind::Sin && m.component == 0;
        CHECK_THAT(r[i], WithinAbs(hit ? expected : 0.0, 1e-12));
    }
}

TEST_CASE("capillarity strong form equals the transposed weak form") {
    for (int s : {1, 2}) {
        const TorusGrid g = TorusGrid::cube(2, 16);
        PhysParams ph;
        ph.kappa = 0.0;
        RegParams rg;
        rg.delta = 1e-3;
        rg.s = s;
        const GalerkinBasis b(g, 40);
        const GalerkinSolver with(b, ph, rg);
        rg.delta = 0.0;
        const GalerkinSolver without(b, ph, rg);
        const ScalarField rho = smooth_density(g, 12);
        const Coeffs full = with.momentum_residual(rho, VectorField(g), VectorField(g));
        const Coeffs base = without.momentum_residual(rho, VectorField(g), VectorField(g));
        const Coeffs weak = with.capillarity_weak_form(rho);
        double scale = 0.0;
        for (double w : weak) scale = std::max(scale, std::abs(w));
        for (std::size_t i = 0; i < b.size(); ++i)
            CHECK_THAT(full[i] - base[i], WithinAbs(weak[i], 1e-11 * scale + 1e-13));
    }
}

TEST_CASE("density step: heat kernel, rest and mass") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    RegParams rg;
    rg.epsilon = 0.1;
    rg.dt = 0.01;
    const GalerkinSolver sol(GalerkinBasis(g, 9), ph, rg);
    const auto rho = ScalarField::from_function(g, [](double x, double, double) { return 2 + std::cos(x); });
    const ScalarField next = sol.solve_density_step(rho, VectorField(g));
    const Spectrum a = forward(rho), c = forward(next);
    CHECK_THAT(std::abs(c.at({1, 0, 0})), WithinRel(std::abs(a.at({1, 0, 0})) * std::exp(-0.1 * 0.01), 1e-12));
    CHECK_THAT(c.at({0, 0, 0}).real(), WithinRel(2.0, 1e-14));
    const ScalarField flat(g, 1.25);
    CHECK(max_diff(sol.solve_density_step(flat, VectorField(g)), flat) <= 1e-15);

    const VectorField u = smooth_vector(g, 3, 0.5);
    const ScalarField moved = sol.solve_density_step(rho, dealias(u));
    CHECK_THAT(integrate(moved), WithinRel(integrate(rho), 1e-12));
}

TEST_CASE("density step matches a refined RK4 advection reference") {
    const int n = 32;
    const TorusGrid g = TorusGrid::cube(1, n), fine = TorusGrid::cube(1, 4 * n);
    PhysParams ph;
    RegParams rg;
    rg.dt = 0.01;
    rg.picard_tol = 1e-14;
    const GalerkinSolver sol(GalerkinBasis(g, 9), ph, rg);
    auto rho_f = [](double x, double, double) { return 1.0 + 0.3 * std::cos(x); };
    auto u_f = [](double x, double, double) { return std::array<double, 3>{0.5 * std::sin(x), 0.0, 0.0}; };
    ScalarField rho = ScalarField::from_function(g, rho_f);
    const VectorField u = VectorField::from_function(g, u_f);
    for (int k = 0; k < 10; ++k) rho = sol.solve_density_step(rho, u);

    ScalarField r = ScalarField::from_function(fine, rho_f);
    const VectorField uf = VectorField::from_function(fine, u_f);
    auto rhs = [&](const ScalarField& q) { return -1.0 * divergence(q * uf); };
    const double h = rg.dt / 100;
    for (int k = 0; k < 1000; ++k) {
        const ScalarField k1 = rhs(r);
        const ScalarField k2 = rhs(r + 0.5 * h * k1);
        const ScalarField k3 = rhs(r + 0.5 * h * k2);
        const ScalarField k4 = rhs(r + h * k3);
        r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const Spectrum a = forward(rho), b = forward(r);
    for (int k = -8; k <= 8; ++k) CHECK(std::abs(a.at({k, 0, 0}) - b.at({k, 0, 0})) <= 1e-5);
}

TEST_CASE("density step rejects corridor breaches and floor violations") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    RegParams rg;
    rg.dt = 0.5;
    const GalerkinSolver sol(GalerkinBasis(g, 9), ph, rg);
    const auto u = VectorField::from_function(g, [](double x, double, double) {
        return std::array<double, 3>{3.0 * std::sin(x), 0.0, 0.0};
    });
    CHECK_THROWS_AS(sol.solve_density_step(ScalarField(g, 1.0), u), Error);
    CHECK_THROWS_AS(sol.solve_density_step(ScalarField(g, 1e-9), VectorField(g)), DensityFloorViolation);
}

TEST_CASE("magnetic step: modal decay and zero field") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    RegParams rg;
    rg.dt = 0.01;
    const GalerkinSolver sol(GalerkinBasis(g, 9), ph, rg);
    const ScalarField rho(g, 0.8);
    const double nu = magnetic_diffusivity(0.8, ph);
    const auto B = VectorField::from_function(g, [](double x, double, double) {
        return std::array<double, 3>{0.0, 0.0, std::sin(x) + 0.5 * std::cos(3 * x)};
    });
    const VectorField next = sol.solve_magnetic_step(B, VectorField(g), rho);
    const Spectrum a = forward(B[2]), c = forward(next[2]);
    CHECK_THAT(std::abs(c.at({1, 0, 0})), WithinRel(std::abs(a.at({1, 0, 0})) * std::exp(-nu * 0.01), 1e-12));
    CHECK_THAT(std::abs(c.at({3, 0, 0})), WithinRel(std::abs(a.at({3, 0, 0})) * std::exp(-9 * nu * 0.01), 1e-12));
    const VectorField zero = sol.solve_magnetic_step(VectorField(g), smooth_vector(g, 1, 0.3), rho);
    CHECK(zero.max_norm() == 0.0);
}

TEST_CASE("magnetic step: determinism and Gronwall envelope") {
    const TorusGrid g = TorusGrid::cube(2, 16);
    PhysParams ph;
    RegParams rg;
    rg.dt = 0.005;
    const GalerkinSolver sol(GalerkinBasis(g, 9), ph, rg);
    const ScalarField rho = smooth_density(g, 5, 1.0, 0.3);
    const VectorField u = dealias(smooth_vector(g, 6, 0.5));
    const VectorField B0 = project_divergence_free(dealias(smooth_vector(g, 7, 0.4)));
    VectorField pert = project_divergence_free(dealias(smooth_vector(g, 8, 1.0)));
    pert *= 1e-10 / norm_l2(pert);
    VectorField a = B0, b = B0, c = B0 + pert;
    const double d0 = norm_l2(pert);
    // Energy estimate: d/dt ||dB||^2 <= C ||grad u||_inf ||dB||^2 with C = 2 for the stretching term.
    double gu = 0.0;
    for (const auto& row : jacobian(u))
        for (const auto& f : row) gu = std::max(gu, f.max_abs());
    for (int k = 1; k <= 40; ++k) {
        a = sol.solve_magnetic_step(a, u, rho);
        b = sol.solve_magnetic_step(b, u, rho);
        c = sol.solve_magnetic_step(c, u, rho);
        for (int i = 0; i < 3; ++i) CHECK(a[i].values() == b[i].values());
        CHECK(norm_l2(c - a) <= d0 * std::exp(3.0 * gu * k * rg.dt) * (1 + 1e-6));
    }
    CHECK(norm_l2(divergence(a)) <= 1e-12 * norm_l2(a));
}

TEST_CASE("resting uniform state is a fixed point") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    RegParams rg;
    rg.epsilon = 0.05;
    rg.eta = 0.01;
    rg.delta = 1e-4;
    const GalerkinSolver sol(GalerkinBasis::full_band(g), ph, rg);
    VectorField B(g);
    B[0] += 0.5;
    B[1] += 0.2;
    const State s0 = sol.make_state(ScalarField(g, 1.2), VectorField(g), B);
    StepStats st;
    const State s1 = sol.advance_step(s0, &st);
    CHECK(max_diff(s1.rho, s0.rho) <= 1e-13);
    CHECK(norm(s1.lambda) <= 1e-13);
    CHECK(max_diff(s1.B, s0.B) <= 1e-13);
    CHECK(s1.time == rg.dt);
}

TEST_CASE("single-mode system follows the reduced ODE") {
    // u = lambda e(x) y, e = sqrt(2/V) sin x; B = (B0, beta sqrt(2/V) cos x, 0); rho uniform.
    // rho lambda' = -(rho + eta) lambda - B0 beta, beta' = B0 lambda - nu beta.
    const TorusGrid g = TorusGrid::cube(1, 16);
    const double rho0 = 1.0, b0 = 1.0, eta = 0.05;
    PhysParams ph;
    ph.kappa = 0.3;
    ph.nu.d0 = 0.5;
    ph.nu.d2 = ph.nu.continuous_d2();
    RegParams rg;
    rg.eta = eta;
    rg.epsilon = 0.02;
    rg.delta = 1e-3;
    rg.dt = 1e-3;
    rg.picard_tol = 1e-13;
    const GalerkinBasis b(g, std::vector<GalerkinMode>{{{1, 0, 0}, TrigKind::Sin, 1}});
    const GalerkinSolver sol(b, ph, rg);
    const double nrm = std::sqrt(2.0 / g.volume());
    const double beta0 = 0.5;
    const auto B = VectorField::from_function(g, [&](double x, double, double) {
        return std::array<double, 3>{b0, beta0 * nrm * std::cos(x), 0.0};
    });
    State s = sol.make_state(ScalarField(g, rho0), Coeffs{1.0}, B);
    const double nu = magnetic_diffusivity(rho0, ph);

    using Vec = std::array<double, 2>;
    auto rhs = [&](const Vec& y, Vec& dy, double) {
        dy[0] = (-(rho0 + eta) * y[0] - b0 * y[1]) / rho0;
        dy[1] = b0 * y[0] - nu * y[1];
    };
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<Vec>());
    Vec y{1.0, beta0};
    double t = 0.0, max_err = 0.0;
    for (int k = 1; k <= 1000; ++k) {
        StepStats st;
        s = sol.advance_step(s, &st);
        ode::integrate_adaptive(stepper, rhs, y, t, k * rg.dt, 1e-4);
        t = k * rg.dt;
        max_err = std::max(max_err, std::abs(s.lambda[0] - y[0]));
        CHECK(st.max_ratio < 1.0);
    }
    CHECK(max_err <= 1e-6);
}

TEST_CASE("time reversal recovers the state") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    ph.kappa = 0.0;
    RegParams rg;
    rg.picard_tol = 1e-14;
    const GalerkinSolver sol(GalerkinBasis(g, 15), ph, rg);
    const auto rho = ScalarField::from_function(g, [](double x, double, double) { return 1.5 + 0.3 * std::cos(x); });
    const auto u = VectorField::from_function(g, [](double x, double, double) {
        return std::array<double, 3>{0.2 * std::sin(x), 0.1 * std::cos(x), 0.0};
    });
    const State s0 = sol.make_state(rho, u, VectorField(g));
    std::vector<double> err;
    for (double dt : {0.02, 0.01}) {
        const State fwd = sol.advance_step(s0, nullptr, dt);
        const State back = sol.advance_step(fwd, nullptr, -dt);
        err.push_back(norm_l2(back.rho - s0.rho) + as_eigen(back.lambda).operator-(as_eigen(s0.lambda)).norm());
    }
    // Symmetric scheme: reversal is exact up to the fixed-point tolerance.
    for (double e : err) CHECK(e <= 1e-12);
}

TEST_CASE("run_simulation: zero span, constant state and determinism") {
    const TorusGrid g = TorusGrid::cube(1, 32);
    PhysParams ph;
    RegParams rg;
    rg.epsilon = 0.01;
    rg.dt = 0.01;
    const GalerkinSolver sol(GalerkinBasis(g, 15), ph, rg);
    VectorField B(g);
    B[0] += 0.3;
    const State rest = sol.make_state(ScalarField(g, 1.1), VectorField(g), B);
    const Trajectory z = run_simulation(sol, rest, 0.0);
    REQUIRE(z.states.size() == 1);
    CHECK(z.states[0].rho.values() == rest.rho.values());
    CHECK_THROWS_AS(run_simulation(sol, rest, -1.0), UsageError);

    const Trajectory c = run_simulation(sol, rest, 1.0);
    REQUIRE(c.states.size() == 101);
    for (const auto& s : c.states) {
        CHECK(max_diff(s.rho, rest.rho) <= 1e-12);
        CHECK(max_diff(s.B, rest.B) <= 1e-12);
    }
    CHECK_THAT(c.states.back().time, WithinAbs(1.0, 1e-14));

    const InitialData init = make_benchmark(BenchmarkId::RandomSmooth, g, BenchmarkParams{});
    const State s0 = sol.make_state(init.rho, init.u, init.B);
    const Trajectory a = run_simulation(sol, s0, 0.105);
    const Trajectory b = run_simulation(sol, s0, 0.105);
    REQUIRE(a.states.size() == 12);
    CHECK_THAT(a.states.back().time, WithinAbs(0.105, 1e-15));
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK(a.states[k].rho.values() == b.states[k].rho.values());
        CHECK(a.states[k].lambda == b.states[k].lambda);
    }
    for (const auto& st : a.stats) CHECK(st.max_ratio < 1.0);
}
