#pragma once

#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <vector>

#include "qmhd/state.hpp"

namespace qmhd {

struct StepStats {
    int iterations = 0;
    std::vector<double> changes;  // max relative update per iteration
    std::vector<double> ratios;   // successive change ratios
    double max_ratio = 0.0;
    double corridor_low = 0.0;
    double corridor_high = 0.0;
};

struct CflReport {
    double advective = 0.0;     // max|u| dt / h
    double viscous = 0.0;       // dt max(rho) k^2
    double hyper = 0.0;         // dt eta k^4
    double capillary = 0.0;     // dt^2 delta max(rho)^2 k^(4s+4)
    double magnetic = 0.0;      // dt max(nu_b) k^2
};

// Faedo-Galerkin time stepper for the regularized system on one basis.
class GalerkinSolver {
public:
    GalerkinSolver(GalerkinBasis basis, PhysParams phys, RegParams reg)
        : basis_(std::move(basis)), phys_(phys), reg_(reg) {
        phys_.validate();
        reg_.validate();
    }

    const GalerkinBasis& basis() const { return basis_; }
    const TorusGrid& grid() const { return basis_.grid(); }
    const PhysParams& phys() const { return phys_; }
    const RegParams& reg() const { return reg_; }

    // Initial state: rho0 kept as given, u0 projected onto the basis, B0 made solenoidal.
    State make_state(const ScalarField& rho0, const VectorField& u0, const VectorField& B0,
                     double t0 = 0.0) const {
        if (!rho0.all_finite() || !u0.all_finite() || !B0.all_finite())
            throw NonFiniteInput("initial data has non-finite samples");
        if (rho0.min() < 10.0 * reg_.density_floor)
            throw ValidationError("initial.rho", "min density must be at least 10x the density floor");
        State s;
        s.time = t0;
        s.rho = rho0;
        s.lambda = basis_.project(u0);
        s.u = basis_.reconstruct(s.lambda);
        s.B = project_divergence_free(B0);
        return s;
    }

    State make_state(const ScalarField& rho0, const Coeffs& lambda0, const VectorField& B0,
                     double t0 = 0.0) const {
        State s = make_state(rho0, VectorField(rho0.grid()), B0, t0);
        if (lambda0.size() != basis_.size()) throw Error("initial coefficients do not match basis");
        s.lambda = lambda0;
        s.u = basis_.reconstruct(s.lambda);
        return s;
    }

    // -div(rho u) with the product dealiased.
    Spectrum density_rhs(const ScalarField& rho, const VectorField& u) const {
        VectorField m = rho * u;
        m = dealias(m);
        Spectrum s = divergence_spectrum(m);
        for (std::size_t p = 0; p < s.size(); ++p) s[p] = -s[p];
        return s;
    }

    // Integrating-factor trapezoid for rho_t + div(rho u) = eps Lap rho with rho in the
    // implicit slot taken from rho_guess.
    ScalarField density_update(const ScalarField& rho_old, const Spectrum& a_old,
                               const ScalarField& rho_guess, const VectorField& u_new, double dt) const {
        const Spectrum r_old = forward(rho_old);
        const Spectrum a_new = density_rhs(rho_guess, u_new);
        Spectrum out(grid());
        const double eps = reg_.epsilon;
        for_each_mode(grid(), [&](std::size_t p, const auto& k, const auto&) {
            const double e = std::exp(-eps * ksq(k) * dt);
            out[p] = e * r_old[p] + 0.5 * dt * (e * a_old[p] + a_new[p]);
        });
        return inverse(out);
    }

    // One step of the continuity equation with u frozen over the step.
    ScalarField solve_density_step(const ScalarField& rho_old, const VectorField& u,
                                   std::optional<double> dt_override = std::nullopt) const {
        const double dt = dt_override.value_or(reg_.dt);
        require_density_floor(rho_old, reg_.density_floor);
        const Spectrum a_old = density_rhs(rho_old, u);
        ScalarField rho = rho_old;
        const double scale = norm_l2(rho_old);
        for (int it = 0;; ++it) {
            ScalarField next = density_update(rho_old, a_old, rho, u, dt);
            const double change = norm_l2(next - rho) / scale;
            rho = std::move(next);
            if (change <= reg_.picard_tol) break;
            if (it + 1 >= reg_.picard_max_iters) throw PicardDivergence("density step did not converge");
        }
        check_density(rho_old, rho, u, u, dt, nullptr);
        return rho;
    }

    // curl(u x B) - curl((nu_b(rho) - nu_ref) curl B) with products dealiased.
    VectorField magnetic_rhs(const VectorField& B, const VectorField& u, const ScalarField& rho,
                             double nu_ref) const {
        VectorField out = curl(dealias(cross(u, B)));
        ScalarField dnu = magnetic_diffusivity_field(rho, phys_);
        dnu += -nu_ref;
        VectorField j = curl(B);
        j *= dnu;
        out -= curl(dealias(j));
        return out;
    }

    // Integrating-factor trapezoid for the induction equation with implicit
    // diffusivity nu_ref = min nu_b(rho); the remainder is iterated with a
    // diagonal preconditioner.
    VectorField solve_magnetic_step(const VectorField& B_old, const VectorField& u, const ScalarField& rho,
                                    std::optional<double> dt_override = std::nullopt) const {
        const double dt = dt_override.value_or(reg_.dt);
        require_density_floor(rho, reg_.density_floor);
        const MagneticSplit ms = magnetic_split(rho);
        const std::array<Spectrum, 3> base = magnetic_base(B_old, u, rho, ms, dt);
        VectorField B = B_old;
        const double scale = std::max(norm_l2(B_old), 1e-300);
        for (int it = 0;; ++it) {
            VectorField next = magnetic_update(base, B, u, rho, ms, dt);
            const double change = norm_l2(next - B) / scale;
            B = std::move(next);
            if (change <= reg_.picard_tol || norm_l2(B_old) == 0.0) break;
            if (it + 1 >= reg_.picard_max_iters) throw PicardDivergence("magnetic step did not converge");
        }
        return project_divergence_free(B);
    }

    // Total force density of the momentum equation, strong form.
    VectorField force_density(const ScalarField& rho, const VectorField& u, const VectorField& B) const {
        require_density_floor(rho, reg_.density_floor);
        const TorusGrid& g = grid();
        const double eps = reg_.epsilon, eta = reg_.eta, delta = reg_.delta;
        const TensorField gu = jacobian(u);

        // Convection and viscosity: div(2 rho D(u) - rho u (x) u).
        TensorField t;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                if (b < a) {
                    t[a][b] = t[b][a];
                    continue;
                }
                ScalarField sym = gu[a][b] + gu[b][a];
                sym -= u[a] * u[b];
                t[a][b] = dealias(rho * sym);
            }
        VectorField f = divergence(t);

        ScalarField pressure_total(g);
        for (std::size_t p = 0; p < g.size(); ++p)
            pressure_total[p] = pressure(rho[p], phys_) + cold_pressure(rho[p], phys_);
        f -= gradient(pressure_total);

        if (eta > 0.0) {
            for (int a = 0; a < 3; ++a) f[a] -= eta * power_laplacian(u[a], 2);
        }
        if (eps > 0.0) {
            const VectorField gr = gradient(rho);
            for (int a = 0; a < 3; ++a) {
                ScalarField c = gr[0] * gu[a][0];
                c += gr[1] * gu[a][1];
                c += gr[2] * gu[a][2];
                f[a] -= eps * dealias(c);
            }
        }
        if (delta > 0.0) {
            VectorField cap = gradient(power_laplacian(rho, 2 * reg_.s + 1));
            cap *= rho;
            f += delta * cap;
        }
        if (phys_.kappa > 0.0) f += bohm_force_divergence_form(rho, phys_.kappa, reg_.density_floor);
        f += dealias(cross(curl(B), B));
        return f;
    }

    // The residual functional tested against every basis mode.
    Coeffs momentum_residual(const ScalarField& rho, const VectorField& u, const VectorField& B) const {
        return basis_.project(force_density(rho, u, B));
    }

    // Capillarity entry in its transposed weak form -delta int Lap^s div(rho e_i) Lap^{s+1} rho,
    // evaluated mode by mode (reference path for tests).
    Coeffs capillarity_weak_form(const ScalarField& rho) const {
        Coeffs out(basis_.size(), 0.0);
        if (reg_.delta == 0.0) return out;
        const ScalarField lap = power_laplacian(rho, reg_.s + 1);
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            const VectorField e = basis_.mode_field(i);
            const ScalarField d = power_laplacian(divergence(rho * e), reg_.s);
            out[i] = -reg_.delta * inner_product(d, lap);
        }
        return out;
    }

    State advance_step(const State& s, StepStats* stats = nullptr,
                       std::optional<double> dt_override = std::nullopt) const {
        const double dt = dt_override.value_or(reg_.dt);
        require_density_floor(s.rho, reg_.density_floor);

        const Spectrum a_old = density_rhs(s.rho, s.u);
        const MagneticSplit ms = magnetic_split(s.rho);
        const std::array<Spectrum, 3> b_base = magnetic_base(s.B, s.u, s.rho, ms, dt);
        const Coeffs n_old = momentum_residual(s.rho, s.u, s.B);
        const Eigen::MatrixXd m_old = mass_matrix(basis_, s.rho);
        const Eigen::VectorXd lam_old = as_eigen(s.lambda);
        const Eigen::VectorXd p_old = m_old * lam_old + 0.5 * dt * as_eigen(n_old);
        const Eigen::PartialPivLU<Eigen::MatrixXd> chord(chord_matrix(s.rho, m_old, dt));

        const double mass_scale = std::sqrt(integrate(s.rho));
        const double lam_floor = 1e-6 * mass_scale;
        const double b_floor = 1e-6 * std::sqrt(grid().volume());
        const double rho_scale = norm_l2(s.rho);

        ScalarField rho = s.rho;
        VectorField B = s.B;
        VectorField u = s.u;
        Eigen::VectorXd lam = lam_old;
        StepStats st;
        double prev_change = 0.0;
        for (int it = 0;; ++it) {
            ScalarField rho_next = density_update(s.rho, a_old, rho, u, dt);
            require_density_floor(rho_next, reg_.density_floor);
            VectorField B_next = magnetic_update(b_base, B, u, rho_next, ms, dt);
            const Eigen::MatrixXd m_new = mass_matrix(basis_, rho_next);
            const Coeffs n_new = momentum_residual(rho_next, u, B_next);
            const Eigen::VectorXd resid = m_new * lam - p_old - 0.5 * dt * as_eigen(n_new);
            const Eigen::VectorXd lam_next = lam - chord.solve(resid);
            if (!lam_next.allFinite()) throw PicardDivergence("non-finite velocity iterate");

            const double lam_scale = std::max({lam_next.norm(), lam_old.norm(), lam_floor});
            const double b_scale = std::max({norm_l2(B_next), norm_l2(s.B), b_floor});
            const double change = std::max({(lam_next - lam).norm() / lam_scale,
                                            norm_l2(rho_next - rho) / rho_scale,
                                            norm_l2(B_next - B) / b_scale});
            st.changes.push_back(change);
            if (it > 0 && prev_change > 0.0) {
                const double ratio = change / prev_change;
                st.ratios.push_back(ratio);
                st.max_ratio = std::max(st.max_ratio, ratio);
                if (ratio >= 1.0 && change > reg_.picard_tol)
                    throw PicardDivergence("fixed-point update ratio " + std::to_string(ratio) + " >= 1");
            }
            prev_change = change;
            rho = std::move(rho_next);
            B = std::move(B_next);
            lam = lam_next;
            u = basis_.reconstruct(to_coeffs(lam));
            st.iterations = it + 1;
            if (change <= reg_.picard_tol) break;
            if (it + 1 >= reg_.picard_max_iters)
                throw PicardDivergence("fixed point not reached in " + std::to_string(reg_.picard_max_iters) +
                                       " iterations (last change " + std::to_string(change) + ")");
        }

        State out;
        out.time = s.time + dt;
        out.rho = std::move(rho);
        out.lambda = to_coeffs(lam);
        out.u = std::move(u);
        out.B = project_divergence_free(B);
        check_density(s.rho, out.rho, s.u, out.u, dt, &st);
        if (stats) *stats = std::move(st);
        return out;
    }

    CflReport cfl_report(const State& s) const {
        CflReport r;
        const double dt = reg_.dt;
        double h = 1e300, kmax = 0.0;
        for (int a = 0; a < grid().dim(); ++a) {
            h = std::min(h, grid().spacing(a));
            kmax = std::max(kmax, double(grid().dealias_cutoff(a)));
        }
        const double k2 = kmax * kmax * grid().dim();
        const double rmax = s.rho.max();
        r.advective = s.u.max_norm() * dt / h;
        r.viscous = dt * rmax * k2;
        r.hyper = dt * reg_.eta * k2 * k2;
        r.capillary = dt * dt * reg_.delta * rmax * rmax * std::pow(k2, 2 * reg_.s + 2);
        r.magnetic = dt * magnetic_diffusivity_field(s.rho, phys_).max() * k2;
        return r;
    }

private:
    struct MagneticSplit {
        double nu_ref = 0.0;
        double precond = 0.0;
    };

    MagneticSplit magnetic_split(const ScalarField& rho) const {
        const ScalarField nu = magnetic_diffusivity_field(rho, phys_);
        return {nu.min(), 0.5 * (nu.max() - nu.min())};
    }

    // exp(-nu_ref k^2 dt) (B_old + dt/2 R_old), the part fixed over the step.
    std::array<Spectrum, 3> magnetic_base(const VectorField& B_old, const VectorField& u_old,
                                          const ScalarField& rho_old, const MagneticSplit& ms, double dt) const {
        const VectorField r_old = magnetic_rhs(B_old, u_old, rho_old, ms.nu_ref);
        std::array<Spectrum, 3> out;
        for (int c = 0; c < 3; ++c) {
            const Spectrum b = forward(B_old[c]);
            const Spectrum r = forward(r_old[c]);
            out[c] = Spectrum(grid());
            for_each_mode(grid(), [&](std::size_t p, const auto& k, const auto&) {
                out[c][p] = std::exp(-ms.nu_ref * ksq(k) * dt) * (b[p] + 0.5 * dt * r[p]);
            });
        }
        return out;
    }

    VectorField magnetic_update(const std::array<Spectrum, 3>& base, const VectorField& B,
                                const VectorField& u, const ScalarField& rho, const MagneticSplit& ms,
                                double dt) const {
        const VectorField r = magnetic_rhs(B, u, rho, ms.nu_ref);
        VectorField out(grid());
        for (int c = 0; c < 3; ++c) {
            const Spectrum rs = forward(r[c]);
            const Spectrum bs = forward(B[c]);
            Spectrum next(grid());
            for_each_mode(grid(), [&](std::size_t p, const auto& k, const auto&) {
                const cplx target = base[c][p] + 0.5 * dt * rs[p];
                next[p] = bs[p] + (target - bs[p]) / (1.0 + 0.5 * std::abs(dt) * ms.precond * ksq(k));
            });
            out[c] = inverse(next);
        }
        return out;
    }

    // Approximate Jacobian of the implicit momentum balance: mass, viscous and
    // hyperviscous terms, plus the pressure, Bohm and capillary response to the
    // density change -dt/2 div(rho e_j) induced by each mode.
    Eigen::MatrixXd chord_matrix(const ScalarField& rho, const Eigen::MatrixXd& m, double dt) const {
        const std::size_t n = basis_.size();
        const Spectrum w = forward(rho);
        Eigen::MatrixXd j = m;
        const double h = 0.5 * dt;
        for (std::size_t a = 0; a < n; ++a) {
            const Trig fa = basis_.profile(a);
            const int ca = basis_.component(a);
            for (std::size_t b = a; b < n; ++b) {
                const Trig fb = basis_.profile(b);
                const int cb = basis_.component(b);
                double v = 0.0;
                for (int d = 0; d < grid().dim(); ++d) {
                    if (ca == cb) v += weighted_product_integral(w, fa.derivative(d), fb.derivative(d));
                }
                v += weighted_product_integral(w, fb.derivative(ca), fa.derivative(cb));
                if (a == b) v += reg_.eta * fa.k2() * fa.k2();
                j(a, b) += h * v;
                if (b != a) j(b, a) += h * v;
            }
        }

        // d_j = div(rho e_j) in spectral form.
        std::vector<Spectrum> d(n);
        for (std::size_t b = 0; b < n; ++b) {
            Spectrum s = forward(rho * basis_.profile_field(b));
            const int c = basis_.component(b);
            d[b] = apply_multiplier(std::move(s), [c](const auto& k) { return cplx(0.0, k[c]); });
        }
        const ScalarField c2 = rho.map([&](double r) {
            return pressure_derivative(r, phys_) + cold_pressure_derivative(r, phys_);
        });
        const double kappa2 = phys_.kappa * phys_.kappa;
        for (std::size_t b = 0; b < n; ++b) {
            const Spectrum g = forward(c2 * inverse(d[b]));
            for (std::size_t a = 0; a < n; ++a) {
                const Trig da = basis_.divergence_profile(a);
                if (da.coef == 0.0) continue;
                const double v = integral_against(g, da) + kappa2 * da.k2() * integral_against(d[b], da);
                j(a, b) += h * h * v;
            }
        }
        if (reg_.delta > 0.0) {
            const int pw = 2 * reg_.s + 1;
            std::vector<double> weight(grid().size());
            for_each_mode(grid(), [&](std::size_t p, const auto& k, const auto&) {
                weight[p] = std::pow(ksq(k), pw);
            });
            const double vol = grid().volume();
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a; b < n; ++b) {
                    double acc = 0.0;
                    for (std::size_t p = 0; p < weight.size(); ++p)
                        acc += weight[p] * (std::conj(d[a][p]) * d[b][p]).real();
                    const double v = h * h * reg_.delta * vol * acc;
                    j(a, b) += v;
                    if (b != a) j(b, a) += v;
                }
        }
        return j;
    }

    // Floor and maximum-principle corridor for a density update.
    void check_density(const ScalarField& rho_old, const ScalarField& rho_new, const VectorField& u_old,
                       const VectorField& u_new, double dt, StepStats* st) const {
        require_density_floor(rho_new, reg_.density_floor);
        const double dmax = std::max(divergence(u_old).max_abs(), divergence(u_new).max_abs());
        const double growth = std::exp(dmax * std::abs(dt));
        const double lo = rho_old.min() / growth;
        const double hi = rho_old.max() * growth;
        if (st) {
            st->corridor_low = lo;
            st->corridor_high = hi;
        }
        const double mn = rho_new.min(), mx = rho_new.max();
        if (mn < lo * (1.0 - 1e-8) || mx > hi * (1.0 + 1e-8))
            throw MaximumPrincipleViolation("density [" + std::to_string(mn) + ", " + std::to_string(mx) +
                                            "] leaves corridor [" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]; reduce dt");
    }

    GalerkinBasis basis_;
    PhysParams phys_;
    RegParams reg_;
};

struct Trajectory {
    std::vector<State> states;      // stored samples, first is the initial state
    std::vector<StepStats> stats;   // one entry per step taken
    double dt = 0.0;
    std::size_t store_every = 1;
};

struct RunOptions {
    std::size_t store_every = 1;    // keep every k-th state in the trajectory
    bool keep_states = true;
    std::function<void(const State&, std::size_t step, const StepStats*)> on_step;
};

// Advances to t_end with fixed dt; a final partial step lands exactly on t_end.
inline Trajectory run_simulation(const GalerkinSolver& solver, const State& initial, double t_end,
                                 const RunOptions& opt = {}) {
    const double t0 = initial.time;
    if (!(t_end >= t0)) throw UsageError("t_end must not precede the initial time");
    const double dt = solver.reg().dt;
    Trajectory tr;
    tr.dt = dt;
    tr.store_every = std::max<std::size_t>(1, opt.store_every);
    if (opt.keep_states) tr.states.push_back(initial);
    if (opt.on_step) opt.on_step(initial, 0, nullptr);
    const double span = t_end - t0;
    std::size_t full = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
    double rest = span - full * dt;
    if (rest < 1e-9 * dt) rest = 0.0;
    const std::size_t total = full + (rest > 0.0 ? 1 : 0);

    State cur = initial;
    for (std::size_t k = 1; k <= total; ++k) {
        const double h = k <= full ? dt : rest;
        StepStats st;
        try {
            cur = solver.advance_step(cur, &st, h);
        } catch (const Error& e) {
            std::throw_with_nested(StepError(cur.time, e.what()));
        }
        cur.time = k <= full ? t0 + k * dt : t_end;
        tr.stats.push_back(st);
        if (opt.keep_states && (k % tr.store_every == 0 || k == total)) tr.states.push_back(cur);
        if (opt.on_step) opt.on_step(cur, k, &tr.stats.back());
    }
    if (!opt.keep_states) tr.states.push_back(cur);
    return tr;
}

}  // namespace qmhd
