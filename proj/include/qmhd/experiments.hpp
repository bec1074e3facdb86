#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "qmhd/benchmarks.hpp"
#include "qmhd/diagnostics.hpp"

namespace qmhd {

enum class SweepParameter { Modes, Epsilon, Eta, Delta, Kappa };

inline std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::Modes: return "n";
        case SweepParameter::Epsilon: return "epsilon";
        case SweepParameter::Eta: return "eta";
        case SweepParameter::Delta: return "delta";
        case SweepParameter::Kappa: return "kappa";
    }
    return "?";
}

inline SweepParameter sweep_parameter_from_string(const std::string& s) {
    for (SweepParameter p : {SweepParameter::Modes, SweepParameter::Epsilon, SweepParameter::Eta,
                             SweepParameter::Delta, SweepParameter::Kappa})
        if (to_string(p) == s) return p;
    throw ValidationError("sweep.parameter", "one of n, epsilon, eta, delta, kappa");
}

// eps = eps_coef * delta^eps_power and eta = eta_coef * delta^eta_power on a delta ladder.
struct Coupling {
    bool enabled = false;
    double eps_coef = 1.0, eps_power = 2.0;
    double eta_coef = 1.0, eta_power = 2.0;

    bool operator==(const Coupling&) const = default;
};

struct SweepSpec {
    SweepParameter parameter = SweepParameter::Kappa;
    std::vector<double> ladder;
    std::optional<double> limit;  // extra reference rung appended after the ladder
    Coupling coupling;
    BenchmarkId benchmark = BenchmarkId::DensityBump;
    BenchmarkParams bench;
    int dim = 1;
    std::array<int, 3> points{128, 1, 1};
    std::size_t modes = 0;  // 0 selects the full dealiased band
    PhysParams phys;
    RegParams reg;
    double t_end = 0.1;
    std::size_t store_every = 1;
    int threads = 1;
    std::vector<TestFunction> battery;  // empty selects default_battery(grid, 1)

    std::vector<double> rung_values() const {
        std::vector<double> v = ladder;
        if (limit) v.push_back(*limit);
        return v;
    }

    void validate() const {
        if (ladder.empty()) throw ValidationError("sweep.ladder", "at least one rung");
        const std::vector<double> v = rung_values();
        const bool up = parameter == SweepParameter::Modes;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || v[i] < 0.0) throw ValidationError("sweep.ladder", "finite and nonnegative");
            if (i > 0 && (up ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])))
                throw ValidationError("sweep.ladder", up ? "strictly increasing" : "strictly decreasing");
        }
        if (up)
            for (double x : v)
                if (x < 1.0 || x != std::floor(x)) throw ValidationError("sweep.ladder", "positive integers for n");
        if (coupling.enabled && parameter != SweepParameter::Delta)
            throw ValidationError("sweep.coupling", "only applies to a delta ladder");
        if (!(t_end > 0.0)) throw ValidationError("sweep.t_end", "positive");
        phys.validate();
        reg.validate();
    }
};

// L2 distances between two states; a coarser grid is injected spectrally into the finer one.
struct StateDistance {
    double sqrt_rho = 0.0, rho = 0.0, rho_u = 0.0, sqrt_rho_u = 0.0, B = 0.0, u = 0.0;
};

namespace detail {

// Zero-padded spectral interpolation; a coarse Nyquist coefficient is split evenly over +-N/2.
inline ScalarField inject(const ScalarField& f, const TorusGrid& fine) {
    const TorusGrid& g = f.grid();
    if (g == fine) return f;
    for (int a = 0; a < 3; ++a)
        if (g.points(a) > fine.points(a) || (a >= g.dim()) != (a >= fine.dim()))
            throw ValidationError("compare_states", "grids must be nested");
    const Spectrum s = forward(f);
    Spectrum out(fine);
    for_each_mode(g, [&](std::size_t p, const auto&, const std::array<int, 3>& k) {
        std::vector<std::array<int, 3>> targets{k};
        for (int a = 0; a < g.dim(); ++a) {
            if (2 * std::abs(k[a]) != g.points(a) || g.points(a) == fine.points(a)) continue;
            const std::size_t m = targets.size();
            for (std::size_t t = 0; t < m; ++t) {
                auto mirror = targets[t];
                mirror[a] = -mirror[a];
                targets.push_back(mirror);
            }
        }
        const double share = 1.0 / double(targets.size());
        for (const auto& t : targets) out[fine.spectral_index(t)] += share * s[p];
    });
    return inverse(out);
}

inline VectorField inject(const VectorField& v, const TorusGrid& fine) {
    VectorField out(fine);
    for (int c = 0; c < 3; ++c) out[c] = inject(v[c], fine);
    return out;
}

inline double trapezoid(const std::vector<double>& f, double dt) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
    return s * dt;
}

}  // namespace detail

inline StateDistance compare_states(const State& a, const State& b) {
    const TorusGrid& ga = a.rho.grid();
    const TorusGrid& gb = b.rho.grid();
    const TorusGrid& fine = ga.size() >= gb.size() ? ga : gb;
    const ScalarField ra = detail::inject(a.rho, fine), rb = detail::inject(b.rho, fine);
    const VectorField ua = detail::inject(a.u, fine), ub = detail::inject(b.u, fine);
    const VectorField ba = detail::inject(a.B, fine), bb = detail::inject(b.B, fine);
    auto root = [](const ScalarField& r) { return r.map([](double x) { return std::sqrt(std::max(x, 0.0)); }); };
    const ScalarField sa = root(ra), sb = root(rb);
    StateDistance d;
    d.sqrt_rho = norm_l2(sa - sb);
    d.rho = norm_l2(ra - rb);
    d.rho_u = norm_l2(ra * ua - rb * ub);
    d.sqrt_rho_u = norm_l2(sa * ua - sb * ub);
    d.B = norm_l2(ba - bb);
    d.u = norm_l2(ua - ub);
    return d;
}

// L2(0,T;L2) distances over two trajectories sampled at the same times.
inline StateDistance trajectory_distance(std::span<const State> a, std::span<const State> b) {
    if (a.size() != b.size()) throw ValidationError("trajectory_distance", "equal sample counts");
    StateDistance out;
    if (a.empty()) return out;
    std::array<std::vector<double>, 6> sq;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k].time - b[k].time) > 1e-12 * std::max(1.0, std::abs(a[k].time)))
            throw NonuniformSampling("trajectories sampled at different times");
        const StateDistance d = compare_states(a[k], b[k]);
        const double v[6] = {d.sqrt_rho, d.rho, d.rho_u, d.sqrt_rho_u, d.B, d.u};
        for (int i = 0; i < 6; ++i) sq[i].push_back(v[i] * v[i]);
    }
    const double dt = a.size() > 1 ? a[1].time - a[0].time : 0.0;
    double r[6];
    for (int i = 0; i < 6; ++i) r[i] = std::sqrt(detail::trapezoid(sq[i], dt));
    return {r[0], r[1], r[2], r[3], r[4], r[5]};
}

struct WeakIntegral {
    double value = 0.0;  // largest |integral| over the battery
    double ratio = 0.0;  // value divided by the parameter scale
};

// 2 kappa^2 int chi [ int sqrt(rho) grad sqrt(rho) . grad div phi + 2 int (grad sqrt(rho) (x) grad sqrt(rho)) : grad phi ]
inline WeakIntegral quantum_term_weak_integral(std::span<const State> states, double kappa,
                                               const std::vector<TestFunction>& battery,
                                               double floor = kDefaultDensityFloor) {
    WeakIntegral out;
    if (kappa == 0.0 || states.empty()) return out;
    const detail::TimeWeights tw = detail::time_weights(states);
    const TorusGrid& g = states.front().rho.grid();
    std::vector<VectorField> grad_div;
    std::vector<TensorField> jac;
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < battery.size(); ++j) {
        if (battery[j].component < 0) continue;
        const VectorField phi = detail::test_vector(g, battery[j]);
        grad_div.push_back(gradient(divergence(phi)));
        jac.push_back(jacobian(phi));
        idx.push_back(j);
    }
    std::vector<double> acc(idx.size(), 0.0);
    for (std::size_t n = 0; n < states.size(); ++n) {
        require_density_floor(states[n].rho, floor);
        const ScalarField psi = states[n].rho.map([](double r) { return std::sqrt(r); });
        const VectorField gp = gradient(psi);
        const VectorField pgp = psi * gp;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            double v = inner_product(pgp, grad_div[j]);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) v += 2.0 * inner_product(gp[a] * gp[b], jac[j][b][a]);
            acc[j] += tw.w[n] * tw.chi[n] * v;
        }
    }
    const double k2 = kappa * kappa;
    for (double a : acc) out.value = std::max(out.value, 2.0 * k2 * std::abs(a));
    out.ratio = out.value / k2;
    return out;
}

// -delta int chi int Lap^{s+1} rho Lap^s div(rho phi); ratio against delta^((1 - alpha)/2), alpha = (4s+2)/(4s+3).
inline WeakIntegral capillarity_term_weak_integral(std::span<const State> states, double delta, int s,
                                                   const std::vector<TestFunction>& battery) {
    WeakIntegral out;
    if (delta == 0.0 || states.empty()) return out;
    const detail::TimeWeights tw = detail::time_weights(states);
    const TorusGrid& g = states.front().rho.grid();
    std::vector<VectorField> phi;
    for (const auto& t : battery)
        if (t.component >= 0) phi.push_back(detail::test_vector(g, t));
    std::vector<double> acc(phi.size(), 0.0);
    for (std::size_t n = 0; n < states.size(); ++n) {
        const ScalarField& rho = states[n].rho;
        const ScalarField l = power_laplacian(rho, s + 1);
        for (std::size_t j = 0; j < phi.size(); ++j)
            acc[j] += tw.w[n] * tw.chi[n] * inner_product(l, power_laplacian(divergence(rho * phi[j]), s));
    }
    for (double a : acc) out.value = std::max(out.value, delta * std::abs(a));
    const double alpha = (4.0 * s + 2.0) / (4.0 * s + 3.0);
    out.ratio = out.value / std::pow(delta, 0.5 * (1.0 - alpha));
    return out;
}

// Uniform-bound monitors of one run: suprema over samples, time-L2 norms where the bound is L2 in time.
struct RungMonitors {
    NormMonitor sup;                  // componentwise max over samples (min_rho: min over samples)
    double l2t_sqrt_rho_du = 0.0;     // ||sqrt(rho) D(u)||_{L2 L2}
    double l2t_grad_b = 0.0;          // ||grad B||_{L2 L2}
    double max_capillary_energy = 0.0;
    double max_quantum_energy = 0.0;
    double max_other_energy = 0.0;    // total minus quantum and capillary parts
};

inline RungMonitors monitor_trajectory(std::span<const State> states, const PhysParams& phys, const RegParams& reg) {
    RungMonitors m;
    m.sup.min_rho = std::numeric_limits<double>::infinity();
    std::vector<double> du, gb;
    for (const auto& s : states) {
        const NormMonitor n = norm_monitor(s, phys, reg);
        auto up = [](double& a, double b) { a = std::max(a, b); };
        up(m.sup.rho_lgamma, n.rho_lgamma);
        up(m.sup.rho_inv_lgm, n.rho_inv_lgm);
        up(m.sup.grad_sqrt_rho, n.grad_sqrt_rho);
        up(m.sup.sqrt_rho_u, n.sqrt_rho_u);
        up(m.sup.sqrt_rho_du, n.sqrt_rho_du);
        up(m.sup.grad_rho_gamma2, n.grad_rho_gamma2);
        up(m.sup.b_l2, n.b_l2);
        up(m.sup.grad_b, n.grad_b);
        up(m.sup.rho_inv_linf, n.rho_inv_linf);
        up(m.sup.sqrt_rho_h2, n.sqrt_rho_h2);
        up(m.sup.grad_quarter_l4, n.grad_quarter_l4);
        up(m.sup.max_rho, n.max_rho);
        m.sup.min_rho = std::min(m.sup.min_rho, n.min_rho);
        du.push_back(n.sqrt_rho_du * n.sqrt_rho_du);
        gb.push_back(n.grad_b * n.grad_b);
        const EnergyReport e = compute_energy(s, phys, reg);
        up(m.max_capillary_energy, e.capillary);
        up(m.max_quantum_energy, e.quantum);
        up(m.max_other_energy, e.total() - e.quantum - e.capillary);
    }
    const double dt = states.size() > 1 ? states[1].time - states[0].time : 0.0;
    m.l2t_sqrt_rho_du = std::sqrt(detail::trapezoid(du, dt));
    m.l2t_grad_b = std::sqrt(detail::trapezoid(gb, dt));
    return m;
}

struct RungResult {
    double value = 0.0;
    PhysParams phys;
    RegParams reg;
    std::size_t modes = 0;
    StateDistance distance;  // L2(0,T;L2) to the final rung
    RungMonitors monitors;
    WeakIntegral quantum;
    WeakIntegral capillarity;
    double tail_energy = 0.0;  // n ladder: reference coefficients beyond this rung's basis
    std::size_t steps = 0;
    double max_picard_ratio = 0.0;
    State final_state;
};

struct SweepResult {
    std::vector<RungResult> rungs;
    // log(d_i / d_{i+1}) / log(p_i / p_{i+1}) of the sqrt(rho) u distance between consecutive
    // ladder rungs, excluding the reference.
    std::vector<double> orders;
};

inline int sweep_threads(int configured) {
    if (const char* env = std::getenv("QMHD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return int(v);
        throw ValidationError("QMHD_THREADS", "positive integer");
    }
    return std::max(1, configured);
}

inline void apply_rung(SweepParameter p, double value, const Coupling& c, PhysParams& phys, RegParams& reg,
                       std::size_t& modes) {
    switch (p) {
        case SweepParameter::Modes: modes = std::size_t(value); break;
        case SweepParameter::Epsilon: reg.epsilon = value; break;
        case SweepParameter::Eta: reg.eta = value; break;
        case SweepParameter::Kappa: phys.kappa = value; break;
        case SweepParameter::Delta:
            reg.delta = value;
            if (c.enabled) {
                reg.epsilon = c.eps_coef * std::pow(value, c.eps_power);
                reg.eta = c.eta_coef * std::pow(value, c.eta_power);
            }
            break;
    }
}

// One simulation per rung from shared initial data; rungs run concurrently on up to
// sweep_threads(spec.threads) workers, results are reduced in rung order.
inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    const TorusGrid grid(spec.dim, spec.points);
    const InitialData init = make_benchmark(spec.benchmark, grid, spec.bench);
    const std::vector<TestFunction> battery = spec.battery.empty() ? default_battery(grid, 1) : spec.battery;
    const std::vector<double> values = spec.rung_values();
    const std::size_t nr = values.size();

    std::vector<RungResult> rungs(nr);
    std::vector<std::vector<State>> traj(nr);
    std::vector<std::exception_ptr> errors(nr);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < nr; i = next++) {
            try {
                RungResult& r = rungs[i];
                r.value = values[i];
                r.phys = spec.phys;
                r.reg = spec.reg;
                r.modes = spec.modes;
                apply_rung(spec.parameter, values[i], spec.coupling, r.phys, r.reg, r.modes);
                r.reg.validate();
                const GalerkinBasis basis = r.modes == 0 ? GalerkinBasis::full_band(grid) : GalerkinBasis(grid, r.modes);
                r.modes = basis.size();
                const GalerkinSolver solver(basis, r.phys, r.reg);
                const State s0 = solver.make_state(init.rho, init.u, init.B);
                RunOptions opt;
                opt.store_every = spec.store_every;
                Trajectory t = run_simulation(solver, s0, s0.time + spec.t_end, opt);
                r.steps = t.stats.size();
                for (const auto& st : t.stats) r.max_picard_ratio = std::max(r.max_picard_ratio, st.max_ratio);
                r.monitors = monitor_trajectory(t.states, r.phys, r.reg);
                r.quantum = quantum_term_weak_integral(t.states, r.phys.kappa, battery, r.reg.density_floor);
                r.capillarity = capillarity_term_weak_integral(t.states, r.reg.delta, r.reg.s, battery);
                r.final_state = t.states.back();
                traj[i] = std::move(t.states);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int nt = std::min<int>(sweep_threads(spec.threads), int(nr));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < nr; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            std::throw_with_nested(RungError(i, values[i], e.what()));
        }
    }

    SweepResult out;
    const std::size_t ref = nr - 1;
    for (std::size_t i = 0; i < nr; ++i) {
        rungs[i].distance = trajectory_distance(traj[i], traj[ref]);
        if (spec.parameter == SweepParameter::Modes) {
            const Coeffs& lr = rungs[ref].final_state.lambda;
            for (std::size_t k = rungs[i].modes; k < lr.size(); ++k) rungs[i].tail_energy += lr[k] * lr[k];
        }
    }
    const std::size_t ladder_end = spec.limit ? nr - 1 : nr;
    for (std::size_t i = 0; i + 1 < ladder_end; ++i) {
        const double d0 = rungs[i].distance.sqrt_rho_u, d1 = rungs[i + 1].distance.sqrt_rho_u;
        const double p0 = rungs[i].value, p1 = rungs[i + 1].value;
        const bool ok = d0 > 0.0 && d1 > 0.0 && p0 > 0.0 && p1 > 0.0;
        out.orders.push_back(ok ? std::log(d0 / d1) / std::log(p0 / p1) : std::numeric_limits<double>::quiet_NaN());
    }
    out.rungs = std::move(rungs);
    return out;
}

}  // namespace qmhd
