#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "qmhd/io.hpp"

namespace qmhd {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

namespace cli {

inline std::string snapshot_name(const char* field, std::size_t step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "snapshots/%s_%06zu.qmhd", field, step);
    return buf;
}

inline std::string write_state(Manifest& m, const State& s, std::size_t step) {
    std::string log;
    const std::pair<const char*, std::string> files[3] = {
        {"rho", encode_snapshot(s.rho, s.time)}, {"u", encode_snapshot(s.u, s.time)}, {"B", encode_snapshot(s.B, s.time)}};
    for (const auto& [name, bytes] : files) {
        const std::string rel = snapshot_name(name, step);
        m.write(rel, bytes);
        log += "wrote " + rel + "\n" + snapshot_summary(decode_snapshot(bytes));
    }
    return log;
}

inline int cmd_run(const std::string& path, std::optional<double> t_end, const std::optional<std::string>& out_dir,
                   std::ostream& out) {
    RunConfig cfg = parse_config(path);
    if (t_end) cfg.t_end = *t_end;
    if (cfg.t_end < cfg.initial.t0) throw UsageError("t_end precedes the initial time");
    const std::filesystem::path root = out_dir ? *out_dir : cfg.output.directory;
    const TorusGrid g = make_grid(cfg);
    const GalerkinSolver solver(make_basis(cfg, g), cfg.phys, cfg.reg);
    const InitialData init = load_initial(cfg, g);
    State s0 = solver.make_state(init.rho, init.u, init.B, cfg.initial.t0);

    Manifest m(root);
    m.write("config.ini", canonical_config(cfg));
    CsvTable csv("qmhd-diagnostics/1", diagnostics_columns());
    std::string log = write_state(m, s0, 0);
    std::size_t last = 0;
    RunOptions opt;
    opt.keep_states = false;
    opt.on_step = [&](const State& s, std::size_t step, const StepStats* st) {
        last = step;
        if (step % std::max<std::size_t>(1, cfg.output.diagnostics_every) == 0)
            csv.add_row(diagnostics_row(s, cfg.phys, cfg.reg, st));
        if (step > 0 && cfg.output.snapshot_every > 0 && step % cfg.output.snapshot_every == 0)
            log += write_state(m, s, step);
    };
    const Trajectory t = run_simulation(solver, s0, cfg.t_end, opt);
    const State& fin = t.states.back();
    if (csv.rows() == 0 || last % std::max<std::size_t>(1, cfg.output.diagnostics_every) != 0)
        csv.add_row(diagnostics_row(fin, cfg.phys, cfg.reg, t.stats.empty() ? nullptr : &t.stats.back()));
    if (last > 0 && (cfg.output.snapshot_every == 0 || last % cfg.output.snapshot_every != 0))
        log += write_state(m, fin, last);
    m.write("diagnostics.csv", csv.str());
    m.write("run.log", log);
    m.note("steps " + std::to_string(t.stats.size()));
    m.note("t_end " + detail::format_double(fin.time));
    m.finish();
    out << log << "steps " << t.stats.size() << ", t = " << detail::format_double(fin.time) << "\n";
    return kExitOk;
}

inline int cmd_sweep(const std::string& path, const std::optional<std::string>& out_dir, std::ostream& out) {
    const RunConfig cfg = parse_config(path);
    const SweepSpec spec = make_sweep_spec(cfg);
    const SweepResult r = run_sweep(spec);
    const std::filesystem::path root = out_dir ? *out_dir : cfg.output.directory;
    Manifest m(root);
    m.write("sweep.ini", canonical_config(cfg));
    CsvTable csv("qmhd-sweep/1",
                 {"rung", "value", "epsilon", "eta", "delta", "kappa", "modes", "dist_sqrt_rho", "dist_rho",
                  "dist_rho_u", "dist_sqrt_rho_u", "dist_B", "dist_u", "sup_grad_sqrt_rho", "sup_sqrt_rho_u",
                  "l2t_sqrt_rho_du", "sup_b_l2", "l2t_grad_b", "sup_rho_lgamma", "sup_rho_inv_lgm", "min_rho",
                  "max_rho", "max_capillary_energy", "max_quantum_energy", "max_other_energy", "quantum_weak",
                  "quantum_ratio", "capillarity_weak", "capillarity_ratio", "tail_energy", "steps",
                  "max_picard_ratio"});
    for (std::size_t i = 0; i < r.rungs.size(); ++i) {
        const RungResult& g = r.rungs[i];
        const RungMonitors& mo = g.monitors;
        csv.add_row({double(i), g.value, g.reg.epsilon, g.reg.eta, g.reg.delta, g.phys.kappa, double(g.modes),
                     g.distance.sqrt_rho, g.distance.rho, g.distance.rho_u, g.distance.sqrt_rho_u, g.distance.B,
                     g.distance.u, mo.sup.grad_sqrt_rho, mo.sup.sqrt_rho_u, mo.l2t_sqrt_rho_du, mo.sup.b_l2,
                     mo.l2t_grad_b, mo.sup.rho_lgamma, mo.sup.rho_inv_lgm, mo.sup.min_rho, mo.sup.max_rho,
                     mo.max_capillary_energy, mo.max_quantum_energy, mo.max_other_energy, g.quantum.value,
                     g.quantum.ratio, g.capillarity.value, g.capillarity.ratio, g.tail_energy, double(g.steps),
                     g.max_picard_ratio});
        char dir[32];
        std::snprintf(dir, sizeof dir, "rungs/rung_%02zu/", i);
        RunConfig rc = cfg;
        rc.sweep.reset();
        rc.phys = g.phys;
        rc.reg = g.reg;
        rc.grid.modes = g.modes;
        m.write(std::string(dir) + "config.ini", canonical_config(rc));
        m.write(std::string(dir) + "rho.qmhd", encode_snapshot(g.final_state.rho, g.final_state.time));
        m.write(std::string(dir) + "u.qmhd", encode_snapshot(g.final_state.u, g.final_state.time));
        m.write(std::string(dir) + "B.qmhd", encode_snapshot(g.final_state.B, g.final_state.time));
        m.note("rung " + std::to_string(i) + " " + to_string(spec.parameter) + " " + detail::format_double(g.value) +
               " config " + dir + "config.ini");
    }
    m.write("sweep.csv", csv.str());
    std::string orders;
    for (double o : r.orders) orders += " " + detail::format_double(o);
    m.note("orders" + orders);
    m.finish();
    out << csv.str();
    return kExitOk;
}

struct CheckRow {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Invariants and identities evaluated on the configured grid, parameters and initial data.
inline std::vector<CheckRow> run_checks(const RunConfig& cfg) {
    std::vector<CheckRow> rows;
    auto add = [&](std::string name, double v, double tol) { rows.push_back({std::move(name), v, tol, v <= tol}); };
    const PhysParams& ph = cfg.phys;
    const TorusGrid g = make_grid(cfg);
    const GalerkinBasis basis = make_basis(cfg, g);
    const GalerkinSolver solver(basis, ph, cfg.reg);
    const InitialData init = load_initial(cfg, g);
    const State s0 = solver.make_state(init.rho, init.u, init.B, cfg.initial.t0);

    double worst = 0.0, worst_c = 0.0;
    for (int i = 0; i <= 120; ++i) {
        const double r = std::pow(10.0, -3.0 + 6.0 * i / 120.0);
        const double h = r * enthalpy_H_prime(r, ph) - enthalpy_H(r, ph) - pressure(r, ph);
        const double hc = r * enthalpy_Hc_prime(r, ph) - enthalpy_Hc(r, ph) - cold_pressure(r, ph);
        const double sh = std::max(1.0, std::abs(r * enthalpy_H_prime(r, ph)) + std::abs(pressure(r, ph)));
        const double sc = std::max(1.0, std::abs(r * enthalpy_Hc_prime(r, ph)) + std::abs(cold_pressure(r, ph)));
        worst = std::max(worst, std::abs(h) / sh);
        worst_c = std::max(worst_c, std::abs(hc) / sc);
    }
    add("enthalpy_identity", worst, 1e-10);
    add("cold_enthalpy_identity", worst_c, 1e-10);

    if (ph.kappa > 0.0) {
        // The two Bohm forms differ by resolution error only: the gap must shrink on a doubled grid.
        auto gap = [&](const ScalarField& rho) {
            const VectorField f = bohm_force_divergence_form(rho, ph.kappa, cfg.reg.density_floor);
            return norm_l2(bohm_force_primary(rho, ph.kappa, cfg.reg.density_floor) - f) /
                   std::max(norm_l2(f), 1e-300);
        };
        std::array<int, 3> fine_pts = g.shape();
        for (int a = 0; a < g.dim(); ++a) fine_pts[a] *= 2;
        const double coarse = gap(s0.rho), fine = gap(detail::inject(s0.rho, TorusGrid(g.dim(), fine_pts)));
        add("bohm_forms_refinement", coarse <= 1e-10 ? 0.0 : fine / coarse, 0.5);
    }

    const Coeffs v = s0.lambda.empty() ? Coeffs{} : Coeffs(s0.lambda.size(), 1.0);
    if (!v.empty()) {
        const Coeffs back = mass_operator_solve(basis, s0.rho, mass_operator_apply(basis, s0.rho, v));
        add("mass_operator_roundtrip", (as_eigen(back) - as_eigen(v)).norm() / as_eigen(v).norm(), 1e-10);
    }

    const DissipationReport d = compute_dissipation(s0, ph, cfg.reg);
    const double most_negative = std::min({d.viscous, d.pressure_diss, d.magnetic_diss, d.hyper, d.capillary_diss,
                                           d.quantum_diss, 0.0});
    add("dissipation_nonnegative", 0.0 - most_negative, 0.0);

    RegParams spot = cfg.reg;
    if (spot.epsilon == 0.0) spot.epsilon = 1.0;
    const BDEntropyReport bd = compute_bd_terms(s0, ph, spot);
    add("entropy_spot_identity",
        std::abs(bd.rhs[0] - bd.spot_first_rhs) / std::max(std::abs(bd.spot_first_rhs), 1e-300) *
            (bd.spot_first_rhs != 0.0),
        1e-10);

    const double lor = inner_product(cross(curl(s0.B), s0.B), s0.u);
    const double ind = -inner_product(curl(cross(s0.u, s0.B)), s0.B);
    add("lorentz_induction_work", std::abs(lor - ind) / std::max({std::abs(lor), std::abs(ind), 1.0}), 1e-10);

    const ScalarField p = s0.rho.map([&](double r) { return pressure(r, ph) + cold_pressure(r, ph); });
    const ScalarField hp = s0.rho.map([&](double r) { return enthalpy_H_prime(r, ph) + enthalpy_Hc_prime(r, ph); });
    const double pw = inner_product(gradient(p), s0.u), pc = -inner_product(hp, divergence(s0.rho * s0.u));
    add("pressure_work_chain", std::abs(pw - pc) / std::max({std::abs(pw), std::abs(pc), 1.0}), 1e-6);

    add("div_b", divergence(s0.B).max_abs(), 1e-12);

    const double dt = cfg.reg.dt;
    {
        const ScalarField r1 = solver.solve_density_step(s0.rho, VectorField(g), dt);
        Spectrum a = forward(s0.rho);
        for_each_mode(g, [&](std::size_t q, const auto& k, const auto&) {
            a[q] *= std::exp(-cfg.reg.epsilon * ksq(k) * dt);
        });
        add("density_heat_decay", norm_l2(r1 - inverse(a)) / std::max(norm_l2(s0.rho), 1e-300), 1e-10);
    }
    {
        const double mean = s0.rho.mean();
        const ScalarField flat(g, mean);
        const VectorField b1 = solver.solve_magnetic_step(s0.B, VectorField(g), flat, dt);
        const double nu = magnetic_diffusivity(mean, ph);
        double err = 0.0;
        for (int c = 0; c < 3; ++c) {
            Spectrum a = forward(s0.B[c]);
            for_each_mode(g, [&](std::size_t q, const auto& k, const auto&) { a[q] *= std::exp(-nu * ksq(k) * dt); });
            err = std::max(err, norm_l2(b1[c] - inverse(a)));
        }
        add("magnetic_decay", err / std::max(norm_l2(s0.B), 1e-300) * (norm_l2(s0.B) > 0.0), 1e-10);
    }
    {
        StepStats st;
        const State s1 = solver.advance_step(s0, &st);
        const double m0 = integrate(s0.rho);
        add("step_mass_drift", std::abs(integrate(s1.rho) - m0) / m0, 1e-12);
        add("step_picard_ratio", st.max_ratio, 1.0 - 1e-12);
        add("step_div_b", divergence(s1.B).max_abs(), 1e-12);
    }
    return rows;
}

inline int cmd_check(const std::string& path, std::ostream& out) {
    const RunConfig cfg = parse_config(path);
    const std::vector<CheckRow> rows = run_checks(cfg);
    bool ok = true;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-26s %-12s %-12s %s\n", "check", "value", "tolerance", "result");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-26s %-12.3e %-12.3e %s\n", r.name.c_str(), r.value, r.tolerance,
                      r.pass ? "PASS" : "FAIL");
        out << buf;
        ok = ok && r.pass;
    }
    out << (ok ? "all checks passed\n" : "some checks failed\n");
    return ok ? kExitOk : kExitNumerical;
}

inline int cmd_inspect(const std::string& path, std::ostream& out) {
    const Snapshot s = read_snapshot(path);
    const TorusGrid& g = s.grid;
    out << "format QMHD v" << kSnapshotVersion << "\n";
    out << "dim " << g.dim() << " points " << g.points(0) << " " << g.points(1) << " " << g.points(2) << "\n";
    out << "kind " << (s.is_vector ? "vector" : "scalar") << " components " << s.components.size() << "\n";
    out << "time " << detail::format_double(s.time) << "\n";
    out << snapshot_summary(s);
    return kExitOk;
}

inline int classify(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return kExitConfig;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
    return kExitNumerical;
}

inline void print_nested(const std::exception& e, std::ostream& err, int depth = 0) {
    err << std::string(2 * depth, ' ') << e.what() << "\n";
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        print_nested(inner, err, depth + 1);
    }
}

// Innermost exception decides the category, so a numerical failure wrapped by a step stays numerical.
inline int classify_nested(const std::exception& e) {
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        return classify_nested(inner);
    }
    return classify(e);
}

}  // namespace cli

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Viscous quantum MHD Galerkin solver"};
    app.require_subcommand(1);
    std::string config, snapshot;
    std::optional<double> t_end;
    std::optional<std::string> out_dir;

    auto* run = app.add_subcommand("run", "Run one simulation");
    run->add_option("config", config, "Config file")->required();
    run->add_option("--t-end", t_end, "Override the final time");
    run->add_option("--output", out_dir, "Override the output directory");
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep described by a config with a [sweep] section");
    sweep->add_option("config", config, "Sweep config file")->required();
    sweep->add_option("--output", out_dir, "Override the output directory");
    auto* check = app.add_subcommand("check", "Evaluate invariants and identities without a full run");
    check->add_option("config", config, "Config file")->required();
    auto* inspect = app.add_subcommand("inspect", "Print a snapshot header and field norms");
    inspect->add_option("snapshot", snapshot, "Snapshot file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (*run) return cli::cmd_run(config, t_end, out_dir, out);
        if (*sweep) return cli::cmd_sweep(config, out_dir, out);
        if (*check) return cli::cmd_check(config, out);
        if (*inspect) return cli::cmd_inspect(snapshot, out);
    } catch (const std::exception& e) {
        cli::print_nested(e, err);
        return cli::classify_nested(e);
    }
    return kExitUsage;
}

}  // namespace qmhd
