#pragma once

#include <charconv>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qmhd/experiments.hpp"
#include "qmhd/snapshot_io.hpp"

namespace qmhd {

// Flat sectioned key = value format:
//   [section]            starts a section
//   key = value          one setting; unknown sections and keys are errors
//   # or ;               comment to end of line
// Lists are whitespace or comma separated.

struct GridConfig {
    int dim = 1;
    std::array<int, 3> points{64, 1, 1};
    std::size_t modes = 0;  // 0 selects the full dealiased band
    bool operator==(const GridConfig&) const = default;
};

struct InitialConfig {
    std::string source = "benchmark";  // benchmark | snapshot
    BenchmarkId benchmark = BenchmarkId::DensityBump;
    BenchmarkParams bench;
    std::string rho_file, u_file, b_file;  // snapshot source, relative to the config file
    double t0 = 0.0;
    bool operator==(const InitialConfig&) const = default;
};

struct OutputConfig {
    std::string directory = "out";
    std::size_t snapshot_every = 0;     // steps between snapshots; 0 writes only the first and last
    std::size_t diagnostics_every = 1;  // steps between diagnostics rows
    bool operator==(const OutputConfig&) const = default;
};

struct SweepConfig {
    SweepParameter parameter = SweepParameter::Kappa;
    std::vector<double> ladder;
    std::optional<double> limit;
    Coupling coupling;
    std::size_t store_every = 1;
    bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
    GridConfig grid;
    PhysParams phys;
    RegParams reg;
    InitialConfig initial;
    double t_end = 0.1;
    OutputConfig output;
    int threads = 1;
    std::optional<SweepConfig> sweep;
    std::filesystem::path base_dir;  // directory of the config file, not part of the echo

    bool operator==(const RunConfig& o) const {
        return grid == o.grid && phys == o.phys && reg == o.reg && initial == o.initial && t_end == o.t_end &&
               output == o.output && threads == o.threads && sweep == o.sweep;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, int line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) throw ParseError(line, "not a finite number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, int line) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError(line, "not an integer: '" + s + "'");
    return v;
}

inline std::size_t parse_count(const std::string& s, int line) {
    const long long v = parse_int(s, line);
    if (v < 0) throw ParseError(line, "must be nonnegative: '" + s + "'");
    return std::size_t(v);
}

inline bool parse_bool(const std::string& s, int line) {
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ParseError(line, "not a boolean: '" + s + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Key {
    std::string section, name;
    std::function<void(RunConfig&, const std::string&, int)> set;
    std::function<std::string(const RunConfig&)> get;
    bool allow_empty = false;
};

inline std::vector<Key> config_keys() {
    std::vector<Key> k;
    auto num = [&](std::string sec, std::string name, auto ref) {
        k.push_back({sec, name, [ref](RunConfig& c, const std::string& v, int l) { ref(c) = parse_double(v, l); },
                     [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); }});
    };
    auto cnt = [&](std::string sec, std::string name, auto ref) {
        k.push_back({sec, name,
                     [ref](RunConfig& c, const std::string& v, int l) {
                         ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_count(v, l));
                     },
                     [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }});
    };
    auto str = [&](std::string sec, std::string name, auto ref) {
        k.push_back({sec, name, [ref](RunConfig& c, const std::string& v, int) { ref(c) = v; },
                     [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }, true});
    };

    cnt("grid", "dim", [](RunConfig& c) -> int& { return c.grid.dim; });
    k.push_back({"grid", "points",
                 [](RunConfig& c, const std::string& v, int l) {
                     const auto items = split_list(v);
                     if (items.empty() || items.size() > 3) throw ParseError(l, "points takes one to three sizes");
                     std::array<int, 3> p{1, 1, 1};
                     for (std::size_t i = 0; i < items.size(); ++i) p[i] = int(parse_count(items[i], l));
                     if (items.size() == 1) p[1] = p[2] = -p[0];  // replicated over dim after parsing
                     c.grid.points = p;
                 },
                 [](const RunConfig& c) {
                     std::string s;
                     for (int a = 0; a < c.grid.dim; ++a) s += (a ? " " : "") + std::to_string(c.grid.points[a]);
                     return s;
                 }});
    cnt("grid", "modes", [](RunConfig& c) -> std::size_t& { return c.grid.modes; });

    num("physics", "gamma", [](RunConfig& c) -> double& { return c.phys.gamma; });
    num("physics", "gamma_minus", [](RunConfig& c) -> double& { return c.phys.gamma_minus; });
    num("physics", "kappa", [](RunConfig& c) -> double& { return c.phys.kappa; });
    num("physics", "c1", [](RunConfig& c) -> double& { return c.phys.c1; });
    num("physics", "c2", [](RunConfig& c) -> double& { return c.phys.c2; });
    num("physics", "d0", [](RunConfig& c) -> double& { return c.phys.nu.d0; });
    num("physics", "d1", [](RunConfig& c) -> double& { return c.phys.nu.d1; });
    num("physics", "d2", [](RunConfig& c) -> double& { return c.phys.nu.d2; });
    num("physics", "d3", [](RunConfig& c) -> double& { return c.phys.nu.d3; });
    num("physics", "a", [](RunConfig& c) -> double& { return c.phys.nu.a; });
    num("physics", "a_prime", [](RunConfig& c) -> double& { return c.phys.nu.a_prime; });
    num("physics", "b", [](RunConfig& c) -> double& { return c.phys.nu.b; });
    num("physics", "M", [](RunConfig& c) -> double& { return c.phys.nu.M; });

    num("regularization", "epsilon", [](RunConfig& c) -> double& { return c.reg.epsilon; });
    num("regularization", "eta", [](RunConfig& c) -> double& { return c.reg.eta; });
    num("regularization", "delta", [](RunConfig& c) -> double& { return c.reg.delta; });
    cnt("regularization", "s", [](RunConfig& c) -> int& { return c.reg.s; });
    num("regularization", "dt", [](RunConfig& c) -> double& { return c.reg.dt; });
    num("regularization", "picard_tol", [](RunConfig& c) -> double& { return c.reg.picard_tol; });
    cnt("regularization", "picard_max_iters", [](RunConfig& c) -> int& { return c.reg.picard_max_iters; });
    num("regularization", "density_floor", [](RunConfig& c) -> double& { return c.reg.density_floor; });

    str("initial", "source", [](RunConfig& c) -> std::string& { return c.initial.source; });
    k.push_back({"initial", "benchmark",
                 [](RunConfig& c, const std::string& v, int l) {
                     try {
                         c.initial.benchmark = benchmark_from_string(v);
                     } catch (const ValidationError& e) {
                         throw ParseError(l, e.what());
                     }
                 },
                 [](const RunConfig& c) { return to_string(c.initial.benchmark); }});
    num("initial", "t0", [](RunConfig& c) -> double& { return c.initial.t0; });
    num("initial", "rho_mean", [](RunConfig& c) -> double& { return c.initial.bench.rho_mean; });
    num("initial", "density_amplitude", [](RunConfig& c) -> double& { return c.initial.bench.density_amplitude; });
    num("initial", "velocity_amplitude", [](RunConfig& c) -> double& { return c.initial.bench.velocity_amplitude; });
    cnt("initial", "velocity_component", [](RunConfig& c) -> int& { return c.initial.bench.velocity_component; });
    num("initial", "b_mean", [](RunConfig& c) -> double& { return c.initial.bench.b_mean; });
    num("initial", "b_amplitude", [](RunConfig& c) -> double& { return c.initial.bench.b_amplitude; });
    cnt("initial", "random_kmax", [](RunConfig& c) -> int& { return c.initial.bench.random_kmax; });
    str("initial", "rho_file", [](RunConfig& c) -> std::string& { return c.initial.rho_file; });
    str("initial", "u_file", [](RunConfig& c) -> std::string& { return c.initial.u_file; });
    str("initial", "b_file", [](RunConfig& c) -> std::string& { return c.initial.b_file; });

    num("run", "t_end", [](RunConfig& c) -> double& { return c.t_end; });

    str("output", "directory", [](RunConfig& c) -> std::string& { return c.output.directory; });
    cnt("output", "snapshot_every", [](RunConfig& c) -> std::size_t& { return c.output.snapshot_every; });
    cnt("output", "diagnostics_every", [](RunConfig& c) -> std::size_t& { return c.output.diagnostics_every; });

    cnt("determinism", "seed", [](RunConfig& c) -> std::uint64_t& { return c.initial.bench.seed; });
    cnt("determinism", "threads", [](RunConfig& c) -> int& { return c.threads; });

    auto sw = [](RunConfig& c) -> SweepConfig& {
        if (!c.sweep) c.sweep.emplace();
        return *c.sweep;
    };
    k.push_back({"sweep", "parameter",
                 [sw](RunConfig& c, const std::string& v, int l) {
                     try {
                         sw(c).parameter = sweep_parameter_from_string(v);
                     } catch (const ValidationError& e) {
                         throw ParseError(l, e.what());
                     }
                 },
                 [](const RunConfig& c) { return to_string(c.sweep->parameter); }});
    k.push_back({"sweep", "ladder",
                 [sw](RunConfig& c, const std::string& v, int l) {
                     auto& lad = sw(c).ladder;
                     lad.clear();
                     for (const auto& item : split_list(v)) lad.push_back(parse_double(item, l));
                 },
                 [](const RunConfig& c) {
                     std::string s;
                     for (std::size_t i = 0; i < c.sweep->ladder.size(); ++i)
                         s += (i ? " " : "") + format_double(c.sweep->ladder[i]);
                     return s;
                 }});
    k.push_back({"sweep", "limit",
                 [sw](RunConfig& c, const std::string& v, int l) {
                     if (v == "none")
                         sw(c).limit.reset();
                     else
                         sw(c).limit = parse_double(v, l);
                 },
                 [](const RunConfig& c) { return c.sweep->limit ? format_double(*c.sweep->limit) : std::string("none"); }});
    k.push_back({"sweep", "coupling",
                 [sw](RunConfig& c, const std::string& v, int l) { sw(c).coupling.enabled = parse_bool(v, l); },
                 [](const RunConfig& c) { return std::string(c.sweep->coupling.enabled ? "on" : "off"); }});
    num("sweep", "eps_coef", [sw](RunConfig& c) -> double& { return sw(c).coupling.eps_coef; });
    num("sweep", "eps_power", [sw](RunConfig& c) -> double& { return sw(c).coupling.eps_power; });
    num("sweep", "eta_coef", [sw](RunConfig& c) -> double& { return sw(c).coupling.eta_coef; });
    num("sweep", "eta_power", [sw](RunConfig& c) -> double& { return sw(c).coupling.eta_power; });
    cnt("sweep", "store_every", [sw](RunConfig& c) -> std::size_t& { return sw(c).store_every; });
    return k;
}

inline const std::vector<Key>& keys() {
    static const std::vector<Key> k = config_keys();
    return k;
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
    auto req = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ValidationError(field, what);
    };
    req(c.grid.dim >= 1 && c.grid.dim <= 3, "grid.dim", "must be 1, 2 or 3");
    for (int a = 0; a < c.grid.dim; ++a)
        req(c.grid.points[a] >= 8 && c.grid.points[a] % 2 == 0, "grid.points", "even and at least 8 per axis");
    const TorusGrid g(c.grid.dim, c.grid.points);
    if (c.grid.modes > 0) req(c.grid.modes <= GalerkinBasis::full_band(g).size(), "grid.modes", "exceeds the dealiased band");
    c.phys.validate();
    c.reg.validate();
    req(c.initial.source == "benchmark" || c.initial.source == "snapshot", "initial.source", "benchmark or snapshot");
    req(std::isfinite(c.initial.t0), "initial.t0", "finite");
    req(c.initial.bench.velocity_component <= 2, "initial.velocity_component", "0, 1 or 2");
    if (c.initial.source == "benchmark") {
        req(c.initial.bench.rho_mean > 0.0, "initial.rho_mean", "must be > 0");
        req(c.initial.bench.random_kmax >= 1, "initial.random_kmax", "must be >= 1");
    } else {
        for (const auto* f : {&c.initial.rho_file, &c.initial.u_file, &c.initial.b_file}) {
            req(!f->empty(), "initial.rho_file, u_file, b_file", "required for a snapshot source");
            if (!std::filesystem::exists(c.base_dir / *f)) throw ValidationError("initial." + *f, "file does not exist");
        }
    }
    req(std::isfinite(c.t_end), "run.t_end", "finite");
    req(!c.output.directory.empty(), "output.directory", "must not be empty");
    req(c.threads >= 1, "determinism.threads", "must be >= 1");
    if (c.sweep) {
        req(c.sweep->ladder.size() >= 3, "sweep.ladder", "at least three rungs");
        req(c.sweep->store_every >= 1, "sweep.store_every", "must be >= 1");
    }
}

inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {}) {
    RunConfig c;
    c.base_dir = base_dir;
    std::map<std::string, int> seen;  // "section.key" -> line
    std::string section;
    bool d2_given = false;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ParseError(line, "unterminated section header");
            section = detail::trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const auto& k : detail::keys()) known = known || k.section == section;
            if (!known) throw ParseError(line, "unknown section [" + section + "]");
            if (section == "sweep" && !c.sweep) c.sweep.emplace();
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(line, "expected key = value");
        const std::string key = detail::trim(s.substr(0, eq)), value = detail::trim(s.substr(eq + 1));
        if (section.empty()) throw ParseError(line, "key outside of a section");
        const detail::Key* found = nullptr;
        for (const auto& k : detail::keys())
            if (k.section == section && k.name == key) found = &k;
        if (!found) throw ParseError(line, "unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (seen.count(full)) throw ParseError(line, "duplicate key '" + full + "'");
        if (value.empty() && !found->allow_empty) throw ParseError(line, "missing value for '" + full + "'");
        seen[full] = line;
        found->set(c, value, line);
        if (full == "physics.d2") d2_given = true;
    }
    if (c.grid.points[1] < 0) {
        const int n = c.grid.points[0];
        c.grid.points = {n, c.grid.dim >= 2 ? n : 1, c.grid.dim >= 3 ? n : 1};
    }
    for (int a = c.grid.dim; a < 3; ++a) c.grid.points[a] = 1;
    if (!d2_given) c.phys.nu.d2 = c.phys.nu.continuous_d2();
    try {
        validate_config(c);
    } catch (const ValidationError& e) {
        const auto it = seen.find(e.field());
        if (it == seen.end()) throw;
        throw ValidationError(e.field(), e.constraint() + " (line " + std::to_string(it->second) + ")");
    }
    return c;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path.parent_path());
}

// Every key in a fixed order; parse_config_text(canonical_config(c)) == c.
inline std::string canonical_config(const RunConfig& c) {
    std::string out, section;
    for (const auto& k : detail::keys()) {
        if (k.section == "sweep" && !c.sweep) continue;
        if (k.section != section) {
            out += (out.empty() ? "[" : "\n[") + k.section + "]\n";
            section = k.section;
        }
        out += k.name + " = " + k.get(c) + "\n";
    }
    return out;
}

inline TorusGrid make_grid(const RunConfig& c) { return TorusGrid(c.grid.dim, c.grid.points); }

inline GalerkinBasis make_basis(const RunConfig& c, const TorusGrid& g) {
    return c.grid.modes == 0 ? GalerkinBasis::full_band(g) : GalerkinBasis(g, c.grid.modes);
}

inline InitialData load_initial(const RunConfig& c, const TorusGrid& g) {
    if (c.initial.source == "benchmark") return make_benchmark(c.initial.benchmark, g, c.initial.bench);
    const Snapshot r = read_snapshot(c.base_dir / c.initial.rho_file);
    const Snapshot u = read_snapshot(c.base_dir / c.initial.u_file);
    const Snapshot b = read_snapshot(c.base_dir / c.initial.b_file);
    for (const Snapshot* s : {&r, &u, &b})
        if (!(s->grid == g)) throw ValidationError("initial", "snapshot grid differs from [grid]");
    return {r.scalar(), u.vector(), b.vector()};
}

inline SweepSpec make_sweep_spec(const RunConfig& c) {
    if (!c.sweep) throw ValidationError("sweep", "config has no [sweep] section");
    if (c.initial.source != "benchmark") throw ValidationError("initial.source", "sweeps start from a benchmark");
    SweepSpec s;
    s.parameter = c.sweep->parameter;
    s.ladder = c.sweep->ladder;
    s.limit = c.sweep->limit;
    s.coupling = c.sweep->coupling;
    s.benchmark = c.initial.benchmark;
    s.bench = c.initial.bench;
    s.dim = c.grid.dim;
    s.points = c.grid.points;
    s.modes = c.grid.modes;
    s.phys = c.phys;
    s.reg = c.reg;
    s.t_end = c.t_end - c.initial.t0;
    s.store_every = c.sweep->store_every;
    s.threads = c.threads;
    s.validate();
    return s;
}

}  // namespace qmhd
