#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qmhd/field.hpp"

namespace qmhd {

// Collects non-fatal spectral tail warnings raised by derivative operators.
struct SpectralWarnings {
    std::vector<std::string> messages;
    double tail_threshold = 0.01;
    void note(const std::string& op, double fraction) {
        messages.push_back(op + ": spectral tail holds " + std::to_string(fraction * 100.0) +
                           "% of L2 mass");
    }
    bool empty() const { return messages.empty(); }
};

inline Spectrum forward(const ScalarField& f) {
    if (!f.all_finite()) throw NonFiniteInput("forward transform: non-finite sample");
    const TorusGrid& g = f.grid();
    std::vector<cplx> in(f.values().begin(), f.values().end());
    Spectrum s(g);
    g.plans().forward(in.data(), s.data());
    const double scale = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= scale;
    return s;
}

inline ScalarField inverse(const Spectrum& s) {
    const TorusGrid& g = s.grid();
    std::vector<cplx> in(s.data(), s.data() + s.size());
    std::vector<cplx> out(s.size());
    g.plans().backward(in.data(), out.data());
    ScalarField f(g);
    for (std::size_t i = 0; i < out.size(); ++i) f[i] = out[i].real();
    return f;
}

// Visits every coefficient with its derivative wavevector and integer wavevector.
template <class F>
void for_each_mode(const TorusGrid& g, F&& f) {
    std::size_t p = 0;
    for (int i = 0; i < g.points(0); ++i) {
        const double k0 = g.derivative_wavenumber(0, i);
        const int n0 = g.wavenumber(0, i);
        for (int j = 0; j < g.points(1); ++j) {
            const double k1 = g.derivative_wavenumber(1, j);
            const int n1 = g.wavenumber(1, j);
            for (int l = 0; l < g.points(2); ++l, ++p) {
                const double k2 = g.derivative_wavenumber(2, l);
                const int n2 = g.wavenumber(2, l);
                f(p, std::array<double, 3>{k0, k1, k2}, std::array<int, 3>{n0, n1, n2});
            }
        }
    }
}

// Multiplies coefficients by m(k) where k is the derivative wavevector.
template <class M>
Spectrum apply_multiplier(Spectrum s, M&& m) {
    for_each_mode(s.grid(), [&](std::size_t p, const std::array<double, 3>& k, const auto&) {
        s[p] *= m(k);
    });
    return s;
}

template <class M>
ScalarField apply_multiplier(const ScalarField& f, M&& m) {
    return inverse(apply_multiplier(forward(f), std::forward<M>(m)));
}

inline double ksq(const std::array<double, 3>& k) { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

inline bool is_dealiased_out(const TorusGrid& g, const std::array<int, 3>& n) {
    for (int a = 0; a < g.dim(); ++a)
        if (std::abs(n[a]) > g.dealias_cutoff(a)) return true;
    return false;
}

// Fraction of the L2 mass carried by modes removed by the 2/3 rule.
inline double spectral_tail_fraction(const Spectrum& s) {
    double tail = 0.0, total = 0.0;
    for_each_mode(s.grid(), [&](std::size_t p, const auto&, const std::array<int, 3>& n) {
        const double e = std::norm(s[p]);
        total += e;
        if (is_dealiased_out(s.grid(), n)) tail += e;
    });
    return total > 0.0 ? tail / total : 0.0;
}

namespace detail {
inline void check_tail(const Spectrum& s, const char* op, SpectralWarnings* w) {
    if (!w) return;
    const double frac = spectral_tail_fraction(s);
    if (frac > w->tail_threshold) w->note(op, frac);
}
}  // namespace detail

inline ScalarField derivative(const ScalarField& f, int axis) {
    if (axis >= f.grid().dim()) return ScalarField(f.grid());
    return apply_multiplier(f, [axis](const auto& k) { return cplx(0.0, k[axis]); });
}

inline VectorField gradient(const ScalarField& f) {
    const Spectrum s = forward(f);
    VectorField out(f.grid());
    for (int a = 0; a < f.grid().dim(); ++a)
        out[a] = inverse(apply_multiplier(s, [a](const auto& k) { return cplx(0.0, k[a]); }));
    return out;
}

inline Spectrum divergence_spectrum(const VectorField& v) {
    const TorusGrid& g = v.grid();
    Spectrum out(g);
    for (int a = 0; a < g.dim(); ++a) {
        const Spectrum s = forward(v[a]);
        for_each_mode(g, [&](std::size_t p, const auto& k, const auto&) {
            out[p] += cplx(0.0, k[a]) * s[p];
        });
    }
    return out;
}

inline ScalarField divergence(const VectorField& v, SpectralWarnings* w = nullptr) {
    Spectrum s = divergence_spectrum(v);
    detail::check_tail(s, "divergence", w);
    return inverse(s);
}

inline ScalarField laplacian(const ScalarField& f, SpectralWarnings* w = nullptr) {
    Spectrum s = apply_multiplier(forward(f), [](const auto& k) { return cplx(-ksq(k)); });
    detail::check_tail(s, "laplacian", w);
    return inverse(s);
}

// Delta^k for k >= 1.
inline ScalarField power_laplacian(const ScalarField& f, int k, SpectralWarnings* w = nullptr) {
    if (k < 1) throw Error("power_laplacian: power must be positive");
    Spectrum s = apply_multiplier(forward(f), [k](const auto& kv) {
        return cplx(std::pow(-ksq(kv), k));
    });
    detail::check_tail(s, "power_laplacian", w);
    return inverse(s);
}

inline VectorField curl(const VectorField& v, SpectralWarnings* w = nullptr) {
    const TorusGrid& g = v.grid();
    std::array<Spectrum, 3> s{forward(v[0]), forward(v[1]), forward(v[2])};
    std::array<Spectrum, 3> out{Spectrum(g), Spectrum(g), Spectrum(g)};
    for_each_mode(g, [&](std::size_t p, const auto& k, const auto&) {
        const cplx i(0.0, 1.0);
        out[0][p] = i * (k[1] * s[2][p] - k[2] * s[1][p]);
        out[1][p] = i * (k[2] * s[0][p] - k[0] * s[2][p]);
        out[2][p] = i * (k[0] * s[1][p] - k[1] * s[0][p]);
    });
    VectorField r(g);
    for (int c = 0; c < 3; ++c) {
        detail::check_tail(out[c], "curl", w);
        r[c] = inverse(out[c]);
    }
    return r;
}

// (div T)_j = sum_i d_i T_ij.
inline VectorField divergence(const TensorField& t) {
    const TorusGrid& g = t[0][0].grid();
    VectorField out(g);
    for (int j = 0; j < 3; ++j) {
        Spectrum acc(g);
        for (int i = 0; i < g.dim(); ++i) {
            const Spectrum s = forward(t[i][j]);
            for_each_mode(g, [&](std::size_t p, const auto& k, const auto&) {
                acc[p] += cplx(0.0, k[i]) * s[p];
            });
        }
        out[j] = inverse(acc);
    }
    return out;
}

// Velocity gradient g[i][j] = d_j v_i.
inline TensorField jacobian(const VectorField& v) {
    TensorField out;
    for (int i = 0; i < 3; ++i) {
        const VectorField gi = gradient(v[i]);
        for (int j = 0; j < 3; ++j) out[i][j] = gi[j];
    }
    return out;
}

inline VectorField project_divergence_free(const VectorField& v) {
    const TorusGrid& g = v.grid();
    std::array<Spectrum, 3> s{forward(v[0]), forward(v[1]), forward(v[2])};
    for_each_mode(g, [&](std::size_t p, const auto& k, const auto&) {
        const double k2 = ksq(k);
        if (k2 == 0.0) return;
        const cplx kv = (k[0] * s[0][p] + k[1] * s[1][p] + k[2] * s[2][p]) / k2;
        for (int c = 0; c < 3; ++c) s[c][p] -= k[c] * kv;
    });
    return VectorField(inverse(s[0]), inverse(s[1]), inverse(s[2]));
}

inline Spectrum dealias(Spectrum s) {
    for_each_mode(s.grid(), [&](std::size_t p, const auto&, const std::array<int, 3>& n) {
        if (is_dealiased_out(s.grid(), n)) s[p] = 0.0;
    });
    return s;
}

inline ScalarField dealias(const ScalarField& f) { return inverse(dealias(forward(f))); }

inline VectorField dealias(const VectorField& v) {
    return VectorField(dealias(v[0]), dealias(v[1]), dealias(v[2]));
}

// Product of the band-limited parts of a and b, filtered again.
inline ScalarField dealiased_product(const ScalarField& a, const ScalarField& b) {
    return dealias(dealias(a) * dealias(b));
}

inline double integrate(const ScalarField& f) { return f.mean() * f.grid().volume(); }

inline double inner_product(const ScalarField& f, const ScalarField& g) {
    if (f.grid() != g.grid()) throw Error("inner_product: grid mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
    return acc / static_cast<double>(f.size()) * f.grid().volume();
}

inline double inner_product(const VectorField& a, const VectorField& b) {
    return inner_product(a[0], b[0]) + inner_product(a[1], b[1]) + inner_product(a[2], b[2]);
}

inline double norm_l2(const ScalarField& f) { return std::sqrt(inner_product(f, f)); }
inline double norm_l2(const VectorField& v) { return std::sqrt(inner_product(v, v)); }

// Parseval form of the integral of f g.
inline double spectral_inner_product(const Spectrum& a, const Spectrum& b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) acc += (std::conj(a[p]) * b[p]).real();
    return acc * a.grid().volume();
}

}  // namespace qmhd
