#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "qmhd/operators.hpp"

namespace qmhd {

enum class TrigKind { Cos, Sin };

// coef * cos(k.x) or coef * sin(k.x).
struct Trig {
    std::array<int, 3> k{0, 0, 0};
    TrigKind kind = TrigKind::Cos;
    double coef = 0.0;

    Trig derivative(int axis) const {
        const double ka = k[axis];
        if (kind == TrigKind::Cos) return {k, TrigKind::Sin, -coef * ka};
        return {k, TrigKind::Cos, coef * ka};
    }
    double k2() const { return double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]; }
};

// Integral of g * t from the Fourier coefficients of g.
inline double integral_against(const Spectrum& g, const Trig& t) {
    if (t.coef == 0.0) return 0.0;
    const cplx c = g.at(t.k);
    const double v = g.grid().volume();
    return t.kind == TrigKind::Cos ? t.coef * v * c.real() : -t.coef * v * c.imag();
}

// Integral of w * a * b via product-to-sum identities. Equal to grid quadrature.
inline double weighted_product_integral(const Spectrum& w, const Trig& a, const Trig& b) {
    if (a.coef == 0.0 || b.coef == 0.0) return 0.0;
    std::array<int, 3> kp{}, km{};
    for (int d = 0; d < 3; ++d) {
        kp[d] = a.k[d] + b.k[d];
        km[d] = a.k[d] - b.k[d];
    }
    const double h = 0.5 * a.coef * b.coef;
    const bool ca = a.kind == TrigKind::Cos, cb = b.kind == TrigKind::Cos;
    auto I = [&](TrigKind kind, const std::array<int, 3>& q) { return integral_against(w, {q, kind, 1.0}); };
    if (ca && cb) return h * (I(TrigKind::Cos, km) + I(TrigKind::Cos, kp));
    if (!ca && !cb) return h * (I(TrigKind::Cos, km) - I(TrigKind::Cos, kp));
    if (!ca && cb) return h * (I(TrigKind::Sin, kp) + I(TrigKind::Sin, km));
    return h * (I(TrigKind::Sin, kp) - I(TrigKind::Sin, km));
}

struct GalerkinMode {
    std::array<int, 3> k{0, 0, 0};
    TrigKind kind = TrigKind::Cos;
    int component = 0;
    bool operator==(const GalerkinMode&) const = default;
};

// Real trigonometric vector modes, orthonormal in L2: the constant 1/sqrt(V) and
// sqrt(2/V) cos(k.x), sqrt(2/V) sin(k.x) for k in a half-space, times each unit
// vector. Ordered by |k|^2, then k lexicographically, cos before sin, then component.
class GalerkinBasis {
public:
    GalerkinBasis() = default;

    // The n lowest modes.
    GalerkinBasis(TorusGrid g, std::size_t n) : grid_(std::move(g)) {
        auto all = enumerate(grid_, -1);
        if (n == 0 || n > all.size())
            throw ValidationError("grid.galerkin_modes",
                                  "must be in [1, " + std::to_string(all.size()) + "] for this grid");
        all.resize(n);
        init(std::move(all));
    }

    GalerkinBasis(TorusGrid g, std::vector<GalerkinMode> modes) : grid_(std::move(g)) {
        for (const auto& m : modes) validate_mode(m);
        init(std::move(modes));
    }

    // Every mode with |k| <= cutoff inside the dealiased band.
    static GalerkinBasis with_cutoff(const TorusGrid& g, int cutoff) {
        if (cutoff < 0) throw ValidationError("grid.galerkin_cutoff", "must be >= 0");
        GalerkinBasis b;
        b.grid_ = g;
        b.init(enumerate(g, cutoff));
        return b;
    }

    static GalerkinBasis full_band(const TorusGrid& g) {
        GalerkinBasis b;
        b.grid_ = g;
        b.init(enumerate(g, -1));
        return b;
    }

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return modes_.size(); }
    const GalerkinMode& mode(std::size_t i) const { return modes_[i]; }
    const std::vector<GalerkinMode>& modes() const { return modes_; }

    // Scalar profile of mode i (the nonzero component).
    Trig profile(std::size_t i) const {
        const auto& m = modes_[i];
        return {m.k, m.kind, normalization(m)};
    }
    // div e_i as a trig function.
    Trig divergence_profile(std::size_t i) const { return profile(i).derivative(modes_[i].component); }
    int component(std::size_t i) const { return modes_[i].component; }
    double k2(std::size_t i) const { return profile(i).k2(); }

    const ScalarField& profile_field(std::size_t i) const { return fields_[i]; }

    VectorField mode_field(std::size_t i) const {
        VectorField v(grid_);
        v[modes_[i].component] = fields_[i];
        return v;
    }

    VectorField reconstruct(const std::vector<double>& lambda) const {
        check_size(lambda);
        std::array<Spectrum, 3> s{Spectrum(grid_), Spectrum(grid_), Spectrum(grid_)};
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            const auto& m = modes_[i];
            const double c = normalization(m) * lambda[i];
            Spectrum& sc = s[m.component];
            if (is_zero(m.k)) {
                sc[grid_.spectral_index(m.k)] += c;
                continue;
            }
            const std::array<int, 3> mk{-m.k[0], -m.k[1], -m.k[2]};
            const cplx plus = m.kind == TrigKind::Cos ? cplx(0.5 * c, 0.0) : cplx(0.0, -0.5 * c);
            sc[grid_.spectral_index(m.k)] += plus;
            sc[grid_.spectral_index(mk)] += std::conj(plus);
        }
        return VectorField(inverse(s[0]), inverse(s[1]), inverse(s[2]));
    }

    // Coefficients (F, e_i) for each mode.
    std::vector<double> project(const VectorField& f) const {
        if (f.grid() != grid_) throw Error("GalerkinBasis::project: grid mismatch");
        const std::array<Spectrum, 3> s{forward(f[0]), forward(f[1]), forward(f[2])};
        std::vector<double> out(modes_.size());
        for (std::size_t i = 0; i < modes_.size(); ++i)
            out[i] = integral_against(s[modes_[i].component], profile(i));
        return out;
    }

    double normalization(const GalerkinMode& m) const {
        return is_zero(m.k) ? 1.0 / std::sqrt(grid_.volume()) : std::sqrt(2.0 / grid_.volume());
    }

private:
    static bool is_zero(const std::array<int, 3>& k) { return k[0] == 0 && k[1] == 0 && k[2] == 0; }

    static bool in_half_space(const std::array<int, 3>& k) {
        for (int d = 0; d < 3; ++d) {
            if (k[d] > 0) return true;
            if (k[d] < 0) return false;
        }
        return true;
    }

    void validate_mode(const GalerkinMode& m) const {
        if (m.component < 0 || m.component > 2) throw ValidationError("galerkin mode", "component out of range");
        for (int d = 0; d < 3; ++d) {
            if (d >= grid_.dim() && m.k[d] != 0) throw ValidationError("galerkin mode", "k on inactive axis");
            if (d < grid_.dim() && std::abs(m.k[d]) > grid_.dealias_cutoff(d))
                throw ValidationError("galerkin mode", "k outside the dealiased band");
        }
        if (!in_half_space(m.k)) throw ValidationError("galerkin mode", "k must lie in the half-space");
        if (is_zero(m.k) && m.kind == TrigKind::Sin) throw ValidationError("galerkin mode", "sin of k = 0");
    }

    // cutoff < 0 keeps the whole dealiased band.
    static std::vector<GalerkinMode> enumerate(const TorusGrid& g, int cutoff) {
        std::vector<std::array<int, 3>> ks;
        std::array<int, 3> lim{};
        for (int d = 0; d < 3; ++d) lim[d] = d < g.dim() ? g.dealias_cutoff(d) : 0;
        for (int a = -lim[0]; a <= lim[0]; ++a)
            for (int b = -lim[1]; b <= lim[1]; ++b)
                for (int c = -lim[2]; c <= lim[2]; ++c) {
                    const std::array<int, 3> k{a, b, c};
                    if (!in_half_space(k)) continue;
                    if (cutoff >= 0 && a * a + b * b + c * c > cutoff * cutoff) continue;
                    ks.push_back(k);
                }
        std::sort(ks.begin(), ks.end(), [](const auto& x, const auto& y) {
            const int nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            const int ny = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
            return nx != ny ? nx < ny : x < y;
        });
        std::vector<GalerkinMode> modes;
        for (const auto& k : ks) {
            for (TrigKind kind : {TrigKind::Cos, TrigKind::Sin}) {
                if (is_zero(k) && kind == TrigKind::Sin) continue;
                for (int c = 0; c < 3; ++c) modes.push_back({k, kind, c});
            }
        }
        return modes;
    }

    void init(std::vector<GalerkinMode> modes) {
        modes_ = std::move(modes);
        fields_.clear();
        fields_.reserve(modes_.size());
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            const Trig t = profile(i);
            fields_.push_back(ScalarField::from_function(grid_, [&](double x, double y, double z) {
                const double ph = t.k[0] * x + t.k[1] * y + t.k[2] * z;
                return t.coef * (t.kind == TrigKind::Cos ? std::cos(ph) : std::sin(ph));
            }));
        }
    }

    void check_size(const std::vector<double>& lambda) const {
        if (lambda.size() != modes_.size()) throw Error("coefficient count does not match basis size");
    }

    TorusGrid grid_;
    std::vector<GalerkinMode> modes_;
    std::vector<ScalarField> fields_;
};

}  // namespace qmhd
