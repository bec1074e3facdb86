#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "qmhd/grid.hpp"

namespace qmhd {

// Fourier coefficients normalized as grid means: c_k = mean(f exp(-i k.x)).
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(TorusGrid g) : grid_(std::move(g)), c_(grid_.size(), cplx(0.0)) {}

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return c_.size(); }
    cplx& operator[](std::size_t i) { return c_[i]; }
    const cplx& operator[](std::size_t i) const { return c_[i]; }
    cplx* data() { return c_.data(); }
    const cplx* data() const { return c_.data(); }
    // Coefficient of integer wavevector k (aliased onto the grid).
    cplx at(const std::array<int, 3>& k) const { return c_[grid_.spectral_index(k)]; }

private:
    TorusGrid grid_;
    std::vector<cplx> c_;
};

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(TorusGrid g, double value = 0.0)
        : grid_(std::move(g)), v_(grid_.size(), value) {}
    ScalarField(TorusGrid g, std::vector<double> values)
        : grid_(std::move(g)), v_(std::move(values)) {
        if (v_.size() != grid_.size()) throw Error("ScalarField: sample count does not match grid");
    }

    // Samples f(x, y, z) at the grid points; unused coordinates are 0.
    template <class F>
    static ScalarField from_function(const TorusGrid& g, F&& f) {
        ScalarField out(g);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const auto m = g.multi_index(p);
            out.v_[p] = f(g.coordinate(0, m[0]), g.coordinate(1, m[1]), g.coordinate(2, m[2]));
        }
        return out;
    }

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    const double& operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    double min() const { return *std::min_element(v_.begin(), v_.end()); }
    double max() const { return *std::max_element(v_.begin(), v_.end()); }
    double max_abs() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }
    double mean() const { return std::accumulate(v_.begin(), v_.end(), 0.0) / v_.size(); }
    bool all_finite() const {
        return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
    }

    template <class F>
    ScalarField map(F&& f) const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i < v_.size(); ++i) out.v_[i] = f(v_[i]);
        return out;
    }

    ScalarField& operator+=(const ScalarField& o) { return combine(o, std::plus<>{}); }
    ScalarField& operator-=(const ScalarField& o) { return combine(o, std::minus<>{}); }
    ScalarField& operator*=(const ScalarField& o) { return combine(o, std::multiplies<>{}); }
    ScalarField& operator*=(double s) {
        for (double& x : v_) x *= s;
        return *this;
    }
    ScalarField& operator+=(double s) {
        for (double& x : v_) x += s;
        return *this;
    }

private:
    template <class Op>
    ScalarField& combine(const ScalarField& o, Op op) {
        if (o.grid_ != grid_) throw Error("ScalarField: grid mismatch");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = op(v_[i], o.v_[i]);
        return *this;
    }

    TorusGrid grid_;
    std::vector<double> v_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }
inline ScalarField operator*(ScalarField a, double s) { return a *= s; }
inline ScalarField operator-(ScalarField a) { return a *= -1.0; }

// Three components on a grid of any dimension.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const TorusGrid& g) : c_{ScalarField(g), ScalarField(g), ScalarField(g)} {}
    VectorField(ScalarField x, ScalarField y, ScalarField z)
        : c_{std::move(x), std::move(y), std::move(z)} {
        if (c_[1].grid() != c_[0].grid() || c_[2].grid() != c_[0].grid())
            throw Error("VectorField: components on different grids");
    }

    template <class F>
    static VectorField from_function(const TorusGrid& g, F&& f) {
        VectorField out(g);
        for (std::size_t p = 0; p < g.size(); ++p) {
            const auto m = g.multi_index(p);
            const std::array<double, 3> v =
                f(g.coordinate(0, m[0]), g.coordinate(1, m[1]), g.coordinate(2, m[2]));
            for (int c = 0; c < 3; ++c) out.c_[c][p] = v[c];
        }
        return out;
    }

    const TorusGrid& grid() const { return c_[0].grid(); }
    ScalarField& operator[](int c) { return c_[c]; }
    const ScalarField& operator[](int c) const { return c_[c]; }

    bool all_finite() const {
        return c_[0].all_finite() && c_[1].all_finite() && c_[2].all_finite();
    }
    double max_norm() const {
        double m = 0.0;
        for (std::size_t p = 0; p < c_[0].size(); ++p)
            m = std::max(m, std::sqrt(c_[0][p] * c_[0][p] + c_[1][p] * c_[1][p] + c_[2][p] * c_[2][p]));
        return m;
    }

    VectorField& operator+=(const VectorField& o) {
        for (int c = 0; c < 3; ++c) c_[c] += o.c_[c];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (int c = 0; c < 3; ++c) c_[c] -= o.c_[c];
        return *this;
    }
    VectorField& operator*=(double s) {
        for (auto& x : c_) x *= s;
        return *this;
    }
    // Pointwise scaling by a scalar field.
    VectorField& operator*=(const ScalarField& f) {
        for (auto& x : c_) x *= f;
        return *this;
    }

private:
    std::array<ScalarField, 3> c_;
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }
inline VectorField operator*(const ScalarField& f, VectorField a) { return a *= f; }

// 3x3 field of rank-two tensor components t[i][j].
using TensorField = std::array<std::array<ScalarField, 3>, 3>;

inline ScalarField dot(const VectorField& a, const VectorField& b) {
    ScalarField out = a[0] * b[0];
    out += a[1] * b[1];
    out += a[2] * b[2];
    return out;
}

inline VectorField cross(const VectorField& a, const VectorField& b) {
    return VectorField(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                       a[0] * b[1] - a[1] * b[0]);
}

}  // namespace qmhd
