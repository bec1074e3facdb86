#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

#include "qmhd/errors.hpp"

namespace qmhd {

using cplx = std::complex<double>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Forward and backward c2c plans for one grid shape. Plans are created with
// FFTW_ESTIMATE on scratch buffers and run through the new-array interface, so
// results depend only on the input and the shape.
class FourierPlans {
public:
    FourierPlans(int dim, const std::array<int, 3>& n) {
        std::size_t total = 1;
        for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(n[a]);
        auto* in = fftw_alloc_complex(total);
        auto* out = fftw_alloc_complex(total);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_ = fftw_plan_dft(dim, n.data(), in, out, FFTW_FORWARD, flags);
        backward_ = fftw_plan_dft(dim, n.data(), in, out, FFTW_BACKWARD, flags);
        fftw_free(in);
        fftw_free(out);
        if (!forward_ || !backward_) throw Error("FFTW plan creation failed");
    }
    FourierPlans(const FourierPlans&) = delete;
    FourierPlans& operator=(const FourierPlans&) = delete;
    ~FourierPlans() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    void forward(cplx* in, cplx* out) const {
        fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    }
    void backward(cplx* in, cplx* out) const {
        fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    }

private:
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

}  // namespace detail

// Uniform periodic grid on [0, 2pi)^dim. Axes beyond dim have one point.
// Copies share the transform plans.
class TorusGrid {
public:
    TorusGrid() = default;

    TorusGrid(int dim, std::array<int, 3> points) : dim_(dim), n_(points) {
        if (dim < 1 || dim > 3) throw ValidationError("grid.dim", "must be 1, 2 or 3");
        for (int a = 0; a < 3; ++a) {
            if (a < dim) {
                if (n_[a] < 8) throw ValidationError("grid.points", "at least 8 points per axis");
                if (n_[a] % 2 != 0) throw ValidationError("grid.points", "must be even");
            } else {
                n_[a] = 1;
            }
        }
        plans_ = std::make_shared<detail::FourierPlans>(dim_, n_);
    }

    static TorusGrid cube(int dim, int n) { return TorusGrid(dim, {n, n, n}); }

    int dim() const { return dim_; }
    int points(int axis) const { return n_[axis]; }
    const std::array<int, 3>& shape() const { return n_; }
    std::size_t size() const {
        return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
    }
    static constexpr double length() { return 2.0 * std::numbers::pi; }
    double spacing(int axis) const { return length() / n_[axis]; }
    double volume() const {
        double v = 1.0;
        for (int a = 0; a < dim_; ++a) v *= length();
        return v;
    }
    double coordinate(int axis, int i) const { return i * spacing(axis); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n_[1] + j) * n_[2] + k;
    }
    std::array<int, 3> multi_index(std::size_t flat) const {
        const int k = static_cast<int>(flat % n_[2]);
        flat /= n_[2];
        const int j = static_cast<int>(flat % n_[1]);
        const int i = static_cast<int>(flat / n_[1]);
        return {i, j, k};
    }

    // Integer wavenumber of FFT index i on an axis, in {-N/2+1, ..., N/2}.
    int wavenumber(int axis, int i) const {
        const int n = n_[axis];
        return i <= n / 2 ? i : i - n;
    }
    // Wavenumber used by derivative operators: the Nyquist mode has no
    // real-valued derivative and is mapped to zero.
    double derivative_wavenumber(int axis, int i) const {
        const int n = n_[axis];
        if (n > 1 && 2 * i == n) return 0.0;
        return wavenumber(axis, i);
    }
    std::array<int, 3> wavevector(std::size_t flat) const {
        const auto m = multi_index(flat);
        return {wavenumber(0, m[0]), wavenumber(1, m[1]), wavenumber(2, m[2])};
    }
    // FFT array offset of integer wavevector k (taken modulo the grid).
    std::size_t spectral_index(const std::array<int, 3>& k) const {
        std::array<int, 3> m{};
        for (int a = 0; a < 3; ++a) m[a] = ((k[a] % n_[a]) + n_[a]) % n_[a];
        return index(m[0], m[1], m[2]);
    }
    // Largest retained wavenumber magnitude per axis under the 2/3 rule: the
    // largest K with 3K < N, so a product of retained modes never aliases back.
    int dealias_cutoff(int axis) const { return (n_[axis] - 1) / 3; }

    const detail::FourierPlans& plans() const { return *plans_; }

    bool operator==(const TorusGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }
    bool operator!=(const TorusGrid& o) const { return !(*this == o); }

    std::string describe() const {
        std::string s = std::to_string(n_[0]);
        for (int a = 1; a < dim_; ++a) s += "x" + std::to_string(n_[a]);
        return s;
    }

private:
    int dim_ = 0;
    std::array<int, 3> n_{1, 1, 1};
    std::shared_ptr<const detail::FourierPlans> plans_;
};

}  // namespace qmhd
