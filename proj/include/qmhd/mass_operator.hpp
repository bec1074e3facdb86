#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qmhd/galerkin_basis.hpp"

namespace qmhd {

using Coeffs = std::vector<double>;

inline Eigen::Map<const Eigen::VectorXd> as_eigen(const Coeffs& c) {
    return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

inline Coeffs to_coeffs(const Eigen::VectorXd& v) { return Coeffs(v.data(), v.data() + v.size()); }

// G_ij = integral of rho e_i . e_j, assembled from the coefficients of rho.
inline Eigen::MatrixXd mass_matrix(const GalerkinBasis& basis, const ScalarField& rho) {
    const Spectrum w = forward(rho);
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            if (basis.component(i) != basis.component(j)) continue;
            m(i, j) = m(j, i) = weighted_product_integral(w, basis.profile(i), basis.profile(j));
        }
    return m;
}

// Cholesky-factored mass operator for one density.
class MassOperator {
public:
    MassOperator(const GalerkinBasis& basis, const ScalarField& rho)
        : matrix_(mass_matrix(basis, rho)), llt_(matrix_) {
        if (llt_.info() != Eigen::Success)
            throw SingularMass("mass operator is not positive definite (min rho = " +
                               std::to_string(rho.min()) + ")");
    }

    const Eigen::MatrixXd& matrix() const { return matrix_; }

    Coeffs apply(const Coeffs& v) const { return to_coeffs(matrix_ * as_eigen(v)); }

    // Solves with one step of iterative refinement; relative residual must reach 1e-12.
    Coeffs solve(const Coeffs& rhs) const {
        const auto b = as_eigen(rhs);
        Eigen::VectorXd x = llt_.solve(b);
        Eigen::VectorXd r = b - matrix_ * x;
        x += llt_.solve(r);
        r = b - matrix_ * x;
        const double scale = b.norm();
        if (!x.allFinite() || (scale > 0.0 && r.norm() > 1e-12 * scale))
            throw SingularMass("mass solve residual " + std::to_string(r.norm() / scale) + " exceeds 1e-12");
        return to_coeffs(x);
    }

private:
    Eigen::MatrixXd matrix_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

inline Coeffs mass_operator_apply(const GalerkinBasis& basis, const ScalarField& rho, const Coeffs& v) {
    return to_coeffs(mass_matrix(basis, rho) * as_eigen(v));
}

inline Coeffs mass_operator_solve(const GalerkinBasis& basis, const ScalarField& rho, const Coeffs& rhs) {
    return MassOperator(basis, rho).solve(rhs);
}

}  // namespace qmhd
