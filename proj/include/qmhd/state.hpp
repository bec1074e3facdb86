#pragma once

#include "qmhd/constitutive.hpp"
#include "qmhd/mass_operator.hpp"

namespace qmhd {

struct RegParams {
    double epsilon = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    int s = 1;
    double dt = 1e-3;
    double picard_tol = 1e-10;
    int picard_max_iters = 50;
    double density_floor = kDefaultDensityFloor;

    bool operator==(const RegParams&) const = default;

    void validate() const {
        auto req = [](bool ok, const char* field, const char* what) {
            if (!ok) throw ValidationError(field, what);
        };
        req(std::isfinite(epsilon) && epsilon >= 0.0, "regularization.epsilon", "must be >= 0");
        req(std::isfinite(eta) && eta >= 0.0, "regularization.eta", "must be >= 0");
        req(std::isfinite(delta) && delta >= 0.0, "regularization.delta", "must be >= 0");
        req(s >= 1, "regularization.s", "must be >= 1");
        req(std::isfinite(dt) && dt > 0.0, "regularization.dt", "must be > 0");
        req(picard_tol > 0.0 && picard_tol < 1.0, "regularization.picard_tol", "must be in (0, 1)");
        req(picard_max_iters >= 1, "regularization.picard_max_iters", "must be >= 1");
        req(density_floor > 0.0, "regularization.density_floor", "must be > 0");
    }
};

struct State {
    double time = 0.0;
    ScalarField rho;
    Coeffs lambda;
    VectorField u;  // reconstruction of lambda
    VectorField B;
};

}  // namespace qmhd
