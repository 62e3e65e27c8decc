#pragma once

#include <span>

#include "spg/graph.hpp"

namespace spg {

/// e^{-z} I_0(z), the scaled modified Bessel function (series for small z,
/// asymptotic expansion for large z; absolute accuracy ~1e-14).
double scaled_bessel_i0(double z);

/// Infinite-lattice heat diagonal P(t;0,0) = [e^{-2t} I_0(2t)]^d.
double heat_diag_reference(int dimension, double t);

/// One-dimensional Dirichlet-interval heat kernel via the analytic
/// eigenexpansion of the path Laplacian on (-R, R).
class HeatKernel1D {
public:
    explicit HeatKernel1D(int radius);
    double diag0(double t) const;          // P(t;0,0)
    double value(double t, int x) const;   // P(t;0,x), |x| <= R-1
    /// Mass of e^{t Delta} delta_0 absorbed by the Dirichlet boundary up to
    /// time t (monotone in t).
    double boundary_mass(double t) const;
    int radius() const { return radius_; }

private:
    int radius_;
    int m_;  // interior size 2R-1
    std::vector<double> eigenvalue_;
    std::vector<double> center_amp_;  // psi_k(0)
    std::vector<double> mode_sum_;    // sum_j psi_k(j)
};

struct HeatDiagResult {
    double value = 0.0;
    double boundary_mass = 0.0;  // d-dimensional union bound
    bool valid = false;          // boundary mass below tolerance
};

/// Heat diagonal P(t;0,0) on the Dirichlet box truncation. The box kernel is
/// the d-fold product of the interval kernel, so the eigenexpansion is exact.
/// Rejects the origin-clamped mode (the diagonal there is identically zero).
HeatDiagResult heat_diag(const LatticeSpec& spec, double t, double validity_tol = 1e-6);

/// Least-squares slope fit of log P(t;0,0) vs log t; returns D = -2 * slope.
/// Every grid point must pass the boundary-mass validity check.
double estimate_dimension(const LatticeSpec& spec, std::span<const double> t_grid,
                          double validity_tol = 1e-6);

}  // namespace spg
