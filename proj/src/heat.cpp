#include "spg/heat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spg {

double scaled_bessel_i0(double z) {
    if (z < 0.0) fail_validation("scaled_bessel_i0 needs z >= 0");
    if (z < 30.0) {
        // e^{-z} sum_k (z/2)^{2k} / (k!)^2, summed until terms vanish
        double term = 1.0, sum = 1.0;
        const double q = 0.25 * z * z;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return std::exp(-z) * sum;
    }
    // asymptotic series I_0(z) ~ e^z/sqrt(2 pi z) * sum_k a_k({1/(8z)}^k),
    // a_k = prod_{j<k} (2j+1)^2 / (k! )... use the standard coefficients
    const double inv8z = 1.0 / (8.0 * z);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        const double num = (2.0 * k - 1.0) * (2.0 * k - 1.0);
        term *= num * inv8z / k;
        sum += term;
        if (std::abs(term) < 1e-17 * sum) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

double heat_diag_reference(int dimension, double t) {
    if (t < 0.0) fail_validation("heat_diag_reference needs t >= 0");
    return std::pow(scaled_bessel_i0(2.0 * t), dimension);
}

HeatKernel1D::HeatKernel1D(int radius) : radius_(radius), m_(2 * radius - 1) {
    if (radius < 1) fail_validation("HeatKernel1D needs radius >= 1");
    eigenvalue_.resize(m_);
    center_amp_.resize(m_);
    mode_sum_.resize(m_);
    const double denom = m_ + 1;
    for (int k = 1; k <= m_; ++k) {
        eigenvalue_[k - 1] = 2.0 - 2.0 * std::cos(k * std::numbers::pi / denom);
        // interior coordinate x in [-(R-1), R-1] maps to j = x + R in [1, m]
        center_amp_[k - 1] = std::sqrt(2.0 / denom) * std::sin(k * radius_ * std::numbers::pi / denom);
        double s = 0.0;
        for (int j = 1; j <= m_; ++j) s += std::sin(k * j * std::numbers::pi / denom);
        mode_sum_[k - 1] = std::sqrt(2.0 / denom) * s;
    }
}

double HeatKernel1D::diag0(double t) const {
    double s = 0.0;
    for (int k = 0; k < m_; ++k) s += std::exp(-eigenvalue_[k] * t) * center_amp_[k] * center_amp_[k];
    return s;
}

double HeatKernel1D::value(double t, int x) const {
    if (std::abs(x) > radius_ - 1) fail_validation("HeatKernel1D::value: site outside the interior");
    const double denom = m_ + 1;
    double s = 0.0;
    for (int k = 1; k <= m_; ++k) {
        double amp = std::sqrt(2.0 / denom) * std::sin(k * (x + radius_) * std::numbers::pi / denom);
        s += std::exp(-eigenvalue_[k - 1] * t) * center_amp_[k - 1] * amp;
    }
    return s;
}

double HeatKernel1D::boundary_mass(double t) const {
    double remaining = 0.0;
    for (int k = 0; k < m_; ++k)
        remaining += std::exp(-eigenvalue_[k] * t) * center_amp_[k] * mode_sum_[k];
    return std::clamp(1.0 - remaining, 0.0, 1.0);
}

HeatDiagResult heat_diag(const LatticeSpec& spec, double t, double validity_tol) {
    if (t < 0.0) fail_validation("heat_diag needs t >= 0");
    if (spec.mode == BoundaryMode::DirichletBoxPlusOrigin)
        fail_validation("heat_diag: origin-clamped lattices have zero diagonal at the origin");
    HeatKernel1D k1(spec.radius);
    HeatDiagResult r;
    double p1 = k1.diag0(t);
    r.value = std::pow(p1, spec.dimension);
    const double kept = 1.0 - k1.boundary_mass(t);
    r.boundary_mass = 1.0 - std::pow(kept, spec.dimension);
    r.valid = r.boundary_mass < validity_tol;
    return r;
}

double estimate_dimension(const LatticeSpec& spec, std::span<const double> t_grid,
                          double validity_tol) {
    if (t_grid.size() < 4) fail_validation("estimate_dimension needs at least 4 grid points");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) fail_validation("estimate_dimension needs an increasing grid");

    HeatKernel1D k1(spec.radius);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(t_grid.size());
    for (double t : t_grid) {
        if (!(t > 0.0)) fail_validation("estimate_dimension needs t > 0");
        double p1 = k1.diag0(t);
        double bm = 1.0 - std::pow(1.0 - k1.boundary_mass(t), spec.dimension);
        if (bm >= validity_tol)
            fail_validation("estimate_dimension: t outside truncation-validity range (boundary mass " +
                            std::to_string(bm) + ")");
        double lx = std::log(t);
        double ly = spec.dimension * std::log(p1);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -2.0 * slope;
}

}  // namespace spg
