#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>

#include "spg/graph.hpp"

namespace spg {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Tensor-product panel quadrature on (-pi,pi)^2, folded to [0,pi]^2, with
/// dyadic refinement toward theta = 0 and oscillation-resolving subdivision.
/// Refinement doubles until two successive levels agree to `target`.
struct QuadratureScheme {
    int gauss_order = 12;   // nodes per panel (only 12 is wired in)
    int base_refine = 1;    // subpanel multiplier at the first attempt
    int max_refine = 8;     // refinement cap
    int dyadic_levels = 30;
    double target = 1e-10;  // absolute self-agreement target
};

/// A(x) = (2 pi)^{-2} Int (1 - cos(x.theta)) / Z(theta) dtheta over (-pi,pi)^2
/// with Z(theta) = 1 - (cos theta_1 + cos theta_2)/2. Nonnegative, A(0) = 0,
/// A(1,0) = 1, A(1,1) = 4/pi; grows like (2/pi) log|x|.
double fundamental_z2(const GridPoint& x, const QuadratureScheme& q = {});

/// (2 log|x| + log 8 + 2*gamma) / pi; error O(|x|^-2). Rejects x = 0.
double fundamental_z2_asymptotic(const GridPoint& x);

/// Cached A(x) evaluator: quadrature inside `exact_radius`, asymptotic form
/// beyond it. Octant symmetry is used for the cache key. Thread-safe.
class Z2Kernel {
public:
    explicit Z2Kernel(QuadratureScheme q = {}, double exact_radius = 300.0);
    double value(std::int64_t x1, std::int64_t x2) const;
    double value(const GridPoint& p) const { return value(p.x, p.y); }
    double exact_radius() const { return exact_radius_; }
    const QuadratureScheme& scheme() const { return scheme_; }

private:
    QuadratureScheme scheme_;
    double exact_radius_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<GridPoint, double, GridPointHash> cache_;
};

/// Green-function table: capacities mu_x^2 = h_x(x) and values h_x(y) for one
/// fixed graph, either by truncated solve or by the explicit Z^2 formula.
/// Tables are immutable views with internal caches; reads are thread-safe.
class GreenTable {
public:
    virtual ~GreenTable() = default;

    virtual double capacity(const GridPoint& x) const = 0;
    virtual double green(const GridPoint& x, const GridPoint& y) const = 0;
    virtual double mildness(const GridPoint& x) const = 0;
    virtual std::string method() const = 0;  // "solve" or "quadrature+formula"
    virtual double c_norm() const { return 1.0; }
    virtual std::optional<int> box_radius() const { return std::nullopt; }
    virtual std::optional<double> capacity_upper_bound() const { return std::nullopt; }
    virtual int dimension() const = 0;

    /// (h~_x, h~_y) = h_x(y) / (mu_x mu_y); equals 1 on the diagonal.
    double normalized_inner(const GridPoint& x, const GridPoint& y) const;
};

/// Dirichlet-at-origin Green function on all of Z^2 via the three-term
/// formula h_x(y) = (A(x) + A(y) - A(x-y)) / c_norm. The normalization is
/// fixed once by the reproducing-identity calibration; see calibrate_c_norm.
class Z2DirichletGreen final : public GreenTable {
public:
    explicit Z2DirichletGreen(double c_norm = 4.0, QuadratureScheme q = {},
                              double exact_radius = 300.0);

    double capacity(const GridPoint& x) const override;
    double green(const GridPoint& x, const GridPoint& y) const override;
    double mildness(const GridPoint&) const override { return 4.0; }
    std::string method() const override { return "quadrature+formula"; }
    double c_norm() const override { return c_norm_; }
    int dimension() const override { return 2; }
    const Z2Kernel& kernel() const { return kernel_; }

private:
    double c_norm_;
    Z2Kernel kernel_;
};

/// Recover the constant between the lattice potential kernel and the
/// Dirichlet Green function by enforcing (f, h_x) = f(x) against random
/// finitely supported f. Returns the least-squares constant (expected 4).
double calibrate_c_norm(const Z2Kernel& kernel, int samples = 32, std::uint64_t seed = 1);

/// Interior linear solver for -Delta h = rhs with Dirichlet constraints.
/// Direct factorization at small sizes, preconditioned CG with iterative
/// refinement at large ones; solutions are residual-checked to 1e-10.
class InteriorSolver {
public:
    explicit InteriorSolver(const WeightedGraph& g);
    ~InteriorSolver();
    InteriorSolver(InteriorSolver&&) noexcept;

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::VectorXd solve_delta(int interior_index) const;
    const Eigen::SparseMatrix<double>& matrix() const;
    int size() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot Green column -Delta h = delta_x on the interior of g.
/// Fails on graphs without Dirichlet vertices (singular system).
Eigen::VectorXd green_solve(const WeightedGraph& g, VertexId x);

/// Solve-path Green table on a lattice box. Unit-uniform Dirichlet boxes use
/// the exact separable eigenexpansion (no linear solves); clamped or general
/// boxes go through InteriorSolver. Columns are cached by site.
class BoxGreenTable final : public GreenTable {
public:
    explicit BoxGreenTable(const Lattice& lat);
    ~BoxGreenTable();

    double capacity(const GridPoint& x) const override;
    double green(const GridPoint& x, const GridPoint& y) const override;
    double mildness(const GridPoint& x) const override;
    std::string method() const override { return "solve"; }
    std::optional<int> box_radius() const override { return lat_->spec().radius; }
    std::optional<double> capacity_upper_bound() const override;
    int dimension() const override { return lat_->spec().dimension; }

    const Lattice& lattice() const { return *lat_; }
    /// Full interior-indexed column h_x; residual-checked.
    const Eigen::VectorXd& column(const GridPoint& x) const;

private:
    struct Impl;
    const Lattice* lat_;
    std::unique_ptr<Impl> impl_;
};

/// Free-lattice diagonal Green value on Z^3 (Watson's integral over 6).
inline constexpr double kZ3FreeCapacity = 0.25273100985866;

/// Richardson extrapolation of the boxed capacity in 1/R over radii.
double capacity_extrapolated(const LatticeSpec& base, const GridPoint& x,
                             std::span<const int> radii);

// --- export ---
void export_green_csv(const GreenTable& table,
                      std::span<const std::pair<GridPoint, GridPoint>> pairs, std::ostream& os);
std::string green_metadata_json(const GreenTable& table);

}  // namespace spg
