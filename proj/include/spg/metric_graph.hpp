#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>

#include "spg/green.hpp"

namespace spg {

/// Metric graph over a boxed lattice skeleton: every combinatorial edge e
/// carries a length l_e > 0 and the reduction weight g_e = 1/l_e.
class MetricGraph {
public:
    MetricGraph(const LatticeSpec& spec, std::vector<double> lengths, double max_length = 100.0);
    MetricGraph(const LatticeSpec& spec, double uniform_length, double max_length = 100.0);

    const Lattice& base() const { return base_; }
    const std::vector<double>& lengths() const { return lengths_; }
    double length(int edge_id) const { return lengths_[static_cast<std::size_t>(edge_id)]; }
    double min_incident_length(VertexId v) const;

    /// Combinatorial reduction with weights 1/l_e. The lattice form requires
    /// uniform lengths (it feeds the separable box machinery downstream); the
    /// plain weighted graph works for any length assignment.
    Lattice to_combinatorial() const;
    WeightedGraph to_weighted_graph() const;

private:
    Lattice base_;
    std::vector<double> lengths_;
    bool uniform_;
};

/// Piecewise-constant sparse potential of Eq-style vertex plateaus: height
/// mass / (eps * deg v) on the eps-initial segment of every edge incident to
/// a support vertex.
struct MetricPotential {
    struct Site {
        GridPoint vertex;
        double mass = 0.0;  // integral contributed by this vertex
        double eps = 0.0;   // plateau length along each incident edge
    };
    std::vector<Site> sites;

    double total_mass() const;
    double min_eps() const;
};

MetricPotential build_metric_potential(const MetricGraph& gamma, std::span<const GridPoint> sites,
                                       std::span<const double> masses,
                                       std::span<const double> eps);

/// Uniform per-edge P1 discretization of the metric graph with Kirchhoff
/// coupling through shared vertex unknowns; Dirichlet vertices are dropped.
class DiscretizedGraph {
public:
    struct EdgeGrid {
        int edge_id = 0;
        VertexId u = 0, v = 0;
        double length = 0.0;
        int cells = 0;
        int first_node = -1;  // first interior node unknown, -1 when cells == 1
    };

    DiscretizedGraph(const MetricGraph& gamma, double h_target);

    const MetricGraph& metric() const { return *gamma_; }
    int unknown_count() const { return n_; }
    double h_target() const { return h_target_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
    std::span<const EdgeGrid> edge_grids() const { return grids_; }
    int vertex_unknown(VertexId v) const { return vertex_unknown_[static_cast<std::size_t>(v)]; }

    /// Edgewise-linear interpolant of the vertex values of phi.
    Eigen::VectorXd linear_interpolant(const Eigen::VectorXd& phi) const;

private:
    const MetricGraph* gamma_;
    double h_target_;
    int n_ = 0;
    std::vector<int> vertex_unknown_;
    std::vector<EdgeGrid> grids_;
    Eigen::SparseMatrix<double> stiffness_;
};

/// Orthogonal splitting phi = phi_pl + phi_D: the edgewise-linear part and the
/// vertex-vanishing remainder; a[phi_pl, phi_D] = 0 up to roundoff.
std::pair<Eigen::VectorXd, Eigen::VectorXd> pl_decompose(const DiscretizedGraph& d,
                                                         const Eigen::VectorXd& phi);

/// Weighted mass matrix int V phi psi with exact per-cell integration of the
/// piecewise-constant potential (plateau breakpoints need not align with the
/// grid).
Eigen::SparseMatrix<double> potential_mass_matrix(const DiscretizedGraph& d,
                                                  const MetricPotential& pot);

/// Top eigenvalues of the pencil int V |phi|^2 = lambda int |phi'|^2 on the
/// discretized graph, descending. The grid must resolve every plateau by at
/// least eight cells.
Eigen::VectorXd metric_bs_spectrum(const DiscretizedGraph& d, const MetricPotential& pot,
                                   int n_eig);

/// eps -> 0 reference: eigenvalues of the combinatorial Birman-Schwinger
/// matrix with strengths = masses on the weighted reduction.
Eigen::VectorXd point_mass_reference(const MetricGraph& gamma, std::span<const GridPoint> sites,
                                     std::span<const double> masses);

/// Monotone step potential on a single Dirichlet edge (0, length):
/// value[i] on [breaks[i], breaks[i+1]) with breaks[0] = 0, breaks.back() = length.
struct StepPotential {
    double length = 1.0;
    std::vector<double> breaks;  // size = values.size() + 1
    std::vector<double> values;  // nonnegative

    bool monotone() const;
    double integral_sqrt() const;  // int sqrt(V)
    double value_at(double y) const;
};

struct CalogeroResult {
    int count = 0;      // n(lambda, B_{V,e}) from the dense pencil eigensolve
    double bound = 0.0;  // (2/pi) lambda^{-1/2} int sqrt(V)
};

/// Eigenvalue count of the single-edge pencil against the Calogero envelope.
CalogeroResult calogero_count(const StepPotential& v, double lambda, double h_target = 0.0);

}  // namespace spg
