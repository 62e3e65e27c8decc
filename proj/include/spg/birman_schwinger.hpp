#pragma once

#include <Eigen/Dense>
#include <span>

#include "spg/green.hpp"
#include "spg/sparse_set.hpp"

namespace spg {

/// Finitely supported potential with effective weights w_n = V_n mu_n^2,
/// enumerated so the weights are nonincreasing (lexicographic tie-break).
struct SparsePotential {
    struct Entry {
        GridPoint site;
        double strength = 0.0;  // V_n
        double weight = 0.0;    // V_n mu_n^2
    };
    std::vector<Entry> entries;

    int size() const { return static_cast<int>(entries.size()); }
    Eigen::VectorXd weights() const;

    /// Largest deviation of consecutive weight ratios from 1; the sequence is
    /// treated as moderately varying when this stays below the caller's bar.
    double ratio_deviation() const;
    bool moderately_varying(double tol = 0.35) const { return ratio_deviation() <= tol; }

    static SparsePotential from_strengths(const GreenTable& table, std::span<const GridPoint> sites,
                                          std::span<const double> strengths);
    /// Choose V_n = p_n / mu_n^2 so that w_n = p_n.
    static SparsePotential for_target(const GreenTable& table, std::span<const GridPoint> sites,
                                      std::span<const double> targets);
};

/// Exact finite Birman-Schwinger matrix K_{mn} = sqrt(V_m V_n) h_{v_m}(v_n).
Eigen::MatrixXd bs_matrix(const GreenTable& table, const SparsePotential& pot);

/// Symmetric eigendecomposition, eigenvalues sorted descending and
/// residual-checked to 1e-10 * ||K||.
Eigen::VectorXd bs_spectrum(const Eigen::MatrixXd& k);

struct TwoSidedReport {
    bool ok = false;
    double lambda_min_m = 0.0;  // spectral bounds of the Gram matrix
    double lambda_max_m = 0.0;
    double max_rel_slack = 0.0;  // worst violation relative to the envelope
    int worst_index = -1;
};

/// lambda_min(M) w_n <= lambda_n(K) <= lambda_max(M) w_n for all n.
TwoSidedReport two_sided_check(const Eigen::VectorXd& lambda, const SparsePotential& pot,
                               const Eigen::MatrixXd& gram, double slack_tol = 1e-10);

/// max_n |lambda_n / w_n - 1| over the middle half of indices.
double asymptotic_ratio(const Eigen::VectorXd& lambda, const SparsePotential& pot);

/// Inertia of a symmetric banded matrix by LDL^T pivot signs, no pivoting.
/// Storage: lower band, column-major, band[(b+1)*j + (i-j)]; destroyed.
struct BandInertia {
    int negative = 0;
    int near_zero = 0;
    double min_abs_pivot = 0.0;
};
BandInertia band_ldlt_inertia(int n, int bandwidth, std::vector<double>& band, double zero_tol);

/// Number of negative eigenvalues of -Delta - alpha V on the interior of the
/// box, via banded LDL^T in lexicographic order. Near-zero pivots raise the
/// threshold error instead of being counted silently.
int count_negative(const Lattice& lat, std::span<const std::pair<GridPoint, double>> potential,
                   double alpha, double zero_tol = 1e-10);

struct CountReport {
    double alpha = 0.0;
    int n_minus = 0;
    int n_bs = 0;
    bool agree = false;
    std::string warning;
};

struct PrincipleOptions {
    /// Origin-clamped comparison: N_minus on the unclamped box may exceed the
    /// clamped Birman-Schwinger count by at most one.
    bool clamped_comparison = false;
    double threshold_rel_tol = 1e-8;
    double zero_tol = 1e-10;
};

/// Birman-Schwinger principle at one coupling: N_-(-Delta - alpha V) on the
/// counting lattice against #{ lambda_n(K) > 1/alpha }. alpha values within
/// threshold_rel_tol of a 1/lambda_n are rejected with the threshold error.
CountReport bs_principle_check(const Lattice& count_lattice, const Eigen::VectorXd& bs_lambda,
                               const SparsePotential& pot, double alpha,
                               const PrincipleOptions& opts = {});

/// Nudge sweep values away from the thresholds 1/lambda_n, preserving order.
std::vector<double> non_threshold_alphas(const Eigen::VectorXd& bs_lambda, double lo, double hi,
                                         int count, double rel_gap = 1e-6);

struct WeylRow {
    double alpha = 0.0;
    int count = 0;
    double ratio = 0.0;  // count / alpha^{d/2}
};

/// Qualitative Weyl-order demo on a d = 3 box: counts over an alpha sweep,
/// reported against alpha^{3/2}.
std::vector<WeylRow> weyl_demo(const Lattice& lat,
                               std::span<const std::pair<GridPoint, double>> potential,
                               std::span<const double> alphas, double zero_tol = 1e-10);

// --- export ---
void write_spectrum_csv(const Eigen::VectorXd& lambda, const SparsePotential& pot,
                        std::ostream& os);
void write_count_reports_csv(std::span<const CountReport> reports, std::ostream& os);

}  // namespace spg
