#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "spg/green.hpp"

namespace spg {

/// Symmetric positive pair schedule eps_{mn} = beta 2^{-(m+n)/2} (1-based)
/// with beta fixed so that sum_{m != n <= size} eps^2 = cap / 4.
struct EpsilonBudget {
    int size = 0;
    double cap = 1.0;
    double beta = 0.0;

    double epsilon(int m, int n) const;  // 1-based, m != n
    double square_sum() const;           // == cap / 4 by construction
};

EpsilonBudget default_budget(int n, double cap);

/// Near-orthogonal family of normalized Green functions with its certificate.
struct SparseSet {
    std::vector<GridPoint> vertices;
    Eigen::VectorXd capacities;  // mu_n^2
    Eigen::MatrixXd gram;        // M_{mn} = h_{v_m}(v_n) / (mu_m mu_n)
    double hs_deviation = 0.0;   // ||M - I||_HS
    double mildness_bound = 0.0;
    EpsilonBudget budget;
    int requested = 0;
    std::optional<int> box_radius;
    std::string method;

    int size() const { return static_cast<int>(vertices.size()); }
    std::string to_json() const;
    static SparseSet from_json(const std::string& text);
};

/// Ordered candidate supply for the greedy construction. begin_target is
/// called once per new index with the constraints the candidate must meet;
/// next() then yields vertices until the stream gives up.
class CandidateStream {
public:
    struct Query {
        std::span<const GridPoint> accepted;
        std::span<const double> capacities;  // mu_k^2
        std::span<const double> epsilons;    // eps_{k,n} for k = 1..n-1
    };
    virtual ~CandidateStream() = default;
    virtual void begin_target(const Query& q) = 0;
    virtual std::optional<GridPoint> next() = 0;
};

/// Interior box vertices ordered by increasing Euclidean radius with
/// lexicographic tie-break, filtered to mildness <= bound.
class BoxCandidateStream final : public CandidateStream {
public:
    BoxCandidateStream(const Lattice& lat, double mildness_bound);
    void begin_target(const Query& q) override;
    std::optional<GridPoint> next() override;

private:
    const Lattice* lat_;
    std::vector<VertexId> order_;
    std::size_t cursor_ = 0;
};

/// Z^2 \ {0} along an outward spiral of shells. Before exact checks begin,
/// the scan radius jumps to where the slow-log decay of the normalized inner
/// products predicts the current epsilon targets become reachable.
class Z2SpiralStream final : public CandidateStream {
public:
    explicit Z2SpiralStream(double radius_cap = 1e15, long candidate_cap = 1'000'000);
    void begin_target(const Query& q) override;
    std::optional<GridPoint> next() override;

    /// Radius at which the predicted inner product against a site of capacity
    /// mu2 falls below eps.
    static double predicted_radius(double mu2, double eps);

private:
    double radius_cap_;
    long candidate_cap_;
    double radius_ = 1.0;
    long emitted_ = 0;
    int shell_pos_ = 0;
    bool fresh_ = true;
    std::vector<GridPoint> shell_;
    void fill_shell();
};

struct BuildOptions {
    double mildness_bound = 0.0;          // 0: use max mildness over candidates seen
    long max_candidates_per_target = 1'000'000;
};

/// Thrown when the stream cannot supply an admissible vertex; carries the
/// partially built set (its certificate still holds for the accepted prefix).
class SparseBuildError : public Error {
public:
    SparseBuildError(const std::string& msg, SparseSet partial, int reached)
        : Error(ErrorKind::Numerical, msg), partial_(std::move(partial)), reached_(reached) {}
    const SparseSet& partial() const { return partial_; }
    int index_reached() const { return reached_; }

private:
    SparseSet partial_;
    int reached_;
};

/// Greedy construction: v_n is the first candidate with
/// |(h~_{v_k}, h~_{v_n})| < eps_{kn} for all k < n.
SparseSet build_sparse_set(const GreenTable& table, const EpsilonBudget& budget, int n,
                           CandidateStream& candidates, const BuildOptions& opts = {});

Eigen::MatrixXd gram_matrix(const GreenTable& table, std::span<const GridPoint> vertices);

/// Frobenius norm of M - I.
double hs_deviation(const Eigen::MatrixXd& m);

}  // namespace spg
