#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "spg/types.hpp"

namespace spg {

using VertexId = std::int32_t;

struct WeightedEdge {
    VertexId u = 0;
    VertexId v = 0;
    double weight = 1.0;
};

/// Weighted combinatorial graph with an optional Dirichlet vertex set.
/// Immutable after construction; all queries are safe to share across threads.
///
/// Construction validates the standing assumptions: connected, no loops or
/// multiple edges, strictly positive weights, and no interior vertex of
/// degree one (Dirichlet vertices may have degree one).
class WeightedGraph {
public:
    WeightedGraph(VertexId vertex_count, std::vector<WeightedEdge> edges,
                  std::vector<VertexId> dirichlet = {});

    VertexId vertex_count() const { return n_; }
    const std::vector<WeightedEdge>& edges() const { return edges_; }
    const std::vector<VertexId>& dirichlet() const { return dirichlet_; }
    bool is_dirichlet(VertexId v) const { return dirichlet_mask_[static_cast<std::size_t>(v)] != 0; }

    std::span<const std::pair<VertexId, double>> neighbors(VertexId v) const {
        return {adj_.data() + adj_offset_[static_cast<std::size_t>(v)],
                adj_.data() + adj_offset_[static_cast<std::size_t>(v) + 1]};
    }
    int degree(VertexId v) const {
        return static_cast<int>(adj_offset_[static_cast<std::size_t>(v) + 1] -
                                adj_offset_[static_cast<std::size_t>(v)]);
    }

    /// Sum of incident edge weights; a vertex is R-mild iff this is <= R.
    double mildness(VertexId v) const;

    int interior_count() const { return interior_count_; }
    /// Position of v among non-Dirichlet vertices in id order, -1 if Dirichlet.
    int interior_index(VertexId v) const { return interior_index_[static_cast<std::size_t>(v)]; }
    VertexId interior_vertex(int idx) const { return interior_vertices_[static_cast<std::size_t>(idx)]; }

private:
    VertexId n_;
    std::vector<WeightedEdge> edges_;
    std::vector<std::size_t> adj_offset_;
    std::vector<std::pair<VertexId, double>> adj_;
    std::vector<VertexId> dirichlet_;
    std::vector<std::uint8_t> dirichlet_mask_;
    std::vector<int> interior_index_;
    std::vector<VertexId> interior_vertices_;
    int interior_count_ = 0;
};

/// Sparse real-valued vertex function, entries sorted by vertex id.
/// Entries on Dirichlet vertices are rejected by set().
struct VertexFunction {
    std::vector<std::pair<VertexId, double>> entries;

    double operator()(VertexId v) const;
    bool has(VertexId v) const;
    void set(VertexId v, double value);
    bool empty() const { return entries.empty(); }
};

/// Quadratic form a[f] = sum_e g_e |f(u) - f(v)|^2.
double energy(const WeightedGraph& g, const VertexFunction& f);

/// Bilinear pairing a[f, h] where h is given by an arbitrary evaluation
/// callback (finite because f has finite support).
template <class H>
double energy_pairing(const WeightedGraph& g, const VertexFunction& f, H&& h);

/// (Delta f)(v) = sum_{w ~ v} f(w) g_{vw} - f(v) sum g_{vw}, clamped to zero on
/// the Dirichlet set. Result is supported on supp(f) and its neighbors.
VertexFunction laplacian_apply(const WeightedGraph& g, const VertexFunction& f);

enum class BoundaryMode {
    DirichletBox,            // clamp the outer box boundary
    DirichletBoxPlusOrigin,  // additionally clamp the origin
};

struct LatticeSpec {
    int dimension = 2;  // 2 or 3
    int radius = 2;     // box [-R, R]^d
    BoundaryMode mode = BoundaryMode::DirichletBox;
};

/// Truncated lattice Z^d on the box [-R, R]^d with lexicographic vertex ids
/// (slowest coordinate first), unit edge weights by default.
class Lattice {
public:
    explicit Lattice(const LatticeSpec& spec, double edge_weight = 1.0);

    const LatticeSpec& spec() const { return spec_; }
    const WeightedGraph& graph() const { return graph_; }
    double edge_weight() const { return edge_weight_; }
    int side() const { return 2 * spec_.radius + 1; }

    bool contains(const GridPoint& p) const;
    VertexId id(const GridPoint& p) const;
    GridPoint point(VertexId v) const;
    bool is_interior(const GridPoint& p) const;  // inside the box and not Dirichlet

private:
    LatticeSpec spec_;
    double edge_weight_;
    WeightedGraph graph_;
};

Lattice build_lattice(const LatticeSpec& spec);

/// Hardy-quotient diagnostic on the origin-clamped square lattice:
/// [sum_{x != 0} |f(x)|^2 |x|^{-2} (log|x| + 2)^{-2}] / a[f].
/// The sharp constant is unknown; callers compare empirical values only.
double hardy_ratio(const Lattice& lat, const VertexFunction& f);

/// Sobolev-quotient diagnostic ||f||_{ l^p }^2 / a[f] with p = D/(D-2), D > 2.
double sobolev_ratio(const WeightedGraph& g, const VertexFunction& f, double global_dimension);

// --- serialization ---
std::string lattice_spec_to_json(const LatticeSpec& spec);
LatticeSpec lattice_spec_from_json(const std::string& text);
std::string graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const std::string& text);
void write_vertex_function_csv(const Lattice& lat, const VertexFunction& f, std::ostream& os);

template <class H>
double energy_pairing(const WeightedGraph& g, const VertexFunction& f, H&& h) {
    // Only edges incident to supp(f) contribute.
    double acc = 0.0;
    for (const auto& [v, fv] : f.entries) {
        for (const auto& [w, weight] : g.neighbors(v)) {
            // Count edges with both ends in the support once.
            if (w < v && f.has(w)) continue;
            acc += weight * (fv - f(w)) * (h(v) - h(w));
        }
    }
    return acc;
}

}  // namespace spg
