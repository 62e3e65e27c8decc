#include "spg/metric_graph.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "spg/birman_schwinger.hpp"

namespace spg {

namespace {

std::vector<double> uniform_lengths(const LatticeSpec& spec, double l) {
    Lattice probe(spec);
    return std::vector<double>(probe.graph().edges().size(), l);
}

}  // namespace

MetricGraph::MetricGraph(const LatticeSpec& spec, std::vector<double> lengths, double max_length)
    : base_(spec), lengths_(std::move(lengths)) {
    if (lengths_.size() != base_.graph().edges().size())
        fail_validation("metric graph: one length per edge required");
    uniform_ = true;
    for (double l : lengths_) {
        if (!(l > 0.0)) fail_validation("edge lengths must be positive");
        if (l > max_length) fail_validation("edge lengths must stay below the bound");
        if (l != lengths_.front()) uniform_ = false;
    }
}

MetricGraph::MetricGraph(const LatticeSpec& spec, double uniform_length, double max_length)
    : MetricGraph(spec, uniform_lengths(spec, uniform_length), max_length) {}

double MetricGraph::min_incident_length(VertexId v) const {
    double best = std::numeric_limits<double>::infinity();
    const auto& edges = base_.graph().edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges[i].u == v || edges[i].v == v) best = std::min(best, lengths_[i]);
    return best;
}

Lattice MetricGraph::to_combinatorial() const {
    if (!uniform_)
        fail_validation("combinatorial lattice reduction requires uniform edge lengths");
    return Lattice(base_.spec(), 1.0 / lengths_.front());
}

WeightedGraph MetricGraph::to_weighted_graph() const {
    std::vector<WeightedEdge> edges = base_.graph().edges();
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i].weight = 1.0 / lengths_[i];
    return WeightedGraph(base_.graph().vertex_count(), std::move(edges),
                         base_.graph().dirichlet());
}

double MetricPotential::total_mass() const {
    double s = 0.0;
    for (const auto& site : sites) s += site.mass;
    return s;
}

double MetricPotential::min_eps() const {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& site : sites) s = std::min(s, site.eps);
    return s;
}

MetricPotential build_metric_potential(const MetricGraph& gamma, std::span<const GridPoint> sites,
                                       std::span<const double> masses,
                                       std::span<const double> eps) {
    if (sites.size() != masses.size() || sites.size() != eps.size())
        fail_validation("metric potential: sites/masses/eps length mismatch");
    const auto& lat = gamma.base();
    const auto& g = lat.graph();
    MetricPotential pot;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (!lat.is_interior(sites[i]))
            fail_validation("support vertex must be interior: " + to_string(sites[i]));
        if (!(masses[i] > 0.0)) fail_validation("masses must be positive");
        if (!(eps[i] > 0.0) || eps[i] >= gamma.min_incident_length(lat.id(sites[i])))
            fail_validation("eps must lie in (0, min incident length) at " + to_string(sites[i]));
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            if (sites[i] == sites[j]) fail_validation("duplicate support vertex");
            const VertexId a = lat.id(sites[i]), b = lat.id(sites[j]);
            for (const auto& [nb, w] : g.neighbors(a)) {
                (void)w;
                if (nb == b)
                    fail_validation("support vertices must not be neighbors: " +
                                    to_string(sites[i]) + ", " + to_string(sites[j]));
            }
        }
        pot.sites.push_back({sites[i], masses[i], eps[i]});
    }
    return pot;
}

// ---------------------------------------------------------------------------
// discretization

DiscretizedGraph::DiscretizedGraph(const MetricGraph& gamma, double h_target)
    : gamma_(&gamma), h_target_(h_target) {
    if (!(h_target > 0.0)) fail_validation("discretize needs h_target > 0");
    const auto& lat = gamma.base();
    const auto& g = lat.graph();

    vertex_unknown_.assign(static_cast<std::size_t>(g.vertex_count()), -1);
    n_ = 0;
    for (VertexId v = 0; v < g.vertex_count(); ++v)
        if (!g.is_dirichlet(v)) vertex_unknown_[static_cast<std::size_t>(v)] = n_++;

    const auto& edges = g.edges();
    grids_.reserve(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        EdgeGrid grid;
        grid.edge_id = static_cast<int>(e);
        grid.u = edges[e].u;
        grid.v = edges[e].v;
        grid.length = gamma.length(static_cast<int>(e));
        grid.cells = std::max(1, static_cast<int>(std::ceil(grid.length / h_target)));
        grid.first_node = grid.cells > 1 ? n_ : -1;
        n_ += grid.cells - 1;
        grids_.push_back(grid);
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_) * 4);
    auto add = [&](int a, int b, double val) {
        if (a < 0 || b < 0) return;
        trip.emplace_back(a, b, val);
    };
    for (const auto& grid : grids_) {
        const double h = grid.length / grid.cells;
        const double k = 1.0 / h;
        auto node = [&](int i) {  // chain index 0..cells
            if (i == 0) return vertex_unknown_[static_cast<std::size_t>(grid.u)];
            if (i == grid.cells) return vertex_unknown_[static_cast<std::size_t>(grid.v)];
            return grid.first_node + i - 1;
        };
        for (int c = 0; c < grid.cells; ++c) {
            const int a = node(c), b = node(c + 1);
            add(a, a, k);
            add(b, b, k);
            add(a, b, -k);
            add(b, a, -k);
        }
    }
    stiffness_.resize(n_, n_);
    stiffness_.setFromTriplets(trip.begin(), trip.end());
    stiffness_.makeCompressed();
}

Eigen::VectorXd DiscretizedGraph::linear_interpolant(const Eigen::VectorXd& phi) const {
    if (phi.size() != n_) fail_validation("field size mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (int u : vertex_unknown_)
        if (u >= 0) out[u] = phi[u];
    for (const auto& grid : grids_) {
        const int iu = vertex_unknown_[static_cast<std::size_t>(grid.u)];
        const int iv = vertex_unknown_[static_cast<std::size_t>(grid.v)];
        const double fu = iu >= 0 ? phi[iu] : 0.0;
        const double fv = iv >= 0 ? phi[iv] : 0.0;
        for (int i = 1; i < grid.cells; ++i)
            out[grid.first_node + i - 1] = fu + (fv - fu) * (static_cast<double>(i) / grid.cells);
    }
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> pl_decompose(const DiscretizedGraph& d,
                                                         const Eigen::VectorXd& phi) {
    Eigen::VectorXd pl = d.linear_interpolant(phi);
    return {pl, phi - pl};
}

// ---------------------------------------------------------------------------
// weighted mass

namespace {

struct ConstPiece {
    double lo, hi, value;
};

/// Accumulate int_{cell} V N_i N_j dy for the P1 basis on cell [a, a+h].
void add_cell_mass(double a, double h, int ia, int ib, std::span<const ConstPiece> pieces,
                   std::vector<Eigen::Triplet<double>>& trip) {
    const double b = a + h;
    for (const auto& piece : pieces) {
        const double c0 = std::max(a, piece.lo), c1 = std::min(b, piece.hi);
        if (!(c1 > c0) || piece.value == 0.0) continue;
        const double q = piece.value;
        const double maa = q * (std::pow(b - c0, 3) - std::pow(b - c1, 3)) / (3.0 * h * h);
        const double mbb = q * (std::pow(c1 - a, 3) - std::pow(c0 - a, 3)) / (3.0 * h * h);
        auto cross_anti = [&](double y) {
            const double t = y - a;
            return h * t * t / 2.0 - t * t * t / 3.0;
        };
        const double mab = q * (cross_anti(c1) - cross_anti(c0)) / (h * h);
        if (ia >= 0) trip.emplace_back(ia, ia, maa);
        if (ib >= 0) trip.emplace_back(ib, ib, mbb);
        if (ia >= 0 && ib >= 0) {
            trip.emplace_back(ia, ib, mab);
            trip.emplace_back(ib, ia, mab);
        }
    }
}

}  // namespace

Eigen::SparseMatrix<double> potential_mass_matrix(const DiscretizedGraph& d,
                                                  const MetricPotential& pot) {
    const auto& gamma = d.metric();
    const auto& lat = gamma.base();
    const auto& g = lat.graph();
    std::unordered_map<VertexId, const MetricPotential::Site*> by_vertex;
    for (const auto& site : pot.sites) by_vertex[lat.id(site.vertex)] = &site;

    std::vector<Eigen::Triplet<double>> trip;
    for (const auto& grid : d.edge_grids()) {
        const auto iu = by_vertex.find(grid.u);
        const auto iv = by_vertex.find(grid.v);
        if (iu == by_vertex.end() && iv == by_vertex.end()) continue;
        std::vector<ConstPiece> pieces;
        if (iu != by_vertex.end()) {
            const auto* s = iu->second;
            pieces.push_back({0.0, s->eps, s->mass / (s->eps * g.degree(grid.u))});
        }
        if (iv != by_vertex.end()) {
            const auto* s = iv->second;
            pieces.push_back({grid.length - s->eps, grid.length,
                              s->mass / (s->eps * g.degree(grid.v))});
        }
        const double h = grid.length / grid.cells;
        auto node = [&](int i) {
            if (i == 0) return d.vertex_unknown(grid.u);
            if (i == grid.cells) return d.vertex_unknown(grid.v);
            return grid.first_node + i - 1;
        };
        for (int c = 0; c < grid.cells; ++c)
            add_cell_mass(c * h, h, node(c), node(c + 1), pieces, trip);
    }
    Eigen::SparseMatrix<double> w(d.unknown_count(), d.unknown_count());
    w.setFromTriplets(trip.begin(), trip.end());
    w.makeCompressed();
    return w;
}

Eigen::VectorXd metric_bs_spectrum(const DiscretizedGraph& d, const MetricPotential& pot,
                                   int n_eig) {
    if (n_eig < 0) fail_validation("n_eig must be nonnegative");
    // resolution rule: plateaus resolved by at least 8 cells
    for (const auto& grid : d.edge_grids()) {
        const double h = grid.length / grid.cells;
        for (const auto& site : pot.sites) {
            const VertexId sv = d.metric().base().id(site.vertex);
            if (grid.u == sv || grid.v == sv) {
                if (h > site.eps / 8.0 * (1.0 + 1e-12))
                    fail_validation("grid step must resolve the plateau: h <= eps/8 required");
            }
        }
    }

    Eigen::SparseMatrix<double> w = potential_mass_matrix(d, pot);

    std::vector<int> support;
    for (int k = 0; k < w.outerSize(); ++k)
        if (w.outerIndexPtr()[k + 1] > w.outerIndexPtr()[k]) support.push_back(k);
    const int r0 = static_cast<int>(support.size());
    if (r0 == 0) return Eigen::VectorXd();

    Eigen::MatrixXd wii(r0, r0);
    wii.setZero();
    std::unordered_map<int, int> pos;
    for (int i = 0; i < r0; ++i) pos[support[static_cast<std::size_t>(i)]] = i;
    for (int k = 0; k < w.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(w, k); it; ++it)
            wii(pos.at(static_cast<int>(it.row())), pos.at(k)) = it.value();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wii);
    if (es.info() != Eigen::Success) fail_numerical("support-block eigendecomposition failed");
    const double cutoff = 1e-14 * std::max(1.0, es.eigenvalues().maxCoeff());
    std::vector<int> keep;
    for (int i = 0; i < r0; ++i)
        if (es.eigenvalues()[i] > cutoff) keep.push_back(i);
    const int r = static_cast<int>(keep.size());
    if (n_eig > r) fail_validation("n_eig exceeds the rank of the weighted form");

    // factor W = C C^T with C supported on I; the nonzero pencil spectrum of
    // (W, S) equals eig(C^T S^{-1} C)
    Eigen::MatrixXd cblock(r0, r);
    for (int j = 0; j < r; ++j) {
        const int col = keep[static_cast<std::size_t>(j)];
        cblock.col(j) = es.eigenvectors().col(col) * std::sqrt(es.eigenvalues()[col]);
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(d.stiffness());
    if (solver.info() != Eigen::Success) fail_numerical("stiffness factorization failed");

    Eigen::MatrixXd xcols(d.unknown_count(), r);
    for (int j = 0; j < r; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(d.unknown_count());
        for (int t = 0; t < r0; ++t) c[support[static_cast<std::size_t>(t)]] = cblock(t, j);
        xcols.col(j) = solver.solve(c);
    }
    Eigen::MatrixXd xsupp(r0, r);
    for (int t = 0; t < r0; ++t) xsupp.row(t) = xcols.row(support[static_cast<std::size_t>(t)]);
    Eigen::MatrixXd b = cblock.transpose() * xsupp;
    b = 0.5 * (b + b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(b);
    Eigen::VectorXd all = eb.eigenvalues().reverse();

    // residual check on the reported eigenpairs
    const int take = std::min(n_eig == 0 ? std::min(r, 8) : n_eig, r);
    for (int j = 0; j < take; ++j) {
        const int col = r - 1 - j;  // descending order
        Eigen::VectorXd z = eb.eigenvectors().col(col);
        Eigen::VectorXd cz = Eigen::VectorXd::Zero(d.unknown_count());
        for (int t = 0; t < r0; ++t) cz[support[static_cast<std::size_t>(t)]] = cblock.row(t).dot(z);
        Eigen::VectorXd x = solver.solve(cz);
        const double lambda = all[j];
        const double rel = (w * x - lambda * (d.stiffness() * x)).norm() /
                           std::max(1e-300, lambda * (d.stiffness() * x).norm());
        if (rel > 1e-8) fail_numerical("metric pencil residual above tolerance");
    }
    return all.head(n_eig == 0 ? r : n_eig);
}

Eigen::VectorXd point_mass_reference(const MetricGraph& gamma, std::span<const GridPoint> sites,
                                     std::span<const double> masses) {
    Lattice lat = gamma.to_combinatorial();
    BoxGreenTable table(lat);
    SparsePotential pot = SparsePotential::from_strengths(table, sites, masses);
    return bs_spectrum(bs_matrix(table, pot));
}

// ---------------------------------------------------------------------------
// Calogero

bool StepPotential::monotone() const {
    bool up = true, down = true;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        if (values[i + 1] < values[i]) up = false;
        if (values[i + 1] > values[i]) down = false;
    }
    return up || down;
}

double StepPotential::integral_sqrt() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += std::sqrt(values[i]) * (breaks[i + 1] - breaks[i]);
    return s;
}

double StepPotential::value_at(double y) const {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (y >= breaks[i] && y < breaks[i + 1]) return values[i];
    return values.empty() ? 0.0 : values.back();
}

CalogeroResult calogero_count(const StepPotential& v, double lambda, double h_target) {
    if (!(lambda > 0.0)) fail_validation("calogero_count needs lambda > 0");
    if (v.breaks.size() != v.values.size() + 1 || v.breaks.front() != 0.0 ||
        std::abs(v.breaks.back() - v.length) > 1e-12)
        fail_validation("step potential: breakpoints must span [0, length]");
    for (std::size_t i = 0; i + 1 < v.breaks.size(); ++i)
        if (!(v.breaks[i + 1] > v.breaks[i])) fail_validation("breakpoints must increase");
    for (double val : v.values)
        if (val < 0.0) fail_validation("potential must be nonnegative");
    if (!v.monotone()) fail_validation("calogero bound is only claimed for monotone potentials");

    double minw = v.length;
    for (std::size_t i = 0; i + 1 < v.breaks.size(); ++i)
        minw = std::min(minw, v.breaks[i + 1] - v.breaks[i]);
    double h = h_target > 0.0 ? h_target : std::min(minw / 8.0, v.length / 64.0);
    const int cells = std::max(2, static_cast<int>(std::ceil(v.length / h)));
    if (cells > 4000) fail_validation("discretization too fine for the dense eigensolve");
    const double hc = v.length / cells;
    const int n = cells - 1;

    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<ConstPiece> pieces;
    for (std::size_t i = 0; i < v.values.size(); ++i)
        pieces.push_back({v.breaks[i], v.breaks[i + 1], v.values[i]});
    auto node = [&](int i) { return (i == 0 || i == cells) ? -1 : i - 1; };
    for (int c = 0; c < cells; ++c) {
        const int a = node(c), b = node(c + 1);
        if (a >= 0) s(a, a) += 1.0 / hc;
        if (b >= 0) s(b, b) += 1.0 / hc;
        if (a >= 0 && b >= 0) {
            s(a, b) -= 1.0 / hc;
            s(b, a) -= 1.0 / hc;
        }
        add_cell_mass(c * hc, hc, a, b, pieces, trip);
    }
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : trip) w(t.row(), t.col()) += t.value();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(w, s);
    if (ges.info() != Eigen::Success) fail_numerical("edge pencil eigensolve failed");
    CalogeroResult out;
    for (int i = 0; i < n; ++i)
        if (ges.eigenvalues()[i] > lambda) ++out.count;
    out.bound = (2.0 / std::numbers::pi) / std::sqrt(lambda) * v.integral_sqrt();
    return out;
}

}  // namespace spg
