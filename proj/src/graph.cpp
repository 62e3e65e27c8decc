#include "spg/graph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace spg {

using json = nlohmann::json;

WeightedGraph::WeightedGraph(VertexId vertex_count, std::vector<WeightedEdge> edges,
                             std::vector<VertexId> dirichlet)
    : n_(vertex_count), edges_(std::move(edges)), dirichlet_(std::move(dirichlet)) {
    if (n_ <= 0) fail_validation("graph needs at least one vertex");

    dirichlet_mask_.assign(static_cast<std::size_t>(n_), 0);
    for (VertexId v : dirichlet_) {
        if (v < 0 || v >= n_) fail_validation("Dirichlet vertex out of range");
        dirichlet_mask_[static_cast<std::size_t>(v)] = 1;
    }

    std::vector<std::size_t> deg(static_cast<std::size_t>(n_), 0);
    std::vector<std::uint64_t> keys;
    keys.reserve(edges_.size());
    for (const auto& e : edges_) {
        if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_) fail_validation("edge endpoint out of range");
        if (e.u == e.v) fail_validation("loops are not allowed");
        if (!(e.weight > 0.0)) fail_validation("edge weights must be strictly positive");
        auto [lo, hi] = std::minmax(e.u, e.v);
        keys.push_back((static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi));
        ++deg[static_cast<std::size_t>(e.u)];
        ++deg[static_cast<std::size_t>(e.v)];
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
        fail_validation("multiple edges are not allowed");
    keys.clear();
    keys.shrink_to_fit();

    adj_offset_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (VertexId v = 0; v < n_; ++v) adj_offset_[static_cast<std::size_t>(v) + 1] = adj_offset_[static_cast<std::size_t>(v)] + deg[static_cast<std::size_t>(v)];
    adj_.resize(adj_offset_.back());
    std::vector<std::size_t> cursor(adj_offset_.begin(), adj_offset_.end() - 1);
    for (const auto& e : edges_) {
        adj_[cursor[static_cast<std::size_t>(e.u)]++] = {e.v, e.weight};
        adj_[cursor[static_cast<std::size_t>(e.v)]++] = {e.u, e.weight};
    }

    // connectivity (BFS over all vertices, Dirichlet included)
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(n_), 0);
    std::vector<VertexId> queue{0};
    visited[0] = 1;
    std::size_t head = 0, count = 1;
    while (head < queue.size()) {
        VertexId v = queue[head++];
        for (const auto& [w, weight] : neighbors(v)) {
            (void)weight;
            if (!visited[static_cast<std::size_t>(w)]) {
                visited[static_cast<std::size_t>(w)] = 1;
                queue.push_back(w);
                ++count;
            }
        }
    }
    if (count != static_cast<std::size_t>(n_)) fail_validation("graph must be connected");

    interior_index_.assign(static_cast<std::size_t>(n_), -1);
    for (VertexId v = 0; v < n_; ++v) {
        if (dirichlet_mask_[static_cast<std::size_t>(v)]) continue;
        if (deg[static_cast<std::size_t>(v)] == 1) fail_validation("interior vertices of degree one are not allowed");
        interior_index_[static_cast<std::size_t>(v)] = interior_count_++;
        interior_vertices_.push_back(v);
    }
    if (interior_count_ == 0) fail_validation("graph has no interior vertices");
}

double WeightedGraph::mildness(VertexId v) const {
    if (v < 0 || v >= n_) fail_validation("vertex out of range");
    double s = 0.0;
    for (const auto& [w, weight] : neighbors(v)) {
        (void)w;
        s += weight;
    }
    return s;
}

double VertexFunction::operator()(VertexId v) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), v,
                               [](const auto& e, VertexId key) { return e.first < key; });
    return (it != entries.end() && it->first == v) ? it->second : 0.0;
}

bool VertexFunction::has(VertexId v) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), v,
                               [](const auto& e, VertexId key) { return e.first < key; });
    return it != entries.end() && it->first == v;
}

void VertexFunction::set(VertexId v, double value) {
    auto it = std::lower_bound(entries.begin(), entries.end(), v,
                               [](const auto& e, VertexId key) { return e.first < key; });
    if (it != entries.end() && it->first == v)
        it->second = value;
    else
        entries.insert(it, {v, value});
}

double energy(const WeightedGraph& g, const VertexFunction& f) {
    for (const auto& [v, fv] : f.entries) {
        (void)fv;
        if (v < 0 || v >= g.vertex_count()) fail_validation("function support outside the graph");
        if (g.is_dirichlet(v) && fv != 0.0) fail_validation("function must vanish on the Dirichlet set");
    }
    double acc = 0.0;
    for (const auto& [v, fv] : f.entries) {
        for (const auto& [w, weight] : g.neighbors(v)) {
            if (w < v && f.has(w)) continue;
            double d = fv - f(w);
            acc += weight * d * d;
        }
    }
    return acc;
}

VertexFunction laplacian_apply(const WeightedGraph& g, const VertexFunction& f) {
    VertexFunction out;
    std::unordered_set<VertexId> touched;
    for (const auto& [v, fv] : f.entries) {
        (void)fv;
        touched.insert(v);
        for (const auto& [w, weight] : g.neighbors(v)) {
            (void)weight;
            touched.insert(w);
        }
    }
    std::vector<VertexId> order(touched.begin(), touched.end());
    std::sort(order.begin(), order.end());
    for (VertexId v : order) {
        if (g.is_dirichlet(v)) continue;
        double acc = 0.0, wsum = 0.0;
        for (const auto& [w, weight] : g.neighbors(v)) {
            acc += f(w) * weight;
            wsum += weight;
        }
        double val = acc - f(v) * wsum;
        if (val != 0.0) out.set(v, val);
    }
    return out;
}

namespace {

std::vector<WeightedEdge> lattice_edges(const LatticeSpec& spec, double weight) {
    const int side = 2 * spec.radius + 1;
    const int d = spec.dimension;
    auto index = [&](int cx, int cy, int cz) {
        long id = cx + spec.radius;
        id = id * side + (cy + spec.radius);
        if (d == 3) id = id * side + (cz + spec.radius);
        return static_cast<VertexId>(id);
    };
    std::vector<WeightedEdge> edges;
    const int zlo = (d == 3) ? -spec.radius : 0;
    const int zhi = (d == 3) ? spec.radius : 0;
    for (int x = -spec.radius; x <= spec.radius; ++x)
        for (int y = -spec.radius; y <= spec.radius; ++y)
            for (int z = zlo; z <= zhi; ++z) {
                if (x < spec.radius) edges.push_back({index(x, y, z), index(x + 1, y, z), weight});
                if (y < spec.radius) edges.push_back({index(x, y, z), index(x, y + 1, z), weight});
                if (d == 3 && z < spec.radius) edges.push_back({index(x, y, z), index(x, y, z + 1), weight});
            }
    return edges;
}

std::vector<VertexId> lattice_dirichlet(const LatticeSpec& spec) {
    const int side = 2 * spec.radius + 1;
    const int d = spec.dimension;
    auto index = [&](int cx, int cy, int cz) {
        long id = cx + spec.radius;
        id = id * side + (cy + spec.radius);
        if (d == 3) id = id * side + (cz + spec.radius);
        return static_cast<VertexId>(id);
    };
    std::vector<VertexId> dir;
    const int zlo = (d == 3) ? -spec.radius : 0;
    const int zhi = (d == 3) ? spec.radius : 0;
    for (int x = -spec.radius; x <= spec.radius; ++x)
        for (int y = -spec.radius; y <= spec.radius; ++y)
            for (int z = zlo; z <= zhi; ++z) {
                int linf = std::max(std::abs(x), std::abs(y));
                if (d == 3) linf = std::max(linf, std::abs(z));
                bool clamp = (linf == spec.radius);
                if (spec.mode == BoundaryMode::DirichletBoxPlusOrigin && x == 0 && y == 0 && z == 0)
                    clamp = true;
                if (clamp) dir.push_back(index(x, y, z));
            }
    return dir;
}

void validate_spec(const LatticeSpec& spec) {
    if (spec.dimension != 2 && spec.dimension != 3) fail_validation("lattice dimension must be 2 or 3");
    if (spec.radius < 1) fail_validation("lattice radius too small to contain any interior vertex");
    if (spec.mode == BoundaryMode::DirichletBoxPlusOrigin && spec.radius < 2)
        fail_validation("origin clamp needs radius >= 2");
}

}  // namespace

Lattice::Lattice(const LatticeSpec& spec, double edge_weight)
    : spec_(spec),
      edge_weight_(edge_weight),
      graph_((validate_spec(spec),
              static_cast<VertexId>(spec.dimension == 3
                                        ? (2 * spec.radius + 1) * (2 * spec.radius + 1) * (2 * spec.radius + 1)
                                        : (2 * spec.radius + 1) * (2 * spec.radius + 1))),
             lattice_edges(spec, edge_weight), lattice_dirichlet(spec)) {}

bool Lattice::contains(const GridPoint& p) const {
    const int R = spec_.radius;
    if (std::abs(p.x) > R || std::abs(p.y) > R) return false;
    if (spec_.dimension == 2) return p.z == 0;
    return std::abs(p.z) <= R;
}

VertexId Lattice::id(const GridPoint& p) const {
    if (!contains(p)) fail_validation("point outside the lattice box: " + to_string(p));
    const long R = spec_.radius, S = side();
    long idx = (p.x + R) * S + (p.y + R);
    if (spec_.dimension == 3) idx = idx * S + (p.z + R);
    return static_cast<VertexId>(idx);
}

GridPoint Lattice::point(VertexId v) const {
    const long R = spec_.radius, S = side();
    long idx = v;
    GridPoint p;
    if (spec_.dimension == 3) {
        p.z = idx % S - R;
        idx /= S;
    }
    p.y = idx % S - R;
    p.x = idx / S - R;
    return p;
}

bool Lattice::is_interior(const GridPoint& p) const {
    return contains(p) && !graph_.is_dirichlet(id(p));
}

Lattice build_lattice(const LatticeSpec& spec) { return Lattice(spec); }

double hardy_ratio(const Lattice& lat, const VertexFunction& f) {
    if (lat.spec().dimension != 2 || lat.spec().mode != BoundaryMode::DirichletBoxPlusOrigin)
        fail_validation("hardy_ratio needs the origin-clamped square lattice");
    double en = energy(lat.graph(), f);
    if (en == 0.0) fail_numerical("hardy_ratio undefined for zero-energy functions");
    double num = 0.0;
    for (const auto& [v, fv] : f.entries) {
        GridPoint p = lat.point(v);
        if (p.is_origin()) continue;
        double r = p.norm();
        double w = 1.0 / (r * r);
        double lg = std::log(r) + 2.0;
        num += fv * fv * w / (lg * lg);
    }
    return num / en;
}

double sobolev_ratio(const WeightedGraph& g, const VertexFunction& f, double global_dimension) {
    if (!(global_dimension > 2.0)) fail_validation("sobolev_ratio needs global dimension D > 2");
    double en = energy(g, f);
    if (en == 0.0) fail_numerical("sobolev_ratio undefined for zero-energy functions");
    const double p = global_dimension / (global_dimension - 2.0);
    double s = 0.0;
    for (const auto& [v, fv] : f.entries) {
        (void)v;
        s += std::pow(std::abs(fv), p);
    }
    return std::pow(s, 2.0 / p) / en;
}

namespace {
const char* mode_name(BoundaryMode m) {
    return m == BoundaryMode::DirichletBox ? "dirichlet-box" : "dirichlet-box-plus-origin";
}
BoundaryMode mode_from_name(const std::string& s) {
    if (s == "dirichlet-box") return BoundaryMode::DirichletBox;
    if (s == "dirichlet-box-plus-origin") return BoundaryMode::DirichletBoxPlusOrigin;
    fail_validation("unknown boundary mode: " + s);
}
}  // namespace

std::string lattice_spec_to_json(const LatticeSpec& spec) {
    json j{{"schemaVersion", 1},
           {"type", "lattice"},
           {"dimension", spec.dimension},
           {"radius", spec.radius},
           {"boundaryMode", mode_name(spec.mode)}};
    return j.dump(2);
}

LatticeSpec lattice_spec_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_validation("lattice spec: invalid JSON");
    if (!j.contains("dimension") || !j.contains("radius") || !j.contains("boundaryMode"))
        fail_validation("lattice spec: missing fields");
    LatticeSpec spec;
    spec.dimension = j["dimension"].get<int>();
    spec.radius = j["radius"].get<int>();
    spec.mode = mode_from_name(j["boundaryMode"].get<std::string>());
    validate_spec(spec);
    return spec;
}

std::string graph_to_json(const WeightedGraph& g) {
    json edges = json::array();
    for (const auto& e : g.edges()) edges.push_back({e.u, e.v, e.weight});
    json j{{"schemaVersion", 1},
           {"type", "general"},
           {"vertexCount", g.vertex_count()},
           {"edges", edges},
           {"dirichlet", g.dirichlet()}};
    return j.dump(2);
}

WeightedGraph graph_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_validation("graph: invalid JSON");
    std::vector<WeightedEdge> edges;
    for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<VertexId>(), e.at(1).get<VertexId>(), e.at(2).get<double>()});
    std::vector<VertexId> dir;
    if (j.contains("dirichlet")) dir = j["dirichlet"].get<std::vector<VertexId>>();
    return WeightedGraph(j.at("vertexCount").get<VertexId>(), std::move(edges), std::move(dir));
}

void write_vertex_function_csv(const Lattice& lat, const VertexFunction& f, std::ostream& os) {
    const int d = lat.spec().dimension;
    os << (d == 2 ? "x1,x2,value\n" : "x1,x2,x3,value\n");
    char buf[512];
    for (const auto& [v, value] : f.entries) {
        GridPoint p = lat.point(v);
        if (d == 2)
            std::snprintf(buf, sizeof buf, "%" PRId64 ",%" PRId64 ",%.17g\n", p.x, p.y, value);
        else
            std::snprintf(buf, sizeof buf, "%" PRId64 ",%" PRId64 ",%" PRId64 ",%.17g\n", p.x, p.y, p.z, value);
        os << buf;
    }
}

}  // namespace spg
