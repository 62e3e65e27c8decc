#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "spg/graph.hpp"
#include "spg/heat.hpp"

using namespace spg;

namespace {

VertexFunction random_function(const Lattice& lat, std::mt19937_64& rng, int npts, int window) {
    std::uniform_int_distribution<int> coord(-window, window);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    VertexFunction f;
    for (int i = 0; i < npts; ++i) {
        GridPoint p{coord(rng), coord(rng), lat.spec().dimension == 3 ? coord(rng) : 0};
        if (!lat.is_interior(p)) continue;
        f.set(lat.id(p), val(rng));
    }
    return f;
}

double function_norm2(const VertexFunction& f) {
    double s = 0.0;
    for (const auto& [v, x] : f.entries) {
        (void)v;
        s += x * x;
    }
    return s;
}

}  // namespace

TEST_CASE("build_lattice: 3x3 box counts") {
    Lattice lat({2, 1, BoundaryMode::DirichletBox});
    CHECK(lat.graph().vertex_count() == 9);
    CHECK(lat.graph().edges().size() == 12);
    CHECK(lat.graph().dirichlet().size() == 8);
    CHECK(lat.graph().interior_count() == 1);
}

TEST_CASE("build_lattice: 3^3 box counts") {
    Lattice lat({3, 1, BoundaryMode::DirichletBox});
    CHECK(lat.graph().vertex_count() == 27);
    CHECK(lat.graph().edges().size() == 54);
}

TEST_CASE("build_lattice: origin clamp mode") {
    Lattice lat({2, 2, BoundaryMode::DirichletBoxPlusOrigin});
    CHECK(lat.graph().is_dirichlet(lat.id({0, 0, 0})));
    CHECK(!lat.is_interior({0, 0, 0}));
    CHECK(lat.is_interior({1, 0, 0}));
}

TEST_CASE("lattice ids are lexicographic and invertible") {
    Lattice lat({3, 2, BoundaryMode::DirichletBox});
    VertexId prev = -1;
    for (int x = -2; x <= 2; ++x)
        for (int y = -2; y <= 2; ++y)
            for (int z = -2; z <= 2; ++z) {
                const VertexId id = lat.id({x, y, z});
                CHECK(id == prev + 1);
                prev = id;
                CHECK(lat.point(id) == GridPoint{x, y, z});
            }
}

TEST_CASE("energy: indicator of an interior Z^2 vertex") {
    Lattice lat({2, 3, BoundaryMode::DirichletBox});
    VertexFunction f;
    f.set(lat.id({0, 0, 0}), 1.0);
    CHECK(energy(lat.graph(), f) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("energy: zero function and half weights") {
    Lattice lat({2, 3, BoundaryMode::DirichletBox});
    VertexFunction zero;
    CHECK(energy(lat.graph(), zero) == 0.0);

    Lattice half({2, 3, BoundaryMode::DirichletBox}, 0.5);
    VertexFunction f;
    f.set(half.id({0, 0, 0}), 1.0);
    CHECK(energy(half.graph(), f) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("laplacian_apply: delta at the origin") {
    Lattice lat({2, 3, BoundaryMode::DirichletBox});
    VertexFunction f;
    f.set(lat.id({0, 0, 0}), 1.0);
    VertexFunction g = laplacian_apply(lat.graph(), f);
    CHECK(g(lat.id({0, 0, 0})) == doctest::Approx(-4.0));
    CHECK(g(lat.id({1, 0, 0})) == doctest::Approx(1.0));
    CHECK(g(lat.id({0, -1, 0})) == doctest::Approx(1.0));
}

TEST_CASE("laplacian_apply: constant patch center is flat") {
    Lattice lat({2, 4, BoundaryMode::DirichletBox});
    VertexFunction f;
    for (int x = -2; x <= 2; ++x)
        for (int y = -2; y <= 2; ++y) f.set(lat.id({x, y, 0}), 1.0);
    VertexFunction g = laplacian_apply(lat.graph(), f);
    CHECK(g(lat.id({0, 0, 0})) == 0.0);
    CHECK(g(lat.id({1, 1, 0})) == 0.0);
}

TEST_CASE("summation by parts: energy(f) = -<Laplacian f, f>") {
    Lattice lat({2, 8, BoundaryMode::DirichletBox});
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        VertexFunction f = random_function(lat, rng, 25, 6);
        if (f.empty()) continue;
        VertexFunction lf = laplacian_apply(lat.graph(), f);
        double pair = 0.0;
        for (const auto& [v, val] : lf.entries) pair += val * f(v);
        const double en = energy(lat.graph(), f);
        CHECK(std::abs(en + pair) <= 1e-12 * std::max(1.0, function_norm2(f)));
    }
}

TEST_CASE("mildness equals weighted degree") {
    Lattice z2({2, 3, BoundaryMode::DirichletBox});
    CHECK(z2.graph().mildness(z2.id({0, 0, 0})) == doctest::Approx(4.0));
    Lattice z3({3, 2, BoundaryMode::DirichletBox});
    CHECK(z3.graph().mildness(z3.id({0, 0, 0})) == doctest::Approx(6.0));
    // metric-derived weights 1/l with l = 2
    Lattice heavy({2, 3, BoundaryMode::DirichletBox}, 0.5);
    CHECK(heavy.graph().mildness(heavy.id({0, 0, 0})) == doctest::Approx(2.0));
}

TEST_CASE("graph validation rejects bad inputs") {
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 0, 1.0}}), Error);            // loop
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, -1.0}}), Error);           // weight
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}), Error);  // multi-edge
    CHECK_THROWS_AS(WeightedGraph(4, {{0, 1, 1.0}, {2, 3, 1.0}}), Error);  // disconnected
    // degree-one interior vertex
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {0}), Error);
    // fine when the endpoint is Dirichlet
    CHECK_NOTHROW(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {0, 2}));
}

TEST_CASE("hardy_ratio: single site at (1,0) gives 1/16") {
    Lattice lat({2, 4, BoundaryMode::DirichletBoxPlusOrigin});
    VertexFunction f;
    f.set(lat.id({1, 0, 0}), 1.0);
    CHECK(hardy_ratio(lat, f) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));

    VertexFunction zero;
    CHECK_THROWS_AS(hardy_ratio(lat, zero), Error);
}

TEST_CASE("hardy_ratio: empirical maximum is stable under box refinement") {
    std::mt19937_64 rng(11);
    double max32 = 0.0, max64 = 0.0;
    {
        Lattice lat({2, 32, BoundaryMode::DirichletBoxPlusOrigin});
        std::mt19937_64 r2(rng());
        for (int t = 0; t < 500; ++t) {
            VertexFunction f = random_function(lat, r2, 20, 24);
            if (f.empty()) continue;
            f.set(lat.id({0, 0, 0}), 0.0);
            if (energy(lat.graph(), f) == 0.0) continue;
            max32 = std::max(max32, hardy_ratio(lat, f));
        }
    }
    {
        Lattice lat({2, 64, BoundaryMode::DirichletBoxPlusOrigin});
        std::mt19937_64 r2(rng());
        for (int t = 0; t < 500; ++t) {
            VertexFunction f = random_function(lat, r2, 20, 24);
            if (f.empty()) continue;
            f.set(lat.id({0, 0, 0}), 0.0);
            if (energy(lat.graph(), f) == 0.0) continue;
            max64 = std::max(max64, hardy_ratio(lat, f));
        }
    }
    CHECK(max32 > 0.0);
    CHECK(max64 > 0.0);
    CHECK(max32 < 10.0);
    CHECK(max64 < 10.0);
    CHECK(std::abs(max64 - max32) / max32 < 1.0);
}

TEST_CASE("sobolev_ratio: delta on Z^3 and the D <= 2 rejection") {
    Lattice lat({3, 3, BoundaryMode::DirichletBox});
    VertexFunction f;
    f.set(lat.id({0, 0, 0}), 1.0);
    CHECK(sobolev_ratio(lat.graph(), f, 3.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK_THROWS_AS(sobolev_ratio(lat.graph(), f, 2.0), Error);
}

TEST_CASE("sobolev_ratio: random samples stay bounded") {
    Lattice lat({3, 16, BoundaryMode::DirichletBox});
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        VertexFunction f = random_function(lat, rng, 15, 10);
        if (f.empty() || energy(lat.graph(), f) == 0.0) continue;
        worst = std::max(worst, sobolev_ratio(lat.graph(), f, 3.0));
    }
    CHECK(worst > 0.0);
    CHECK(worst < 1.0);
}

TEST_CASE("heat_diag: t = 0 is exactly 1") {
    CHECK(heat_diag({2, 20, BoundaryMode::DirichletBox}, 0.0).value == doctest::Approx(1.0));
    CHECK(heat_diag_reference(3, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("1d reference kernel matches a dense eigensolve oracle at t = 1") {
    // oracle: numeric eigendecomposition of the Dirichlet path Laplacian
    const int R = 200, m = 2 * R - 1;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        L(i, i) = 2.0;
        if (i + 1 < m) {
            L(i, i + 1) = -1.0;
            L(i + 1, i) = -1.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
    const int center = R - 1;
    double p = 0.0;
    for (int k = 0; k < m; ++k) {
        const double amp = es.eigenvectors()(center, k);
        p += std::exp(-es.eigenvalues()[k] * 1.0) * amp * amp;
    }
    CHECK(std::abs(p - scaled_bessel_i0(2.0)) <= 1e-10);
    CHECK(std::abs(p - HeatKernel1D(R).diag0(1.0)) <= 1e-12);
}

TEST_CASE("heat_diag: positive and nonincreasing in t") {
    const LatticeSpec spec{2, 40, BoundaryMode::DirichletBox};
    double prev = heat_diag(spec, 0.5).value;
    for (double t : {1.0, 2.0, 5.0, 10.0, 25.0, 60.0}) {
        const double v = heat_diag(spec, t).value;
        CHECK(v > 0.0);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("heat_diag flags truncation breakdown at large t") {
    const LatticeSpec spec{2, 20, BoundaryMode::DirichletBox};
    CHECK(heat_diag(spec, 5.0).valid);
    CHECK(!heat_diag(spec, 5000.0).valid);
    CHECK_THROWS_AS(heat_diag({2, 20, BoundaryMode::DirichletBoxPlusOrigin}, 1.0), Error);
}

TEST_CASE("estimate_dimension: product-kernel oracle agreement") {
    std::vector<double> grid;
    for (int i = 0; i < 12; ++i) grid.push_back(50.0 * std::pow(10.0, i / 11.0));

    // oracle: the infinite-lattice product kernel fitted the same way
    auto oracle_fit = [&](int d) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (double t : grid) {
            const double lx = std::log(t), ly = std::log(heat_diag_reference(d, t));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double n = static_cast<double>(grid.size());
        return -2.0 * (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    const double d2 = estimate_dimension({2, 170, BoundaryMode::DirichletBox}, grid);
    const double d3 = estimate_dimension({3, 170, BoundaryMode::DirichletBox}, grid);
    CHECK(std::abs(d2 - 2.0) < 0.1);
    CHECK(std::abs(d3 - 3.0) < 0.15);
    CHECK(std::abs(d2 - oracle_fit(2)) < 1e-6);
    CHECK(std::abs(d3 - oracle_fit(3)) < 1e-6);
}

TEST_CASE("estimate_dimension: degenerate grids are rejected") {
    std::vector<double> single{10.0};
    CHECK_THROWS_AS(estimate_dimension({2, 60, BoundaryMode::DirichletBox}, single), Error);
    std::vector<double> vio{50, 100, 200, 40000};
    CHECK_THROWS_AS(estimate_dimension({2, 60, BoundaryMode::DirichletBox}, vio), Error);
}

TEST_CASE("lattice and graph JSON round trips") {
    const LatticeSpec spec{2, 5, BoundaryMode::DirichletBoxPlusOrigin};
    const LatticeSpec back = lattice_spec_from_json(lattice_spec_to_json(spec));
    CHECK(back.dimension == spec.dimension);
    CHECK(back.radius == spec.radius);
    CHECK(back.mode == spec.mode);

    WeightedGraph g(3, {{0, 1, 1.0}, {1, 2, 0.5}}, {0, 2});
    WeightedGraph h = graph_from_json(graph_to_json(g));
    CHECK(h.vertex_count() == 3);
    CHECK(h.edges().size() == 2);
    CHECK(h.is_dirichlet(2));
}
