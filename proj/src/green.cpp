#include "spg/green.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

namespace spg {

namespace {

constexpr double kPi = std::numbers::pi;

// 12-point Gauss-Legendre rule on [-1, 1].
constexpr double kNode[6] = {
    0.1252334085114689154724414, 0.3678314989981801937526915, 0.5873179542866174472967024,
    0.7699026741943046870368938, 0.9041172563704748566784659, 0.9815606342467192506905491,
};
constexpr double kWeight[6] = {
    0.2491470458134027850005624, 0.2334925365383548087608499, 0.2031674267230659217490645,
    0.1600783285433462263346525, 0.1069393259953184309602547, 0.0471753363865118271946160,
};

struct AxisMesh {
    // zc = 1 - cos(theta), oc = 1 - cos(x theta), both as 2 sin^2(./2) to
    // avoid cancellation near theta = 0
    std::vector<double> theta, weight, zc, oc, cos_x, sin_x;
};

void add_panel(double a, double b, std::int64_t xi, AxisMesh& m, bool with_sin) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (int i = 0; i < 6; ++i) {
        for (int s = -1; s <= 1; s += 2) {
            const double t = c + s * hw * kNode[i];
            const double st = std::sin(0.5 * t);
            const double sxt = std::sin(0.5 * static_cast<double>(xi) * t);
            m.theta.push_back(t);
            m.weight.push_back(hw * kWeight[i]);
            m.zc.push_back(2.0 * st * st);
            m.oc.push_back(2.0 * sxt * sxt);
            if (with_sin) {
                m.cos_x.push_back(std::cos(static_cast<double>(xi) * t));
                m.sin_x.push_back(std::sin(static_cast<double>(xi) * t));
            }
        }
    }
}

void add_graded_range(double lo_cut, std::int64_t xi, int refine, int levels, AxisMesh& m,
                      bool with_sin) {
    // dyadic intervals [pi 2^{-k-1}, pi 2^{-k}] plus the innermost [lo_cut*, ...]
    double hi = kPi;
    for (int k = 0; k < levels; ++k) {
        const double lo = (k == levels - 1) ? lo_cut : hi * 0.5;
        const double len = hi - lo;
        const int sub = refine * (1 + static_cast<int>(std::llabs(xi) * len / 3.0));
        for (int s = 0; s < sub; ++s)
            add_panel(lo + s * len / sub, lo + (s + 1) * len / sub, xi, m, with_sin);
        hi = (k == levels - 1) ? lo : hi * 0.5;
    }
}

AxisMesh build_axis_mesh(std::int64_t xi, const QuadratureScheme& q, int refine, bool full_range) {
    AxisMesh m;
    add_graded_range(0.0, xi, refine, q.dyadic_levels, m, full_range);
    if (full_range) {
        // mirror onto [-pi, 0)
        const std::size_t n = m.theta.size();
        for (std::size_t i = 0; i < n; ++i) {
            m.theta.push_back(-m.theta[i]);
            m.weight.push_back(m.weight[i]);
            m.zc.push_back(m.zc[i]);
            m.oc.push_back(m.oc[i]);
            m.cos_x.push_back(m.cos_x[i]);
            m.sin_x.push_back(-m.sin_x[i]);
        }
    }
    return m;
}

// 1 - cos(x1 t1) cos(x2 t2) = oc1 + oc2 - oc1 oc2,  Z = (zc1 + zc2) / 2
double tensor_value_folded(const AxisMesh& m1, const AxisMesh& m2) {
    long double total = 0.0L;
    const std::size_t n2 = m2.theta.size();
    for (std::size_t i = 0; i < m1.theta.size(); ++i) {
        const double z1 = m1.zc[i], o1 = m1.oc[i];
        long double row = 0.0L;
        double chunk = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n2; ++j) {
            const double o2 = m2.oc[j];
            chunk += m2.weight[j] * (o1 + o2 - o1 * o2) / (0.5 * (z1 + m2.zc[j]));
            if (++cnt == 1024) {
                row += chunk;
                chunk = 0.0;
                cnt = 0;
            }
        }
        row += chunk;
        total += static_cast<long double>(m1.weight[i]) * row;
    }
    // folded to [0,pi]^2: a factor 4 against the (2 pi)^{-2} normalization
    return static_cast<double>(total / (kPi * kPi));
}

double tensor_value_full(const AxisMesh& m1, const AxisMesh& m2) {
    long double total = 0.0L;
    const std::size_t n2 = m2.theta.size();
    for (std::size_t i = 0; i < m1.theta.size(); ++i) {
        const double z1 = m1.zc[i], cx1 = m1.cos_x[i], sx1 = m1.sin_x[i];
        long double row = 0.0L;
        double chunk = 0.0;
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < n2; ++j) {
            const double cosxy = cx1 * m2.cos_x[j] - sx1 * m2.sin_x[j];
            chunk += m2.weight[j] * (1.0 - cosxy) / (0.5 * (z1 + m2.zc[j]));
            if (++cnt == 1024) {
                row += chunk;
                chunk = 0.0;
                cnt = 0;
            }
        }
        row += chunk;
        total += static_cast<long double>(m1.weight[i]) * row;
    }
    return static_cast<double>(total / (4.0L * kPi * kPi));
}

double quadrature_once(std::int64_t a, std::int64_t b, const QuadratureScheme& q, int refine,
                       bool fold) {
    AxisMesh m1 = build_axis_mesh(a, q, refine, !fold);
    if (a == b) return fold ? tensor_value_folded(m1, m1) : tensor_value_full(m1, m1);
    AxisMesh m2 = build_axis_mesh(b, q, refine, !fold);
    return fold ? tensor_value_folded(m1, m2) : tensor_value_full(m1, m2);
}

}  // namespace

double fundamental_z2(const GridPoint& x, const QuadratureScheme& q) {
    if (x.z != 0) fail_validation("fundamental_z2 is a Z^2 kernel; z must be 0");
    if (q.gauss_order != 12) fail_validation("only the 12-point Gauss rule is wired in");
    const std::int64_t a = std::llabs(x.x), b = std::llabs(x.y);
    if (a == 0 && b == 0) return 0.0;
    const bool fold = true;
    double prev = quadrature_once(a, b, q, q.base_refine, fold);
    for (int refine = 2 * q.base_refine; refine <= q.max_refine; refine *= 2) {
        const double val = quadrature_once(a, b, q, refine, fold);
        if (std::abs(val - prev) <= q.target) return val;
        prev = val;
    }
    fail_numerical("fundamental_z2: accuracy target not reached at panel cap for " + to_string(x));
}

double fundamental_z2_asymptotic(const GridPoint& x) {
    if (x.z != 0) fail_validation("fundamental_z2_asymptotic is a Z^2 kernel; z must be 0");
    if (x.x == 0 && x.y == 0) fail_validation("asymptotic form undefined at the origin");
    const double r = std::hypot(static_cast<double>(x.x), static_cast<double>(x.y));
    return (2.0 * std::log(r) + std::log(8.0) + 2.0 * kEulerGamma) / kPi;
}

Z2Kernel::Z2Kernel(QuadratureScheme q, double exact_radius)
    : scheme_(q), exact_radius_(exact_radius) {}

double Z2Kernel::value(std::int64_t x1, std::int64_t x2) const {
    std::int64_t a = std::llabs(x1), b = std::llabs(x2);
    if (a < b) std::swap(a, b);
    if (a == 0) return 0.0;
    const GridPoint key{a, b, 0};
    const double r = key.norm();
    if (r > exact_radius_) return fundamental_z2_asymptotic(key);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const double val = fundamental_z2(key, scheme_);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(key, val).first->second;
}

double GreenTable::normalized_inner(const GridPoint& x, const GridPoint& y) const {
    if (x == y) return 1.0;
    return green(x, y) / std::sqrt(capacity(x) * capacity(y));
}

Z2DirichletGreen::Z2DirichletGreen(double c_norm, QuadratureScheme q, double exact_radius)
    : c_norm_(c_norm), kernel_(q, exact_radius) {
    if (!(c_norm > 0.0)) fail_validation("c_norm must be positive");
}

double Z2DirichletGreen::capacity(const GridPoint& x) const {
    if (x.is_origin()) fail_validation("capacity undefined at the clamped origin");
    return 2.0 * kernel_.value(x.x, x.y) / c_norm_;
}

double Z2DirichletGreen::green(const GridPoint& x, const GridPoint& y) const {
    if (x.is_origin()) fail_validation("green: x must not be the clamped origin");
    const double ax = kernel_.value(x.x, x.y);
    const double ay = kernel_.value(y.x, y.y);
    const double axy = kernel_.value(x.x - y.x, x.y - y.y);
    return (ax + ay - axy) / c_norm_;
}

double calibrate_c_norm(const Z2Kernel& kernel, int samples, std::uint64_t seed) {
    if (samples < 1) fail_validation("calibrate_c_norm needs at least one sample");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coord(-6, 6), xcoord(-4, 4), nsupp(8, 20);
    std::uniform_real_distribution<double> val(-1.0, 1.0);

    auto h_unnormalized = [&](const GridPoint& x, const GridPoint& y) {
        return kernel.value(x.x, x.y) + kernel.value(y.x, y.y) -
               kernel.value(x.x - y.x, x.y - y.y);
    };

    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
        GridPoint x;
        do {
            x = GridPoint{xcoord(rng), xcoord(rng), 0};
        } while (x.is_origin());
        std::map<GridPoint, double> f;
        const int k = nsupp(rng);
        for (int i = 0; i < k; ++i) f[GridPoint{coord(rng), coord(rng), 0}] = val(rng);
        f.erase(GridPoint{0, 0, 0});
        f[x] = 1.0;

        auto fval = [&](const GridPoint& p) {
            auto it = f.find(p);
            return it == f.end() ? 0.0 : it->second;
        };
        const GridPoint dirs[4] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
        double pairing = 0.0;
        for (const auto& [p, fp] : f) {
            for (const auto& d : dirs) {
                const GridPoint qp{p.x + d.x, p.y + d.y, 0};
                if (f.count(qp) && qp < p) continue;  // edge inside the support counted once
                pairing += (fp - fval(qp)) * (h_unnormalized(x, p) - h_unnormalized(x, qp));
            }
        }
        acc += pairing;  // f(x) == 1
    }
    return acc / samples;
}

// ---------------------------------------------------------------------------
// interior solver

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat assemble_interior(const WeightedGraph& g) {
    if (g.dirichlet().empty())
        fail_validation("singular system: finite graph without Dirichlet vertices");
    const int n = g.interior_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 8);
    for (int i = 0; i < n; ++i) {
        const VertexId v = g.interior_vertex(i);
        trip.emplace_back(i, i, g.mildness(v));
        for (const auto& [w, weight] : g.neighbors(v)) {
            const int j = g.interior_index(w);
            if (j >= 0) trip.emplace_back(i, j, -weight);
        }
    }
    SpMat L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    L.makeCompressed();
    return L;
}

}  // namespace

struct InteriorSolver::Impl {
    SpMat L;
    bool direct = true;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;

    Eigen::VectorXd raw_solve(const Eigen::VectorXd& rhs) const {
        if (direct) return ldlt.solve(rhs);
        return cg.solve(rhs);
    }
};

InteriorSolver::InteriorSolver(const WeightedGraph& g) : impl_(std::make_unique<Impl>()) {
    impl_->L = assemble_interior(g);
    const int n = static_cast<int>(impl_->L.rows());
    impl_->direct = n <= 150000;
    if (impl_->direct) {
        impl_->ldlt.compute(impl_->L);
        if (impl_->ldlt.info() != Eigen::Success) fail_numerical("interior factorization failed");
    } else {
        impl_->cg.setTolerance(1e-13);
        impl_->cg.setMaxIterations(30000);
        impl_->cg.compute(impl_->L);
        if (impl_->cg.info() != Eigen::Success) fail_numerical("CG preconditioner setup failed");
    }
}

InteriorSolver::~InteriorSolver() = default;
InteriorSolver::InteriorSolver(InteriorSolver&&) noexcept = default;

Eigen::VectorXd InteriorSolver::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd h = impl_->raw_solve(rhs);
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    for (int round = 0; round < 6; ++round) {
        Eigen::VectorXd r = rhs - impl_->L * h;
        if (r.lpNorm<Eigen::Infinity>() <= 5e-12 * scale) break;
        h += impl_->raw_solve(r);
    }
    Eigen::VectorXd r = rhs - impl_->L * h;
    if (r.lpNorm<Eigen::Infinity>() > 1e-10 * scale)
        fail_numerical("interior solve residual above 1e-10");
    return h;
}

Eigen::VectorXd InteriorSolver::solve_delta(int interior_index) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(impl_->L.rows());
    rhs[interior_index] = 1.0;
    return solve(rhs);
}

const Eigen::SparseMatrix<double>& InteriorSolver::matrix() const { return impl_->L; }
int InteriorSolver::size() const { return static_cast<int>(impl_->L.rows()); }

Eigen::VectorXd green_solve(const WeightedGraph& g, VertexId x) {
    const int idx = g.interior_index(x);
    if (idx < 0) fail_validation("green_solve: source must be an interior vertex");
    InteriorSolver solver(g);
    return solver.solve_delta(idx);
}

// ---------------------------------------------------------------------------
// box table

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

struct BoxGreenTable::Impl {
    bool spectral = false;
    int dim = 0;
    int m = 0;              // interior side 2R-1
    double inv_weight = 1;  // uniform-weight scaling of Green values
    Eigen::MatrixXd psi;    // psi(k, j): eigenvector k at interior site j
    Eigen::VectorXd lambda;
    std::vector<double> T;  // 1/(lambda_i + lambda_j (+ lambda_k)), lex over eigen indices
    std::optional<InteriorSolver> solver;
    mutable std::mutex mu;
    mutable std::unordered_map<GridPoint, Eigen::VectorXd, GridPointHash> columns;
    mutable std::unordered_map<GridPoint, double, GridPointHash> caps;

    // backward transform: given spectral coefficients C (lex over eigen
    // indices), return values on interior sites (lex)
    Eigen::VectorXd backward(std::vector<double>& C) const {
        if (dim == 2) {
            Eigen::Map<RowMat> cm(C.data(), m, m);
            RowMat out = psi.transpose() * cm * psi;
            return Eigen::Map<Eigen::VectorXd>(out.data(), m * m);
        }
        Eigen::Map<RowMat> cm(C.data(), m, static_cast<long>(m) * m);
        RowMat x1 = psi.transpose() * cm;  // (a, j*m+k)
        RowMat x2(static_cast<long>(m) * m, m);
        for (int a = 0; a < m; ++a) {
            Eigen::Map<RowMat> slice(x1.data() + static_cast<long>(a) * m * m, m, m);
            Eigen::Map<RowMat> dst(x2.data() + static_cast<long>(a) * m * m, m, m);
            dst = psi.transpose() * slice;  // (b, k)
        }
        // x2 rows are (a*m+b), cols k; contract k
        RowMat x3 = x2 * psi;  // (a*m+b, c)
        return Eigen::Map<Eigen::VectorXd>(x3.data(), static_cast<long>(m) * m * m);
    }

    Eigen::VectorXd spectral_column(const std::array<int, 3>& site) const {
        std::vector<double> C(T.size());
        if (dim == 2) {
            for (int i = 0; i < m; ++i) {
                const double ui = psi(i, site[0]);
                const std::size_t row = static_cast<std::size_t>(i) * m;
                for (int j = 0; j < m; ++j) C[row + j] = T[row + j] * ui * psi(j, site[1]);
            }
        } else {
            for (int i = 0; i < m; ++i) {
                const double ui = psi(i, site[0]);
                for (int j = 0; j < m; ++j) {
                    const double uij = ui * psi(j, site[1]);
                    const std::size_t row = (static_cast<std::size_t>(i) * m + j) * m;
                    for (int k = 0; k < m; ++k) C[row + k] = T[row + k] * uij * psi(k, site[2]);
                }
            }
        }
        Eigen::VectorXd col = backward(C);
        return col * inv_weight;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& v) const {
        std::vector<double> buf(v.data(), v.data() + v.size());
        if (dim == 2) {
            Eigen::Map<RowMat> vm(buf.data(), m, m);
            RowMat out = psi * vm * psi.transpose();
            return Eigen::Map<Eigen::VectorXd>(out.data(), m * m);
        }
        Eigen::Map<RowMat> vm(buf.data(), m, static_cast<long>(m) * m);
        RowMat x1 = psi * vm;
        RowMat x2(static_cast<long>(m) * m, m);
        for (int a = 0; a < m; ++a) {
            Eigen::Map<RowMat> slice(x1.data() + static_cast<long>(a) * m * m, m, m);
            Eigen::Map<RowMat> dst(x2.data() + static_cast<long>(a) * m * m, m, m);
            dst = psi * slice;
        }
        RowMat x3 = x2 * psi.transpose();
        return Eigen::Map<Eigen::VectorXd>(x3.data(), static_cast<long>(m) * m * m);
    }

    Eigen::VectorXd spectral_solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd C = forward(rhs);
        for (std::size_t i = 0; i < T.size(); ++i) C[static_cast<long>(i)] *= T[i];
        std::vector<double> buf(C.data(), C.data() + C.size());
        return backward(buf) * inv_weight;
    }

    double spectral_capacity(const std::array<int, 3>& site) const {
        long double acc = 0.0L;
        if (dim == 2) {
            for (int i = 0; i < m; ++i) {
                const double ui = psi(i, site[0]) * psi(i, site[0]);
                const std::size_t row = static_cast<std::size_t>(i) * m;
                double chunk = 0.0;
                for (int j = 0; j < m; ++j) {
                    const double uj = psi(j, site[1]) * psi(j, site[1]);
                    chunk += T[row + j] * uj;
                }
                acc += static_cast<long double>(ui) * chunk;
            }
        } else {
            std::vector<double> u3(m);
            for (int k = 0; k < m; ++k) u3[k] = psi(k, site[2]) * psi(k, site[2]);
            for (int i = 0; i < m; ++i) {
                const double ui = psi(i, site[0]) * psi(i, site[0]);
                long double mid = 0.0L;
                for (int j = 0; j < m; ++j) {
                    const double uj = psi(j, site[1]) * psi(j, site[1]);
                    const std::size_t row = (static_cast<std::size_t>(i) * m + j) * m;
                    double chunk = 0.0;
                    for (int k = 0; k < m; ++k) chunk += T[row + k] * u3[k];
                    mid += static_cast<long double>(uj) * chunk;
                }
                acc += static_cast<long double>(ui) * mid;
            }
        }
        return static_cast<double>(acc) * inv_weight;
    }
};

BoxGreenTable::BoxGreenTable(const Lattice& lat) : lat_(&lat), impl_(std::make_unique<Impl>()) {
    impl_->dim = lat.spec().dimension;
    impl_->m = 2 * lat.spec().radius - 1;
    impl_->inv_weight = 1.0 / lat.edge_weight();
    impl_->spectral = lat.spec().mode == BoundaryMode::DirichletBox;
    if (impl_->spectral) {
        const int m = impl_->m;
        impl_->psi.resize(m, m);
        impl_->lambda.resize(m);
        const double denom = m + 1;
        for (int k = 1; k <= m; ++k) {
            impl_->lambda[k - 1] = 2.0 - 2.0 * std::cos(k * kPi / denom);
            for (int j = 1; j <= m; ++j)
                impl_->psi(k - 1, j - 1) = std::sqrt(2.0 / denom) * std::sin(k * j * kPi / denom);
        }
        if (impl_->dim == 2) {
            impl_->T.resize(static_cast<std::size_t>(m) * m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    impl_->T[static_cast<std::size_t>(i) * m + j] =
                        1.0 / (impl_->lambda[i] + impl_->lambda[j]);
        } else {
            impl_->T.resize(static_cast<std::size_t>(m) * m * m);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    const double lij = impl_->lambda[i] + impl_->lambda[j];
                    const std::size_t row = (static_cast<std::size_t>(i) * m + j) * m;
                    for (int k = 0; k < m; ++k) impl_->T[row + k] = 1.0 / (lij + impl_->lambda[k]);
                }
        }
    } else {
        impl_->solver.emplace(lat.graph());
    }
}

BoxGreenTable::~BoxGreenTable() = default;

namespace {

std::array<int, 3> interior_site(const Lattice& lat, const GridPoint& p) {
    const int R = lat.spec().radius;
    return {static_cast<int>(p.x + R - 1), static_cast<int>(p.y + R - 1),
            lat.spec().dimension == 3 ? static_cast<int>(p.z + R - 1) : 0};
}

}  // namespace

const Eigen::VectorXd& BoxGreenTable::column(const GridPoint& x) const {
    if (!lat_->is_interior(x)) fail_validation("green column source must be interior: " + to_string(x));
    {
        std::lock_guard<std::mutex> lock(impl_->mu);
        auto it = impl_->columns.find(x);
        if (it != impl_->columns.end()) return it->second;
    }
    Eigen::VectorXd col;
    const int idx = lat_->graph().interior_index(lat_->id(x));
    if (impl_->spectral) {
        col = impl_->spectral_column(interior_site(*lat_, x));
        // residual r = e_x - L col through the graph stencil; refine if needed
        const auto& g = lat_->graph();
        Eigen::VectorXd r(g.interior_count());
        for (int i = 0; i < g.interior_count(); ++i) {
            const VertexId v = g.interior_vertex(i);
            double acc = g.mildness(v) * col[i];
            for (const auto& [w, weight] : g.neighbors(v)) {
                const int j = g.interior_index(w);
                if (j >= 0) acc -= weight * col[j];
            }
            r[i] = -acc;
        }
        r[idx] += 1.0;
        if (r.lpNorm<Eigen::Infinity>() > 5e-12) col += impl_->spectral_solve(r);
    } else {
        col = impl_->solver->solve_delta(idx);
    }
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->columns.emplace(x, std::move(col)).first->second;
}

double BoxGreenTable::capacity(const GridPoint& x) const {
    if (!lat_->is_interior(x)) fail_validation("capacity: site must be interior: " + to_string(x));
    if (impl_->spectral) {
        {
            std::lock_guard<std::mutex> lock(impl_->mu);
            auto it = impl_->caps.find(x);
            if (it != impl_->caps.end()) return it->second;
        }
        const double c = impl_->spectral_capacity(interior_site(*lat_, x));
        std::lock_guard<std::mutex> lock(impl_->mu);
        return impl_->caps.emplace(x, c).first->second;
    }
    return column(x)[lat_->graph().interior_index(lat_->id(x))];
}

double BoxGreenTable::green(const GridPoint& x, const GridPoint& y) const {
    if (!lat_->contains(y)) fail_validation("green: target outside the box: " + to_string(y));
    const int j = lat_->graph().interior_index(lat_->id(y));
    if (j < 0) return 0.0;  // clamped
    return column(x)[j];
}

double BoxGreenTable::mildness(const GridPoint& x) const {
    return lat_->graph().mildness(lat_->id(x));
}

std::optional<double> BoxGreenTable::capacity_upper_bound() const {
    if (impl_->spectral && impl_->dim == 3) return kZ3FreeCapacity * impl_->inv_weight;
    return std::nullopt;
}

double capacity_extrapolated(const LatticeSpec& base, const GridPoint& x,
                             std::span<const int> radii) {
    if (radii.size() < 2) fail_validation("capacity extrapolation needs at least two radii");
    std::vector<double> t, c;
    for (int R : radii) {
        LatticeSpec spec = base;
        spec.radius = R;
        Lattice lat(spec);
        BoxGreenTable table(lat);
        t.push_back(1.0 / R);
        c.push_back(table.capacity(x));
    }
    // Neville extrapolation to t = 0
    const std::size_t n = t.size();
    std::vector<double> p = c;
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            p[i] = (t[i + level] * p[i] - t[i] * p[i + 1]) / (t[i + level] - t[i]);
    return p[0];
}

void export_green_csv(const GreenTable& table,
                      std::span<const std::pair<GridPoint, GridPoint>> pairs, std::ostream& os) {
    const int d = table.dimension();
    os << (d == 2 ? "x1,x2,y1,y2,value\n" : "x1,x2,x3,y1,y2,y3,value\n");
    char buf[512];
    for (const auto& [x, y] : pairs) {
        const double v = table.green(x, y);
        if (d == 2)
            std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%lld,%.17g\n",
                          static_cast<long long>(x.x), static_cast<long long>(x.y),
                          static_cast<long long>(y.x), static_cast<long long>(y.y), v);
        else
            std::snprintf(buf, sizeof buf, "%lld,%lld,%lld,%lld,%lld,%lld,%.17g\n",
                          static_cast<long long>(x.x), static_cast<long long>(x.y),
                          static_cast<long long>(x.z), static_cast<long long>(y.x),
                          static_cast<long long>(y.y), static_cast<long long>(y.z), v);
        os << buf;
    }
}

std::string green_metadata_json(const GreenTable& table) {
    nlohmann::json j{{"schemaVersion", 1},
                     {"method", table.method()},
                     {"cNorm", table.c_norm()},
                     {"dimension", table.dimension()}};
    if (auto r = table.box_radius()) j["boxRadius"] = *r;
    if (const auto* z2 = dynamic_cast<const Z2DirichletGreen*>(&table)) {
        j["quadratureTarget"] = z2->kernel().scheme().target;
        j["exactRadius"] = z2->kernel().exact_radius();
    }
    return j.dump(2);
}

}  // namespace spg
