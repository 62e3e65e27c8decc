#include "spg/sparse_set.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace spg {

using json = nlohmann::json;

double EpsilonBudget::epsilon(int m, int n) const {
    if (m < 1 || n < 1 || m > size || n > size || m == n)
        fail_validation("epsilon schedule: indices must be distinct and within the budget");
    return beta * std::exp2(-0.5 * (m + n));
}

double EpsilonBudget::square_sum() const {
    double s = 0.0;
    for (int m = 1; m <= size; ++m)
        for (int n = 1; n <= size; ++n)
            if (m != n) s += std::exp2(-static_cast<double>(m + n));
    return beta * beta * s;
}

EpsilonBudget default_budget(int n, double cap) {
    if (n < 1) fail_validation("budget needs n >= 1");
    if (!(cap > 0.0)) fail_validation("budget cap must be positive");
    EpsilonBudget b;
    b.size = n;
    b.cap = cap;
    if (n == 1) {
        b.beta = 0.0;  // no pairs
        return b;
    }
    double s = 0.0;
    for (int m = 1; m <= n; ++m)
        for (int k = 1; k <= n; ++k)
            if (m != k) s += std::exp2(-static_cast<double>(m + k));
    b.beta = std::sqrt(cap / (4.0 * s));
    return b;
}

Eigen::MatrixXd gram_matrix(const GreenTable& table, std::span<const GridPoint> vertices) {
    const int n = static_cast<int>(vertices.size());
    Eigen::MatrixXd m(n, n);
    std::vector<double> mu(n);
    for (int i = 0; i < n; ++i) mu[i] = std::sqrt(table.capacity(vertices[i]));
    for (int i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = table.green(vertices[i], vertices[j]) / (mu[i] * mu[j]);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

double hs_deviation(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) fail_validation("hs_deviation needs a square matrix");
    return (m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).norm();
}

// ---------------------------------------------------------------------------
// candidate streams

BoxCandidateStream::BoxCandidateStream(const Lattice& lat, double mildness_bound) : lat_(&lat) {
    const auto& g = lat.graph();
    order_.reserve(static_cast<std::size_t>(g.interior_count()));
    for (int i = 0; i < g.interior_count(); ++i) {
        const VertexId v = g.interior_vertex(i);
        if (mildness_bound > 0.0 && g.mildness(v) > mildness_bound) continue;
        order_.push_back(v);
    }
    std::sort(order_.begin(), order_.end(), [&](VertexId a, VertexId b) {
        const GridPoint pa = lat.point(a), pb = lat.point(b);
        const std::int64_t ra = pa.x * pa.x + pa.y * pa.y + pa.z * pa.z;
        const std::int64_t rb = pb.x * pb.x + pb.y * pb.y + pb.z * pb.z;
        if (ra != rb) return ra < rb;
        return pa < pb;
    });
}

void BoxCandidateStream::begin_target(const Query&) { cursor_ = 0; }

std::optional<GridPoint> BoxCandidateStream::next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    return lat_->point(order_[cursor_++]);
}

Z2SpiralStream::Z2SpiralStream(double radius_cap, long candidate_cap)
    : radius_cap_(radius_cap), candidate_cap_(candidate_cap) {}

double Z2SpiralStream::predicted_radius(double mu2, double eps) {
    // M(x, y) -> (mu_x / 2) sqrt(2 pi) (2 log|y| + log 8 + 2 gamma)^{-1/2}
    const double c = std::log(8.0) + 2.0 * kEulerGamma;
    const double t = std::numbers::pi * mu2 / (2.0 * eps * eps);
    return std::exp(0.5 * (t - c));
}

void Z2SpiralStream::begin_target(const Query& q) {
    emitted_ = 0;
    shell_.clear();
    shell_pos_ = 0;
    fresh_ = true;
    double r = 1.0;
    const double safety = 1.05;
    for (std::size_t k = 0; k < q.accepted.size(); ++k) {
        const double eps = q.epsilons[k] / safety;
        r = std::max(r, predicted_radius(q.capacities[k], eps));
        if (r > radius_cap_) break;  // reported when next() is called
    }
    radius_ = r;
}

void Z2SpiralStream::fill_shell() {
    shell_.clear();
    shell_pos_ = 0;
    if (radius_ > radius_cap_) return;
    if (radius_ <= 1.5) {
        // innermost shells: walk small rings exactly
        const std::int64_t r = 1;
        for (std::int64_t x = r; x >= -r; --x)
            for (std::int64_t y = -r; y <= r; ++y) {
                if (x == 0 && y == 0) continue;
                const GridPoint p{x, y, 0};
                shell_.push_back(p);
            }
        std::sort(shell_.begin(), shell_.end(), [](const GridPoint& a, const GridPoint& b) {
            const auto ra = a.x * a.x + a.y * a.y, rb = b.x * b.x + b.y * b.y;
            if (ra != rb) return ra < rb;
            if (a.x != b.x) return a.x > b.x;
            return a.y < b.y;
        });
        return;
    }
    constexpr int kAngles = 16;
    for (int j = 0; j < kAngles; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / kAngles;
        const GridPoint p{static_cast<std::int64_t>(std::llround(radius_ * std::cos(phi))),
                          static_cast<std::int64_t>(std::llround(radius_ * std::sin(phi))), 0};
        if (p.is_origin()) continue;
        if (std::find(shell_.begin(), shell_.end(), p) == shell_.end()) shell_.push_back(p);
    }
}

std::optional<GridPoint> Z2SpiralStream::next() {
    while (true) {
        if (emitted_ >= candidate_cap_) return std::nullopt;
        if (radius_ > radius_cap_) return std::nullopt;
        if (shell_pos_ >= static_cast<int>(shell_.size())) {
            if (!fresh_) radius_ *= 1.125;
            fresh_ = false;
            fill_shell();
            if (shell_.empty()) {
                if (radius_ > radius_cap_) return std::nullopt;
                continue;
            }
        }
        ++emitted_;
        return shell_[static_cast<std::size_t>(shell_pos_++)];
    }
}

// ---------------------------------------------------------------------------
// greedy construction

namespace {

SparseSet finish_set(const GreenTable& table, std::vector<GridPoint> vertices,
                     const std::vector<double>& caps, const EpsilonBudget& budget, int requested,
                     double mildness_bound) {
    SparseSet s;
    s.vertices = std::move(vertices);
    s.capacities = Eigen::Map<const Eigen::VectorXd>(caps.data(), static_cast<long>(caps.size()));
    s.gram = gram_matrix(table, s.vertices);
    s.hs_deviation = hs_deviation(s.gram);
    s.mildness_bound = mildness_bound;
    s.budget = budget;
    s.requested = requested;
    s.box_radius = table.box_radius();
    s.method = table.method();
    return s;
}

}  // namespace

SparseSet build_sparse_set(const GreenTable& table, const EpsilonBudget& budget, int n,
                           CandidateStream& candidates, const BuildOptions& opts) {
    if (n < 1) fail_validation("build_sparse_set needs n >= 1");
    if (budget.size < n) fail_validation("budget smaller than the requested set");

    std::vector<GridPoint> accepted;
    std::vector<double> caps, mus;
    double mildness_seen = 0.0;
    const std::optional<double> cap_ub = table.capacity_upper_bound();

    for (int target = 1; target <= n; ++target) {
        std::vector<double> eps(accepted.size());
        for (std::size_t k = 0; k < accepted.size(); ++k)
            eps[k] = budget.epsilon(static_cast<int>(k) + 1, target);
        CandidateStream::Query q{accepted, caps, eps};
        candidates.begin_target(q);

        bool found = false;
        long scanned = 0;
        while (auto cand = candidates.next()) {
            if (++scanned > opts.max_candidates_per_target) break;
            const GridPoint v = *cand;
            if (std::find(accepted.begin(), accepted.end(), v) != accepted.end()) continue;
            if (opts.mildness_bound > 0.0 && table.mildness(v) > opts.mildness_bound) continue;

            // cheap rejection using the capacity upper bound before the exact
            // capacity of the candidate is computed
            bool ok = true;
            if (cap_ub) {
                const double mu_ub = std::sqrt(*cap_ub);
                for (std::size_t k = 0; k < accepted.size() && ok; ++k) {
                    const double lower = std::abs(table.green(accepted[k], v)) / (mus[k] * mu_ub);
                    if (lower >= eps[k]) ok = false;
                }
                if (!ok) continue;
            }

            const double cap_v = table.capacity(v);
            const double mu_v = std::sqrt(cap_v);
            for (std::size_t k = 0; k < accepted.size() && ok; ++k) {
                const double inner = std::abs(table.green(accepted[k], v)) / (mus[k] * mu_v);
                if (!(inner < eps[k])) ok = false;
            }
            if (!ok) continue;

            accepted.push_back(v);
            caps.push_back(cap_v);
            mus.push_back(mu_v);
            mildness_seen = std::max(mildness_seen, table.mildness(v));
            found = true;
            break;
        }
        if (!found) {
            const double bound = opts.mildness_bound > 0.0 ? opts.mildness_bound : mildness_seen;
            SparseSet partial = finish_set(table, accepted, caps, budget, n, bound);
            throw SparseBuildError(
                "sparse-set build: candidate stream exhausted at index " + std::to_string(target) +
                    " (" + std::to_string(accepted.size()) + " accepted, scanned " +
                    std::to_string(scanned) + " candidates)",
                std::move(partial), target);
        }
    }
    const double bound = opts.mildness_bound > 0.0 ? opts.mildness_bound : mildness_seen;
    return finish_set(table, std::move(accepted), caps, budget, n, bound);
}

// ---------------------------------------------------------------------------
// serialization

std::string SparseSet::to_json() const {
    json verts = json::array();
    for (const auto& v : vertices) verts.push_back({v.x, v.y, v.z});
    json gram_rows = json::array();
    for (int i = 0; i < gram.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < gram.cols(); ++j) row.push_back(gram(i, j));
        gram_rows.push_back(row);
    }
    json caps = json::array();
    for (int i = 0; i < capacities.size(); ++i) caps.push_back(capacities[i]);
    json j{{"schemaVersion", 1},
           {"vertices", verts},
           {"capacities", caps},
           {"gram", gram_rows},
           {"hsDeviation", hs_deviation},
           {"mildnessBound", mildness_bound},
           {"requested", requested},
           {"method", method},
           {"budget", {{"size", budget.size}, {"cap", budget.cap}, {"beta", budget.beta},
                       {"schedule", "geometric"}}}};
    if (box_radius) j["boxRadius"] = *box_radius;
    return j.dump(2);
}

SparseSet SparseSet::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_validation("sparse set: invalid JSON");
    SparseSet s;
    for (const auto& v : j.at("vertices"))
        s.vertices.push_back({v.at(0).get<std::int64_t>(), v.at(1).get<std::int64_t>(),
                              v.at(2).get<std::int64_t>()});
    const auto caps = j.at("capacities").get<std::vector<double>>();
    s.capacities = Eigen::Map<const Eigen::VectorXd>(caps.data(), static_cast<long>(caps.size()));
    const auto& rows = j.at("gram");
    s.gram.resize(static_cast<long>(rows.size()), static_cast<long>(rows.size()));
    for (long i = 0; i < s.gram.rows(); ++i)
        for (long k = 0; k < s.gram.cols(); ++k) s.gram(i, k) = rows.at(i).at(k).get<double>();
    s.hs_deviation = j.at("hsDeviation").get<double>();
    s.mildness_bound = j.at("mildnessBound").get<double>();
    s.requested = j.value("requested", s.size());
    s.method = j.value("method", "solve");
    s.budget.size = j.at("budget").at("size").get<int>();
    s.budget.cap = j.at("budget").at("cap").get<double>();
    s.budget.beta = j.at("budget").at("beta").get<double>();
    if (j.contains("boxRadius")) s.box_radius = j["boxRadius"].get<int>();
    return s;
}

}  // namespace spg
