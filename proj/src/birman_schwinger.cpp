#include "spg/birman_schwinger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace spg {

Eigen::VectorXd SparsePotential::weights() const {
    Eigen::VectorXd w(size());
    for (int i = 0; i < size(); ++i) w[i] = entries[static_cast<std::size_t>(i)].weight;
    return w;
}

double SparsePotential::ratio_deviation() const {
    double dev = 0.0;
    for (int i = 0; i + 1 < size(); ++i) {
        const double r = entries[static_cast<std::size_t>(i) + 1].weight /
                         entries[static_cast<std::size_t>(i)].weight;
        dev = std::max(dev, std::abs(r - 1.0));
    }
    return dev;
}

namespace {

SparsePotential sort_entries(std::vector<SparsePotential::Entry> entries) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!(entries[i].strength > 0.0)) fail_validation("potential strengths must be positive");
        for (std::size_t j = i + 1; j < entries.size(); ++j)
            if (entries[i].site == entries[j].site)
                fail_validation("duplicate support vertex " + to_string(entries[i].site));
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.site < b.site;
    });
    SparsePotential p;
    p.entries = std::move(entries);
    return p;
}

}  // namespace

SparsePotential SparsePotential::from_strengths(const GreenTable& table,
                                                std::span<const GridPoint> sites,
                                                std::span<const double> strengths) {
    if (sites.size() != strengths.size()) fail_validation("sites/strengths length mismatch");
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double mu2 = table.capacity(sites[i]);
        entries.push_back({sites[i], strengths[i], strengths[i] * mu2});
    }
    return sort_entries(std::move(entries));
}

SparsePotential SparsePotential::for_target(const GreenTable& table,
                                            std::span<const GridPoint> sites,
                                            std::span<const double> targets) {
    if (sites.size() != targets.size()) fail_validation("sites/targets length mismatch");
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double mu2 = table.capacity(sites[i]);
        entries.push_back({sites[i], targets[i] / mu2, targets[i]});
    }
    return sort_entries(std::move(entries));
}

Eigen::MatrixXd bs_matrix(const GreenTable& table, const SparsePotential& pot) {
    const int n = pot.size();
    if (n == 0) fail_validation("bs_matrix needs a nonempty potential");
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& ei = pot.entries[static_cast<std::size_t>(i)];
        k(i, i) = ei.strength * table.capacity(ei.site);
        for (int j = i + 1; j < n; ++j) {
            const auto& ej = pot.entries[static_cast<std::size_t>(j)];
            const double v =
                std::sqrt(ei.strength * ej.strength) * table.green(ei.site, ej.site);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    // Gram matrix of sqrt(V_n) h_n in the energy inner product
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()[0] < -1e-10 * std::max(1.0, k.norm()))
        fail_numerical("bs_matrix is not positive semidefinite within tolerance");
    return k;
}

Eigen::VectorXd bs_spectrum(const Eigen::MatrixXd& k) {
    if (k.rows() != k.cols()) fail_validation("bs_spectrum needs a square matrix");
    if ((k - k.transpose()).norm() > 1e-12 * std::max(1.0, k.norm()))
        fail_validation("bs_spectrum needs a symmetric matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) fail_numerical("eigendecomposition failed");
    const double scale = std::max(1.0, k.norm());
    for (int i = 0; i < k.rows(); ++i) {
        const double res =
            (k * es.eigenvectors().col(i) - es.eigenvalues()[i] * es.eigenvectors().col(i)).norm();
        if (res > 1e-10 * scale) fail_numerical("eigenpair residual above tolerance");
    }
    return es.eigenvalues().reverse();
}

TwoSidedReport two_sided_check(const Eigen::VectorXd& lambda, const SparsePotential& pot,
                               const Eigen::MatrixXd& gram, double slack_tol) {
    if (lambda.size() != pot.size() || gram.rows() != pot.size())
        fail_validation("two_sided_check: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    TwoSidedReport rep;
    rep.lambda_min_m = es.eigenvalues()[0];
    rep.lambda_max_m = es.eigenvalues()[gram.rows() - 1];
    rep.ok = true;
    // weights are sorted nonincreasing by construction; lambda is descending
    for (int i = 0; i < lambda.size(); ++i) {
        const double w = pot.entries[static_cast<std::size_t>(i)].weight;
        const double lo = rep.lambda_min_m * w, hi = rep.lambda_max_m * w;
        double slack = 0.0;
        if (lambda[i] < lo) slack = (lo - lambda[i]) / w;
        if (lambda[i] > hi) slack = (lambda[i] - hi) / w;
        if (slack > rep.max_rel_slack) {
            rep.max_rel_slack = slack;
            rep.worst_index = i;
        }
    }
    rep.ok = rep.max_rel_slack <= slack_tol;
    return rep;
}

double asymptotic_ratio(const Eigen::VectorXd& lambda, const SparsePotential& pot) {
    const int n = static_cast<int>(lambda.size());
    if (n != pot.size()) fail_validation("asymptotic_ratio: dimension mismatch");
    if (n < 8) fail_validation("asymptotic_ratio needs at least 8 points");
    const int lo = n / 4, hi = n - n / 4;
    double dev = 0.0;
    for (int i = lo; i < hi; ++i)
        dev = std::max(dev, std::abs(lambda[i] / pot.entries[static_cast<std::size_t>(i)].weight - 1.0));
    return dev;
}

// ---------------------------------------------------------------------------
// inertia

BandInertia band_ldlt_inertia(int n, int bandwidth, std::vector<double>& band, double zero_tol) {
    const int w = bandwidth + 1;  // column height including the diagonal
    if (static_cast<long>(band.size()) != static_cast<long>(w) * n)
        fail_validation("band storage size mismatch");
    double scale = 0.0;
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(band[static_cast<std::size_t>(w) * j]));
    const double tol = zero_tol * std::max(1.0, scale);

    BandInertia out;
    out.min_abs_pivot = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        double* colj = band.data() + static_cast<std::size_t>(w) * j;
        const double d = colj[0];
        out.min_abs_pivot = std::min(out.min_abs_pivot, std::abs(d));
        if (std::abs(d) <= tol) {
            ++out.near_zero;
            continue;  // skip the update; the caller treats near-zero as an error
        }
        if (d < 0.0) ++out.negative;
        const int reach = std::min(bandwidth, n - 1 - j);
        const double inv = 1.0 / d;
        for (int k = 1; k <= reach; ++k) {
            const double ljk = colj[k];  // A(j+k, j)
            if (ljk == 0.0) continue;
            const double f = ljk * inv;
            double* colk = band.data() + static_cast<std::size_t>(w) * (j + k);
            // A(j+k .. j+reach, j+k) -= f * A(j+k .., j)
            const int len = reach - k;
            for (int i = 0; i <= len; ++i) colk[i] -= f * colj[k + i];
        }
    }
    return out;
}

namespace {

int lattice_bandwidth(const Lattice& lat) {
    const auto& g = lat.graph();
    int b = 0;
    for (const auto& e : g.edges()) {
        const int iu = g.interior_index(e.u), iv = g.interior_index(e.v);
        if (iu >= 0 && iv >= 0) b = std::max(b, std::abs(iu - iv));
    }
    return b;
}

}  // namespace

int count_negative(const Lattice& lat, std::span<const std::pair<GridPoint, double>> potential,
                   double alpha, double zero_tol) {
    if (alpha < 0.0) fail_validation("count_negative needs alpha >= 0");
    const auto& g = lat.graph();
    const int n = g.interior_count();
    const int b = lattice_bandwidth(lat);
    const int w = b + 1;
    std::vector<double> band(static_cast<std::size_t>(w) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const VertexId v = g.interior_vertex(i);
        band[static_cast<std::size_t>(w) * i] = g.mildness(v);
        for (const auto& [nb, weight] : g.neighbors(v)) {
            const int j = g.interior_index(nb);
            if (j > i) band[static_cast<std::size_t>(w) * i + (j - i)] = -weight;
        }
    }
    for (const auto& [site, value] : potential) {
        if (value < 0.0) fail_validation("count_negative needs V >= 0");
        if (!lat.is_interior(site))
            fail_validation("potential site must be interior: " + to_string(site));
        const int i = g.interior_index(lat.id(site));
        band[static_cast<std::size_t>(w) * i] -= alpha * value;
    }
    BandInertia inertia = band_ldlt_inertia(n, b, band, zero_tol);
    if (inertia.near_zero > 0)
        fail_threshold("count_negative: eigenvalue within the zero band at alpha = " +
                       std::to_string(alpha));
    return inertia.negative;
}

CountReport bs_principle_check(const Lattice& count_lattice, const Eigen::VectorXd& bs_lambda,
                               const SparsePotential& pot, double alpha,
                               const PrincipleOptions& opts) {
    if (!(alpha > 0.0)) fail_validation("bs_principle_check needs alpha > 0");
    for (int i = 0; i < bs_lambda.size(); ++i) {
        if (bs_lambda[i] <= 0.0) continue;
        const double thr = 1.0 / bs_lambda[i];
        if (std::abs(alpha - thr) <= opts.threshold_rel_tol * thr)
            fail_threshold("alpha within tolerance of threshold 1/lambda_" + std::to_string(i + 1));
    }
    CountReport rep;
    rep.alpha = alpha;
    rep.n_bs = static_cast<int>(
        std::count_if(bs_lambda.begin(), bs_lambda.end(),
                      [&](double l) { return l > 1.0 / alpha; }));
    std::vector<std::pair<GridPoint, double>> v;
    for (const auto& e : pot.entries) v.emplace_back(e.site, e.strength);
    rep.n_minus = count_negative(count_lattice, v, alpha, opts.zero_tol);
    if (opts.clamped_comparison) {
        const int diff = rep.n_minus - rep.n_bs;
        rep.agree = diff == 0 || diff == 1;
        if (!rep.agree) rep.warning = "clamped sandwich violated";
    } else {
        rep.agree = rep.n_minus == rep.n_bs;
        if (!rep.agree) rep.warning = "count mismatch";
    }
    return rep;
}

std::vector<double> non_threshold_alphas(const Eigen::VectorXd& bs_lambda, double lo, double hi,
                                         int count, double rel_gap) {
    if (count < 1 || !(lo > 0.0) || !(hi > lo)) fail_validation("bad alpha sweep range");
    std::vector<double> thresholds;
    for (int i = 0; i < bs_lambda.size(); ++i)
        if (bs_lambda[i] > 0.0) thresholds.push_back(1.0 / bs_lambda[i]);
    std::vector<double> out;
    const double q = std::pow(hi / lo, 1.0 / std::max(1, count - 1));
    for (int i = 0; i < count; ++i) {
        double a = lo * std::pow(q, i);
        for (int tries = 0; tries < 64; ++tries) {
            bool close = false;
            for (double t : thresholds)
                if (std::abs(a - t) <= 2.0 * rel_gap * t) close = true;
            if (!close) break;
            a *= 1.0 + 8.0 * rel_gap;
        }
        out.push_back(a);
    }
    return out;
}

std::vector<WeylRow> weyl_demo(const Lattice& lat,
                               std::span<const std::pair<GridPoint, double>> potential,
                               std::span<const double> alphas, double zero_tol) {
    if (lat.spec().dimension != 3) fail_validation("weyl_demo runs on d = 3 boxes");
    double p32 = 0.0;
    for (const auto& [site, value] : potential) {
        (void)site;
        p32 += std::pow(value, 1.5);
    }
    if (!std::isfinite(p32)) fail_validation("potential must be in l^{3/2}");
    std::vector<WeylRow> rows;
    for (double a : alphas) {
        WeylRow r;
        r.alpha = a;
        r.count = count_negative(lat, potential, a, zero_tol);
        r.ratio = r.count / std::pow(a, 1.5);
        rows.push_back(r);
    }
    return rows;
}

void write_spectrum_csv(const Eigen::VectorXd& lambda, const SparsePotential& pot,
                        std::ostream& os) {
    os << "n,lambda,w_n,ratio\n";
    char buf[256];
    for (int i = 0; i < lambda.size(); ++i) {
        const double w = pot.entries[static_cast<std::size_t>(i)].weight;
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", i + 1, lambda[i], w, lambda[i] / w);
        os << buf;
    }
}

void write_count_reports_csv(std::span<const CountReport> reports, std::ostream& os) {
    os << "alpha,n_minus,n_bs,agreement,warnings\n";
    char buf[256];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%.17g,%d,%d,%d,%s\n", r.alpha, r.n_minus, r.n_bs,
                      r.agree ? 1 : 0, r.warning.c_str());
        os << buf;
    }
}

}  // namespace spg
