#include "spg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spg/birman_schwinger.hpp"
#include "spg/green.hpp"
#include "spg/heat.hpp"
#include "spg/metric_graph.hpp"
#include "spg/sparse_set.hpp"

namespace spg {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_validation("cannot open file for digest: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    return fnv1a64(s.data(), s.size());
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct RunContext {
    json config;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    json manifest;
    std::vector<fs::path> outputs;

    fs::path out_path(const std::string& name) const { return out_dir / name; }

    void write_output(const std::string& name, const std::string& body) {
        const fs::path p = out_path(name);
        std::ofstream os(p, std::ios::binary);
        if (!os) fail_validation("cannot write output: " + p.string());
        os << body;
        os.close();
        outputs.push_back(p);
    }
};

json alpha_spec(const json& cfg) {
    if (!cfg.contains("alphas")) fail_validation("config: missing alphas");
    return cfg["alphas"];
}

std::vector<double> make_alpha_grid(const json& a) {
    const double lo = a.at("min").get<double>(), hi = a.at("max").get<double>();
    const int count = a.at("count").get<int>();
    const bool logspace = a.value("log", true);
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) fail_validation("bad alpha grid");
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(logspace ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
    }
    return out;
}

LatticeSpec lattice_from_config(const json& cfg, BoundaryMode default_mode) {
    LatticeSpec spec;
    spec.dimension = cfg.at("dimension").get<int>();
    spec.radius = cfg.at("radius").get<int>();
    std::string mode = cfg.value("boundaryMode", default_mode == BoundaryMode::DirichletBox
                                                     ? "dirichlet-box"
                                                     : "dirichlet-box-plus-origin");
    if (mode == "dirichlet-box")
        spec.mode = BoundaryMode::DirichletBox;
    else if (mode == "dirichlet-box-plus-origin")
        spec.mode = BoundaryMode::DirichletBoxPlusOrigin;
    else
        fail_validation("unknown boundaryMode: " + mode);
    return spec;
}

std::vector<double> power_weights(int n, double exponent) {
    std::vector<double> w;
    for (int i = 1; i <= n; ++i) w.push_back(std::pow(static_cast<double>(i), -exponent));
    return w;
}

// --- experiment bodies -----------------------------------------------------

void run_green(RunContext& ctx) {
    const int max_offset = ctx.config.value("maxOffset", 8);
    const double check_radius = ctx.config.value("asymptoticRadius", 50.0);
    if (max_offset < 1 || max_offset > 128) fail_validation("maxOffset out of range");
    QuadratureScheme q;
    q.target = ctx.config.value("quadratureTarget", 1e-10);
    Z2Kernel kernel(q);
    const double cnorm = calibrate_c_norm(kernel, 16, ctx.seed ? ctx.seed : 1);

    std::ostringstream os;
    os << "x1,x2,a_value,asymptotic,abs_diff\n";
    for (int i = 0; i <= max_offset; ++i)
        for (int j = 0; j <= i; ++j) {
            if (i == 0 && j == 0) continue;
            const double a = kernel.value(i, j);
            const double as = fundamental_z2_asymptotic({i, j, 0});
            os << i << "," << j << "," << fmt(a) << "," << fmt(as) << "," << fmt(std::abs(a - as))
               << "\n";
        }
    const std::int64_t r = static_cast<std::int64_t>(check_radius);
    const double a50 = kernel.value(r, 0);
    const double as50 = fundamental_z2_asymptotic({r, 0, 0});
    os << r << ",0," << fmt(a50) << "," << fmt(as50) << "," << fmt(std::abs(a50 - as50)) << "\n";

    ctx.write_output(ctx.config.value("output", std::string("green.csv")), os.str());
    ctx.manifest["cNorm"] = cnorm;
}

struct TableBundle {
    std::unique_ptr<Lattice> lattice;
    std::unique_ptr<GreenTable> table;
    std::unique_ptr<CandidateStream> stream;
};

TableBundle make_table(const json& cfg) {
    TableBundle b;
    const std::string path = cfg.value("table", "box");
    if (path == "z2-formula") {
        b.table = std::make_unique<Z2DirichletGreen>();
        b.stream = std::make_unique<Z2SpiralStream>(cfg.value("radiusCap", 1e15),
                                                    cfg.value("scanCap", 1000000L));
    } else if (path == "box") {
        LatticeSpec spec = lattice_from_config(cfg, BoundaryMode::DirichletBox);
        b.lattice = std::make_unique<Lattice>(spec);
        b.table = std::make_unique<BoxGreenTable>(*b.lattice);
        b.stream = std::make_unique<BoxCandidateStream>(*b.lattice, cfg.value("mildnessBound", 0.0));
    } else {
        fail_validation("unknown table kind: " + path);
    }
    return b;
}

std::string sparse_summary_csv(const SparseSet& s) {
    std::ostringstream os;
    os << "n,x,y,z,mu2,min_dist_prev\n";
    for (int i = 0; i < s.size(); ++i) {
        double dmin = 0.0;
        for (int k = 0; k < i; ++k) {
            const double d = (s.vertices[static_cast<std::size_t>(i)] -
                              s.vertices[static_cast<std::size_t>(k)])
                                 .norm();
            dmin = k == 0 ? d : std::min(dmin, d);
        }
        const auto& v = s.vertices[static_cast<std::size_t>(i)];
        os << (i + 1) << "," << v.x << "," << v.y << "," << v.z << "," << fmt(s.capacities[i])
           << "," << fmt(dmin) << "\n";
    }
    return os.str();
}

void run_sparse_build(RunContext& ctx) {
    TableBundle b = make_table(ctx.config);
    const int n = ctx.config.at("n").get<int>();
    const double cap = ctx.config.value("cap", 1.0);
    EpsilonBudget budget = default_budget(n, cap);
    const std::string set_name = ctx.config.value("setOutput", std::string("sparse_set.json"));
    const std::string sum_name = ctx.config.value("summaryOutput", std::string("sparse_summary.csv"));
    try {
        SparseSet s = build_sparse_set(*b.table, budget, n, *b.stream);
        ctx.write_output(set_name, s.to_json());
        ctx.write_output(sum_name, sparse_summary_csv(s));
        ctx.manifest["hsDeviation"] = s.hs_deviation;
        ctx.manifest["accepted"] = s.size();
        if (s.box_radius) ctx.manifest["boxRadii"].push_back(*s.box_radius);
    } catch (const SparseBuildError& e) {
        ctx.write_output(set_name, e.partial().to_json());
        ctx.write_output(sum_name, sparse_summary_csv(e.partial()));
        ctx.manifest["accepted"] = e.partial().size();
        ctx.manifest["failedAtIndex"] = e.index_reached();
        ctx.manifest["error"] = e.what();
        throw;
    }
}

void run_bs_spectrum(RunContext& ctx) {
    const std::string set_path = ctx.config.at("set").get<std::string>();
    std::ifstream in(set_path);
    if (!in) fail_validation("cannot open sparse set: " + set_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    SparseSet s = SparseSet::from_json(ss.str());
    const double exponent = ctx.config.value("weightExponent", 0.5);
    const std::vector<double> w = power_weights(s.size(), exponent);

    // K = S M S with S = diag(sqrt(w)); the stored Gram matrix is exact here
    Eigen::MatrixXd k(s.size(), s.size());
    for (int i = 0; i < s.size(); ++i)
        for (int j = 0; j < s.size(); ++j)
            k(i, j) = std::sqrt(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)]) *
                      s.gram(i, j);
    Eigen::VectorXd lambda = bs_spectrum(k);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(s.gram, Eigen::EigenvaluesOnly);
    std::vector<double> ws = w;
    std::sort(ws.begin(), ws.end(), std::greater<>());
    std::ostringstream os;
    os << "n,lambda,w_n,ratio\n";
    for (int i = 0; i < lambda.size(); ++i)
        os << (i + 1) << "," << fmt(lambda[i]) << "," << fmt(ws[static_cast<std::size_t>(i)]) << ","
           << fmt(lambda[i] / ws[static_cast<std::size_t>(i)]) << "\n";
    ctx.write_output(ctx.config.value("output", std::string("spectrum.csv")), os.str());
    ctx.manifest["gramEigMin"] = em.eigenvalues()[0];
    ctx.manifest["gramEigMax"] = em.eigenvalues()[s.size() - 1];
    if (s.box_radius) ctx.manifest["boxRadii"].push_back(*s.box_radius);
}

std::vector<std::pair<GridPoint, double>> potential_from_config(const json& cfg) {
    std::vector<std::pair<GridPoint, double>> pot;
    const auto& p = cfg.at("potential");
    const auto& sites = p.at("sites");
    const auto& values = p.at("values");
    if (sites.size() != values.size()) fail_validation("potential sites/values mismatch");
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto& s = sites[i];
        GridPoint g{s.at(0).get<std::int64_t>(), s.at(1).get<std::int64_t>(),
                    s.size() > 2 ? s.at(2).get<std::int64_t>() : 0};
        pot.emplace_back(g, values[i].get<double>());
    }
    return pot;
}

void run_count_negative(RunContext& ctx) {
    LatticeSpec spec = lattice_from_config(ctx.config, BoundaryMode::DirichletBox);
    Lattice lat(spec);
    const auto pot = potential_from_config(ctx.config);
    const auto alphas = make_alpha_grid(alpha_spec(ctx.config));
    std::ostringstream os;
    os << "alpha,count\n";
    int prev = -1;
    for (double a : alphas) {
        const int c = count_negative(lat, pot, a);
        if (prev >= 0 && c < prev) fail_numerical("counting function must be nondecreasing");
        prev = c;
        os << fmt(a) << "," << c << "\n";
    }
    ctx.write_output(ctx.config.value("output", std::string("counts.csv")), os.str());
    ctx.manifest["boxRadii"].push_back(spec.radius);
}

void run_bs_principle(RunContext& ctx) {
    const int d = ctx.config.at("dimension").get<int>();
    const int radius = ctx.config.at("radius").get<int>();
    const bool clamped = ctx.config.value("clamped", d == 2);
    const int n = ctx.config.at("n").get<int>();
    const double cap = ctx.config.value("cap", 1.0);
    const double exponent = ctx.config.value("weightExponent", d == 2 ? 0.5 : 2.0 / 3.0);
    const int acount = ctx.config.value("alphaCount", 20);

    LatticeSpec table_spec{d, radius,
                           clamped ? BoundaryMode::DirichletBoxPlusOrigin : BoundaryMode::DirichletBox};
    Lattice table_lat(table_spec);
    BoxGreenTable table(table_lat);
    BoxCandidateStream stream(table_lat, 0.0);
    SparseSet set = build_sparse_set(table, default_budget(n, cap), n, stream);

    const auto targets = power_weights(n, exponent);
    SparsePotential pot = SparsePotential::for_target(table, set.vertices, targets);
    Eigen::VectorXd lambda = bs_spectrum(bs_matrix(table, pot));

    LatticeSpec count_spec{d, radius, BoundaryMode::DirichletBox};
    Lattice count_lat(count_spec);
    const double lo = 0.5 / lambda[0];
    const double hi = 5.0 / lambda[lambda.size() - 1];
    const auto alphas = non_threshold_alphas(lambda, lo, hi, acount);

    PrincipleOptions opts;
    opts.clamped_comparison = clamped;
    std::vector<CountReport> reports;
    for (double a : alphas) reports.push_back(bs_principle_check(count_lat, lambda, pot, a, opts));

    std::ostringstream os;
    write_count_reports_csv(reports, os);
    ctx.write_output(ctx.config.value("output", std::string("principle.csv")), os.str());
    const bool all_ok = std::all_of(reports.begin(), reports.end(),
                                    [](const CountReport& r) { return r.agree; });
    ctx.manifest["allAgree"] = all_ok;
    ctx.manifest["boxRadii"].push_back(radius);
    if (!all_ok) fail_numerical("Birman-Schwinger counting mismatch in sweep");
}

void run_dimension(RunContext& ctx) {
    const int d = ctx.config.at("dimension").get<int>();
    const int radius = ctx.config.value("radius", 170);
    const double tmin = ctx.config.value("tMin", 50.0), tmax = ctx.config.value("tMax", 500.0);
    const int tcount = ctx.config.value("tCount", 12);
    LatticeSpec spec{d, radius, BoundaryMode::DirichletBox};
    std::vector<double> grid;
    for (int i = 0; i < tcount; ++i)
        grid.push_back(tmin * std::pow(tmax / tmin, static_cast<double>(i) / (tcount - 1)));
    std::ostringstream os;
    os << "t,p,log_t,log_p\n";
    for (double t : grid) {
        const auto r = heat_diag(spec, t);
        os << fmt(t) << "," << fmt(r.value) << "," << fmt(std::log(t)) << ","
           << fmt(std::log(r.value)) << "\n";
    }
    const double dim = estimate_dimension(spec, grid);
    ctx.write_output(ctx.config.value("output", std::string("dimension.csv")), os.str());
    ctx.manifest["fittedDimension"] = dim;
    ctx.manifest["boxRadii"].push_back(radius);
}

void run_metric(RunContext& ctx) {
    const int d = ctx.config.value("dimension", 3);
    const int radius = ctx.config.value("radius", 4);
    const double length = ctx.config.value("length", 1.0);
    const int n = ctx.config.value("n", 8);
    const double cap = ctx.config.value("cap", 1.0);
    const double exponent = ctx.config.value("targetExponent", 2.0 / 3.0);
    std::vector<double> sweep = ctx.config.value("epsSweep", std::vector<double>{0.2, 0.1, 0.05});

    MetricGraph gamma({d, radius, BoundaryMode::DirichletBox}, length);
    Lattice comb = gamma.to_combinatorial();
    BoxGreenTable table(comb);
    BoxCandidateStream stream(comb, 0.0);
    SparseSet set = build_sparse_set(table, default_budget(n, cap), n, stream);

    const auto targets = power_weights(n, exponent);
    std::vector<double> masses(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        masses[static_cast<std::size_t>(i)] = targets[static_cast<std::size_t>(i)] /
                                              set.capacities[i];
    Eigen::VectorXd ref = point_mass_reference(gamma, set.vertices, masses);

    std::ostringstream os;
    os << "eps,n,lambda_metric,lambda_pointmass,target,ratio_to_target\n";
    for (double eps : sweep) {
        std::vector<double> epses(static_cast<std::size_t>(n), eps);
        MetricPotential pot = build_metric_potential(gamma, set.vertices, masses, epses);
        DiscretizedGraph disc(gamma, eps / 8.0);
        Eigen::VectorXd lam = metric_bs_spectrum(disc, pot, n);
        std::vector<double> ts = targets;
        std::sort(ts.begin(), ts.end(), std::greater<>());
        for (int i = 0; i < n; ++i)
            os << fmt(eps) << "," << (i + 1) << "," << fmt(lam[i]) << "," << fmt(ref[i]) << ","
               << fmt(ts[static_cast<std::size_t>(i)]) << ","
               << fmt(lam[i] / ts[static_cast<std::size_t>(i)]) << "\n";
    }
    ctx.write_output(ctx.config.value("output", std::string("metric.csv")), os.str());
    ctx.manifest["boxRadii"].push_back(radius);
    ctx.manifest["hsDeviation"] = set.hs_deviation;
}

void run_calogero(RunContext& ctx) {
    const int trials = ctx.config.value("trials", 200);
    if (!ctx.config.contains("seed")) fail_validation("calogero config requires a seed");
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> ulen(0.5, 1.6), uval(0.0, 60.0), ulam(0.05, 2.0);
    std::uniform_int_distribution<int> usteps(1, 5), udir(0, 1);

    std::ostringstream os;
    os << "trial,lambda,count,bound,ok\n";
    bool all_ok = true;
    for (int t = 0; t < trials; ++t) {
        StepPotential v;
        v.length = ulen(rng);
        const int k = usteps(rng);
        std::vector<double> cuts;
        for (int i = 0; i < k - 1; ++i) cuts.push_back(v.length * (0.1 + 0.8 * ulam(rng) / 2.0));
        std::sort(cuts.begin(), cuts.end());
        v.breaks.push_back(0.0);
        for (double c : cuts)
            if (c > v.breaks.back() + 1e-3) v.breaks.push_back(c);
        v.breaks.push_back(v.length);
        std::vector<double> vals;
        for (std::size_t i = 0; i + 1 < v.breaks.size(); ++i) vals.push_back(uval(rng));
        std::sort(vals.begin(), vals.end());
        if (udir(rng)) std::reverse(vals.begin(), vals.end());
        v.values = vals;
        const double lambda = ulam(rng);
        const CalogeroResult r = calogero_count(v, lambda);
        const bool ok = r.count <= r.bound + 1.0;
        all_ok = all_ok && ok;
        os << t << "," << fmt(lambda) << "," << r.count << "," << fmt(r.bound) << "," << (ok ? 1 : 0)
           << "\n";
    }
    ctx.write_output(ctx.config.value("output", std::string("calogero.csv")), os.str());
    ctx.manifest["allWithinBound"] = all_ok;
    if (!all_ok) fail_numerical("Calogero bound violated beyond the discretization slack");
}

void run_weyl_demo(RunContext& ctx) {
    LatticeSpec spec = lattice_from_config(ctx.config, BoundaryMode::DirichletBox);
    Lattice lat(spec);
    const auto pot = potential_from_config(ctx.config);
    const auto alphas = make_alpha_grid(alpha_spec(ctx.config));
    const auto rows = weyl_demo(lat, pot, alphas);
    std::ostringstream os;
    os << "alpha,count,ratio\n";
    for (const auto& r : rows) os << fmt(r.alpha) << "," << r.count << "," << fmt(r.ratio) << "\n";
    ctx.write_output(ctx.config.value("output", std::string("weyl.csv")), os.str());
    ctx.manifest["boxRadii"].push_back(spec.radius);
}

}  // namespace

std::string run_experiment_text(const std::string& config_text, const RunOptions& opts) {
    json cfg = json::parse(config_text, nullptr, false);
    if (cfg.is_discarded()) fail_validation("config: invalid JSON");
    if (!cfg.is_object() || !cfg.contains("kind")) fail_validation("config: missing kind");
    const std::string kind = cfg["kind"].get<std::string>();

    RunContext ctx;
    ctx.config = cfg;
    std::string out = opts.out_dir;
    if (out.empty()) {
        const char* env = std::getenv("SPG_OUT_DIR");
        out = env ? env : ".";
    }
    ctx.out_dir = out;
    fs::create_directories(ctx.out_dir);
    ctx.seed = opts.seed_override ? *opts.seed_override : cfg.value("seed", 0ull);
    ctx.threads = opts.threads;

    ctx.manifest = json{{"schemaVersion", 1},
                        {"kind", kind},
                        {"libraryVersion", kLibraryVersion},
                        {"configHash", hex64(fnv1a64(cfg.dump().data(), cfg.dump().size()))},
                        {"seed", ctx.seed},
                        {"threads", ctx.threads},
                        {"boxRadii", json::array()},
                        {"outputs", json::array()}};

    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](bool ok) {
        const auto t1 = std::chrono::steady_clock::now();
        ctx.manifest["timingMs"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        ctx.manifest["status"] = ok ? "ok" : "failed";
        for (const auto& p : ctx.outputs) {
            std::error_code ec;
            const auto bytes = fs::file_size(p, ec);
            ctx.manifest["outputs"].push_back({{"path", p.filename().string()},
                                               {"bytes", ec ? 0 : static_cast<long long>(bytes)},
                                               {"fnv1a64", hex64(fnv1a64_file(p.string()))}});
        }
        const fs::path mp = ctx.out_dir / (kind + "-manifest.json");
        std::ofstream os(mp, std::ios::binary);
        os << ctx.manifest.dump(2) << "\n";
        return mp.string();
    };

    try {
        if (kind == "green")
            run_green(ctx);
        else if (kind == "sparse-build")
            run_sparse_build(ctx);
        else if (kind == "bs-spectrum")
            run_bs_spectrum(ctx);
        else if (kind == "count-negative")
            run_count_negative(ctx);
        else if (kind == "bs-principle")
            run_bs_principle(ctx);
        else if (kind == "dimension")
            run_dimension(ctx);
        else if (kind == "metric")
            run_metric(ctx);
        else if (kind == "calogero")
            run_calogero(ctx);
        else if (kind == "weyl-demo")
            run_weyl_demo(ctx);
        else
            fail_validation("unknown experiment kind: " + kind);
    } catch (...) {
        finish(false);
        throw;
    }
    return finish(true);
}

std::string run_experiment_file(const std::string& config_path, const RunOptions& opts) {
    std::ifstream in(config_path);
    if (!in) fail_validation("cannot open config: " + config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_experiment_text(ss.str(), opts);
}

namespace {

std::vector<std::string> split_lines(const std::string& body) {
    std::vector<std::string> lines;
    std::istringstream is(body);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace

int report_from_manifest(const std::string& manifest_path, const std::string& format,
                         const std::string& out_dir) {
    if (format != "csv" && format != "json" && format != "gnuplot")
        fail_validation("unknown report format: " + format);
    std::ifstream in(manifest_path);
    if (!in) fail_validation("cannot open manifest: " + manifest_path);
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded()) fail_validation("manifest: invalid JSON");

    const fs::path base = fs::path(manifest_path).parent_path();
    fs::path out = out_dir.empty() ? base : fs::path(out_dir);
    fs::create_directories(out);

    int written = 0;
    for (const auto& entry : manifest.at("outputs")) {
        const std::string name = entry.at("path").get<std::string>();
        if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
        std::ifstream f(base / name, std::ios::binary);
        if (!f) fail_validation("manifest output missing: " + name);
        std::ostringstream ss;
        ss << f.rdbuf();
        const std::string body = ss.str();
        const auto lines = split_lines(body);
        if (lines.empty()) fail_validation("empty table: " + name);

        // staircase tables must still be nondecreasing when re-emitted
        if (manifest.at("kind") == "count-negative") {
            long prev = -1;
            for (std::size_t i = 1; i < lines.size(); ++i) {
                const auto cells = split_csv(lines[i]);
                const long c = std::strtol(cells.at(1).c_str(), nullptr, 10);
                if (prev >= 0 && c < prev) fail_numerical("staircase no longer monotone");
                prev = c;
            }
        }

        const std::string stem = name.substr(0, name.size() - 4);
        if (format == "csv") {
            std::ofstream os(out / (stem + ".report.csv"), std::ios::binary);
            os << body;
        } else if (format == "json") {
            const auto header = split_csv(lines[0]);
            json rows = json::array();
            for (std::size_t i = 1; i < lines.size(); ++i) {
                const auto cells = split_csv(lines[i]);
                json row;
                for (std::size_t c = 0; c < header.size() && c < cells.size(); ++c)
                    row[header[c]] = cells[c];
                rows.push_back(row);
            }
            std::ofstream os(out / (stem + ".report.json"), std::ios::binary);
            os << json{{"source", name}, {"rows", rows}}.dump(2) << "\n";
        } else {
            std::ofstream os(out / (stem + ".dat"), std::ios::binary);
            os << "# " << lines[0] << "\n";
            for (std::size_t i = 1; i < lines.size(); ++i) {
                std::string l = lines[i];
                std::replace(l.begin(), l.end(), ',', ' ');
                os << l << "\n";
            }
        }
        ++written;
    }
    if (written == 0) fail_validation("manifest has no tabular outputs to report");
    return written;
}

}  // namespace spg
