// Acceptance gate: one line per criterion (PASS / FAIL / SKIP), nonzero exit
// if anything fails. Criteria 1-7 need the public trace corpus in the cache
// directory (XRTRACE_DATASET_DIR, default "dataset-cache") and are skipped
// with a message when it is absent. Criteria 8-13 are self-contained.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xrtrace/errors.hpp"
#include "xrtrace/ingest.hpp"
#include "xrtrace/regression.hpp"
#include "xrtrace/slicing.hpp"
#include "xrtrace/stats.hpp"
#include "xrtrace/trace.hpp"

namespace fs = std::filesystem;
using namespace xrtrace;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail = "") {
    std::cout << (pass ? "PASS" : "FAIL") << "  " << id << ". " << name;
    if (!detail.empty()) std::cout << "  [" << detail << "]";
    std::cout << "\n";
    if (!pass) ++g_failures;
}

void skip(int id, const std::string& name, const std::string& why) {
    std::cout << "SKIP  " << id << ". " << name << "  [" << why << "]\n";
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

bool lower(std::string s, std::string needle) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s.find(needle) != std::string::npos;
}

// ---- dataset corpus -------------------------------------------------------

struct Corpus {
    std::vector<FrameTrace> traces;
    std::optional<std::size_t> target;  // Virus Popper 30 Mb/s 60 FPS
    std::string dir;
};

Corpus load_corpus() {
    Corpus c;
    const char* env = std::getenv("XRTRACE_DATASET_DIR");
    c.dir = env ? env : "dataset-cache";
    if (!fs::is_directory(c.dir)) return c;
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(c.dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        try {
            c.traces.push_back(read_frame_trace(p));
        } catch (const Error&) {
            // not a frame-trace file; ignore
        }
    }
    for (std::size_t i = 0; i < c.traces.size(); ++i) {
        const auto& m = c.traces[i].meta;
        if (lower(m.content_label, "virus") && std::abs(m.target_rate_bps - 30e6) < 1e6 &&
            std::abs(m.frame_rate_fps - 60.0) < 1.0)
            c.target = i;
    }
    return c;
}

PredictorConfig make_config(int n, int t, int tau, Method m = Method::ols, double ps = 0.0) {
    PredictorConfig c;
    c.history_n = n;
    c.horizon_t = t;
    c.lookahead_tau = tau;
    c.method = m;
    c.ps = ps;
    return c;
}

double iqr(std::vector<double> v) {
    return percentile_nearest_rank(v, 0.75) - percentile_nearest_rank(v, 0.25);
}

// ---- oracles --------------------------------------------------------------

// Normal equations in long double via Gaussian elimination with partial
// pivoting; independent of the Eigen-based solver under test.
std::vector<double> ols_oracle(const Dataset& data) {
    const std::size_t n = data.features[0].size() + 1;
    std::vector<std::vector<long double>> a(n, std::vector<long double>(n + 1, 0.0L));
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::vector<long double> x(n, 1.0L);
        for (std::size_t j = 1; j < n; ++j) x[j] = data.features[r][j - 1];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) a[i][j] += x[i] * x[j];
            a[i][n] += x[i] * static_cast<long double>(data.targets[r]);
        }
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(static_cast<double>(a[r][col])) >
                std::abs(static_cast<double>(a[pivot][col])))
                pivot = r;
        std::swap(a[col], a[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            long double f = a[r][col] / a[col][col];
            for (std::size_t j = col; j <= n; ++j) a[r][j] -= f * a[col][j];
        }
    }
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = static_cast<double>(a[i][n] / a[i][i]);
    return theta;
}

// Exhaustive vertex enumeration: some pinball optimum interpolates N+1
// points, so the best loss over all invertible point subsets is the optimum.
double quantile_vertex_oracle(const Dataset& data, double ps) {
    const std::size_t d = data.features[0].size() + 1;
    const std::size_t n = data.rows();
    std::vector<std::size_t> idx(d);
    double best = std::numeric_limits<double>::infinity();

    auto solve_subset = [&](const std::vector<std::size_t>& pts) {
        std::vector<std::vector<long double>> a(d, std::vector<long double>(d + 1));
        for (std::size_t i = 0; i < d; ++i) {
            a[i][0] = 1.0L;
            for (std::size_t j = 1; j < d; ++j) a[i][j] = data.features[pts[i]][j - 1];
            a[i][d] = data.targets[pts[i]];
        }
        for (std::size_t col = 0; col < d; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < d; ++r)
                if (std::abs(static_cast<double>(a[r][col])) >
                    std::abs(static_cast<double>(a[pivot][col])))
                    pivot = r;
            if (std::abs(static_cast<double>(a[pivot][col])) < 1e-12) return;
            std::swap(a[col], a[pivot]);
            for (std::size_t r = 0; r < d; ++r) {
                if (r == col) continue;
                long double f = a[r][col] / a[col][col];
                for (std::size_t j = col; j <= d; ++j) a[r][j] -= f * a[col][j];
            }
        }
        std::vector<double> theta(d);
        for (std::size_t i = 0; i < d; ++i) theta[i] = static_cast<double>(a[i][d] / a[i][i]);
        best = std::min(best, pinball_loss(data, theta, ps));
    };

    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t k) {
        if (k == d) {
            solve_subset(idx);
            return;
        }
        for (std::size_t i = start; i + (d - k) <= n; ++i) {
            idx[k] = i;
            rec(i + 1, k + 1);
        }
    };
    rec(0, 0);
    return best;
}

Dataset random_dataset(std::mt19937& rng, std::size_t rows, std::size_t n_features,
                       double noise) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    std::vector<double> truth(n_features + 1);
    for (auto& cc : truth) cc = coef(rng);
    Dataset d;
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<double> row(n_features);
        double y = truth[0];
        for (std::size_t j = 0; j < n_features; ++j) {
            row[j] = g(rng);
            y += truth[j + 1] * row[j];
        }
        d.features.push_back(std::move(row));
        d.targets.push_back(y + noise * g(rng));
    }
    return d;
}

TraceMeta synth_meta() { return {"synthetic", 30e6, 60.0, "synth"}; }

// ---- dataset-dependent criteria ------------------------------------------

void criterion_1(const FrameTrace& t) {
    auto t0 = clock_type::now();
    double mean = 0.0;
    for (double s : t.sizes) mean += s;
    mean /= static_cast<double>(t.length());
    const double rate = mean * t.meta.frame_rate_fps * 8.0;
    const double dt = seconds_since(t0);
    report(1, "mean video rate 29.76 Mb/s +- 0.05",
           std::abs(rate - 29.76e6) <= 0.05e6 && dt < 1.0,
           fmt(rate / 1e6) + " Mb/s in " + fmt(dt) + " s");
}

void criterion_2(const FrameTrace& t) {
    auto t0 = clock_type::now();
    const double f1 = autocorr(t.sizes, 1).values[1];
    const double d1 = autocorr(diff_series(t), 1).values[1];
    const double dt = seconds_since(t0);
    report(2, "lag-1 ACF: F 0.518 +- 0.02, dF -0.392 +- 0.02",
           std::abs(f1 - 0.518) <= 0.02 && std::abs(d1 - (-0.392)) <= 0.02 && dt < 1.0,
           "F " + fmt(f1) + ", dF " + fmt(d1) + " in " + fmt(dt) + " s");
}

void criterion_3(const FrameTrace& t) {
    auto t0 = clock_type::now();
    auto rep = overflow_report(t, 6);
    const double dt = seconds_since(t0);
    report(3, "overflow p99 at T=6 exceeds 8 Mb/s", rep.p99 > 8e6 && dt < 1.0,
           fmt(rep.p99 / 1e6) + " Mb/s in " + fmt(dt) + " s");
}

void criterion_4(const FrameTrace& t) {
    double mean = 0.0;
    for (double s : t.sizes) mean += s;
    mean /= static_cast<double>(t.length());

    auto p95_of = [&](int horizon) {
        auto model = fit_model(t, make_config(6, horizon, 1));
        auto res = residuals(model, t);
        return percentile_nearest_rank(res.values, 0.95);
    };
    const double p95_t1 = p95_of(1);
    const double p95_t6 = p95_of(6);
    const bool ok = std::abs(p95_t1 - 15e3) <= 3e3 && std::abs(mean - 62.5e3) <= 1e3 &&
                    std::abs(p95_t6 - 0.5 * p95_t1) <= 0.25 * (0.5 * p95_t1);
    report(4, "OLS N=6: residual p95 15 kB +- 3, halved at T=6", ok,
           "p95(T=1) " + fmt(p95_t1 / 1e3) + " kB, p95(T=6) " + fmt(p95_t6 / 1e3) +
               " kB, mean frame " + fmt(mean / 1e3) + " kB");
}

void criterion_5(const FrameTrace& t) {
    std::vector<int> n_set{0, 1, 6};
    std::vector<int> tau_set{1, 2, 3, 4, 5, 6};
    auto grid = residual_std_grid(t, make_config(0, 1, 1), n_set, tau_set);
    bool ok = true;
    for (std::size_t j = 0; j < tau_set.size(); ++j)
        ok = ok && grid[2][j] <= grid[1][j] * 1.01 && grid[1][j] <= grid[0][j] * 1.01;
    report(5, "residual std grid monotone in N for every tau", ok);
}

void criterion_6(const Corpus& corpus) {
    auto cfg = make_config(6, 1, 1, Method::quantile, 0.95);
    auto cm = fit_scoped(corpus.traces, Scope::CM, cfg);
    auto crm = fit_scoped(corpus.traces, Scope::CRM, cfg);

    auto model_for = [](const std::vector<PredictorModel>& models, const std::string& source)
        -> const PredictorModel* {
        for (const auto& m : models)
            for (const auto& id : m.trained_on)
                if (id == source) return &m;
        return nullptr;
    };

    bool ok = true;
    std::string worst;
    double worst_rel = 0.0;
    for (const auto& tr : corpus.traces) {
        if (lower(tr.meta.content_label, "minecraft") &&
            std::abs(tr.meta.target_rate_bps - 40e6) < 1e6)
            continue;  // flagged as anomalous upstream
        const auto* mc = model_for(cm, tr.meta.source_id);
        const auto* mr = model_for(crm, tr.meta.source_id);
        if (!mc || !mr) continue;
        const double iqr_cm = iqr(residuals(*mc, tr).values);
        const double iqr_crm = iqr(residuals(*mr, tr).values);
        const double rel = std::abs(iqr_cm - iqr_crm) / std::max(iqr_crm, 1e-9);
        if (rel > worst_rel) {
            worst_rel = rel;
            worst = tr.meta.source_id;
        }
        ok = ok && rel < 0.30;
    }
    report(6, "CM vs CRM residual IQR within 30% per trace", ok,
           "worst " + worst + " at " + fmt(worst_rel * 100) + "%");
}

void criterion_7(const FrameTrace& t) {
    auto t0 = clock_type::now();
    auto p95_latency = [&](SchedKind kind, double ps) {
        auto run = simulate(t, make_policy(t, kind, 6, 6, ps));
        return std::pair<double, double>{run.summary.p95_latency_s, run.summary.mean_rate_bps};
    };
    const double budget = 16.67e-3;
    auto [fs96_lat, fs96_rate] = p95_latency(SchedKind::FS, 0.96);
    auto [cs96_lat, cs96_rate] = p95_latency(SchedKind::CS, 0.96);
    auto [cs99_lat, cs99_rate] = p95_latency(SchedKind::CS, 0.99);
    const double dt = seconds_since(t0);
    const bool ok = fs96_lat <= budget && cs96_lat > budget && cs99_lat <= budget &&
                    std::abs(fs96_rate - 37.45e6) <= 1.5e6 &&
                    std::abs(cs99_rate - 38.18e6) <= 1.5e6 && dt < 30.0;
    report(7, "S=6 slicing: FS@0.96 and CS@0.99 meet the frame budget, CS@0.96 does not", ok,
           "p95 lat FS96 " + fmt(fs96_lat * 1e3) + " ms, CS96 " + fmt(cs96_lat * 1e3) +
               " ms, CS99 " + fmt(cs99_lat * 1e3) + " ms; rates " + fmt(fs96_rate / 1e6) + "/" +
               fmt(cs99_rate / 1e6) + " Mb/s in " + fmt(dt) + " s");
}

// ---- self-contained criteria ---------------------------------------------

void criterion_8() {
    const std::vector<double> levels{0.5, 0.9, 0.95, 0.99};
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 20 && ok; ++rep) {
        auto t = synth_trace(synth_meta(), 10000, 4000.0, -0.4, 1000 + rep);
        for (double ps : levels) {
            auto model = fit_model(t, make_config(2, 1, 1, Method::quantile, ps));
            auto res = residuals(model, t);
            double covered = 0.0;
            for (double w : res.values)
                if (w <= 0.0) covered += 1.0;
            covered /= static_cast<double>(res.values.size());
            if (std::abs(covered - ps) > 0.02) {
                ok = false;
                detail = "trace " + std::to_string(rep) + " ps " + fmt(ps) + " coverage " +
                         fmt(covered);
                break;
            }
        }
    }
    report(8, "quantile coverage within +-0.02 on 20 synthetic traces", ok, detail);
}

void criterion_9() {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> nf(1, 2);
    std::uniform_real_distribution<double> pdist(0.1, 0.9);
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 100 && ok; ++rep) {
        const auto features = static_cast<std::size_t>(nf(rng));
        std::uniform_int_distribution<std::size_t> rows(features + 2, 8);
        auto d = random_dataset(rng, rows(rng), features, 0.5);
        const double ps = pdist(rng);
        const double loss = pinball_loss(d, fit_quantile(d, ps), ps);
        const double opt = quantile_vertex_oracle(d, ps);
        if (std::abs(loss - opt) > 1e-6 * std::max(opt, 1e-6)) {
            ok = false;
            detail = "problem " + std::to_string(rep) + ": loss " + fmt(loss) + " vs optimum " +
                     fmt(opt);
        }
    }
    report(9, "quantile solver matches the vertex-enumeration oracle (1e-6)", ok, detail);
}

void criterion_10() {
    std::mt19937 rng(2024);
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 100 && ok; ++rep) {
        auto d = random_dataset(rng, 10 + rep % 30, 1 + rep % 4, 0.1);
        auto theta = fit_ols(d);
        auto oracle = ols_oracle(d);
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double scale = std::max(std::abs(oracle[j]), 1e-6);
            if (std::abs(theta[j] - oracle[j]) / scale > 1e-9) {
                ok = false;
                detail = "OLS problem " + std::to_string(rep) + " coeff " + std::to_string(j);
            }
        }
        auto hub = fit_huber(d, 1e12);
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double scale = std::max(std::abs(theta[j]), 1e-9);
            if (std::abs(hub[j] - theta[j]) / scale > 1e-6) {
                ok = false;
                detail = "huber problem " + std::to_string(rep) + " coeff " + std::to_string(j);
            }
        }
    }
    report(10, "OLS matches the normal-equation oracle (1e-9); huge-delta Huber = OLS (1e-6)", ok,
           detail);
}

void criterion_11() {
    auto t = synth_trace(synth_meta(), 2000, 4000.0, -0.4, 66);
    const double alpha = 3.25;
    FrameTrace scaled = t;
    scaled.meta.target_rate_bps *= alpha;
    for (auto& s : scaled.sizes) s *= alpha;

    auto cfg = make_config(4, 1, 1);
    auto m1 = fit_model(t, cfg, true);
    auto m2 = fit_model(scaled, cfg, true);
    bool ok = true;
    for (std::size_t j = 0; j < m1.theta.size(); ++j)
        ok = ok &&
             std::abs(m1.theta[j] - m2.theta[j]) <= 1e-10 * std::max(std::abs(m1.theta[j]), 1.0);

    auto d = build_dataset(t, cfg);
    auto ds = build_dataset(scaled, cfg);
    for (std::size_t i = 0; i < d.rows(); i += 97) {
        const double p1 = m1.predict(d.features[i], t.meta);
        const double p2 = m2.predict(ds.features[i], scaled.meta);
        ok = ok && std::abs(p2 - alpha * p1) <= 1e-10 * std::abs(alpha * p1);
    }
    report(11, "normalization equivariance under alpha-scaling", ok);
}

void criterion_12() {
    bool ok = true;
    std::string detail;

    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> cap(10000.0, 100000.0);
    std::uniform_int_distribution<std::size_t> len(50, 400);
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        auto t = synth_trace(synth_meta(), len(rng), 6000.0, -0.4, 5000 + rep);
        std::vector<double> caps(t.length());
        for (auto& c : caps) c = cap(rng);
        auto run = simulate_fixed(t, caps);
        double arrived = 0.0;
        for (double s : t.sizes) arrived += s;
        if (std::abs(arrived - (run.served_bytes + run.final_backlog)) > 1e-6 * arrived) {
            ok = false;
            detail = "bit conservation broke on run " + std::to_string(rep);
        }
    }

    if (ok) {
        FrameTrace t;
        t.meta = synth_meta();
        t.sizes.assign(120, 62500.0);
        std::vector<double> caps(121, 62500.0);
        auto run = simulate_fixed(t, caps);
        for (std::size_t k = 0; k < t.length() && ok; ++k)
            if (run.latencies[k] != 1.0 / 60.0) {
                ok = false;
                detail = "constant-trace latency not exactly 1/phi at frame " + std::to_string(k);
            }
        for (double q : run.backlog)
            if (q != 0.0) {
                ok = false;
                detail = "constant-trace backlog nonzero";
            }
    }

    if (ok) {
        FrameTrace t;
        t.meta = synth_meta();
        t.sizes = {1000.0, 2000.0};
        std::vector<double> caps(4, 1000.0);
        auto run = simulate_fixed(t, caps);
        if (run.latencies[1] != 2.0 / 60.0) {
            ok = false;
            detail = "two-frame example latency " + fmt(run.latencies[1]) + " != 2/phi";
        }
    }
    report(12, "queue: bit conservation (1000 runs), exact oracle and hand-case latencies", ok,
           detail);
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return fa && fb && sa.str() == sb.str();
}

void criterion_13() {
    const char* cli = std::getenv("XRTRACE_CLI");
    if (!cli) {
        report(13, "CLI determinism", false, "XRTRACE_CLI is not set");
        return;
    }
    auto root = fs::temp_directory_path() / "xrtrace_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    auto trace_path = root / "trace.csv";
    write_frame_trace(synth_trace(synth_meta(), 1500, 4000.0, -0.4, 7), trace_path);

    auto run = [&](const std::string& args) {
        return std::system(("'" + std::string(cli) + "' " + args + " > /dev/null 2>&1").c_str());
    };
    bool ok = true;
    std::string detail;
    for (const char* sub : {"stats", "schedule"}) {
        for (const char* tag : {"a", "b"}) {
            fs::path out = root / (std::string(sub) + "_" + tag);
            std::string args = std::string(sub) + " '" + trace_path.string() +
                               "' --out-dir '" + out.string() + "' --no-timestamp --seed 7";
            if (std::string(sub) == "stats") args += " --windows 1,6 --max-lag 20 --rolling 300,60";
            if (std::string(sub) == "schedule") args += " --kind fs --S 6 --ps 0.95 --N 2";
            if (run(args) != 0) {
                ok = false;
                detail = std::string(sub) + " run failed";
            }
        }
        if (!ok) break;
        fs::path a = root / (std::string(sub) + "_a");
        fs::path b = root / (std::string(sub) + "_b");
        std::size_t n_files = 0;
        for (const auto& e : fs::directory_iterator(a)) {
            ++n_files;
            if (!same_bytes(e.path(), b / e.path().filename())) {
                ok = false;
                detail = e.path().filename().string() + " differs between reruns";
            }
        }
        if (n_files == 0) {
            ok = false;
            detail = std::string(sub) + " produced no output files";
        }
    }
    report(13, "CLI reruns are byte-identical with --no-timestamp", ok, detail);
}

}  // namespace

int main() {
    auto corpus = load_corpus();
    const std::string why = corpus.traces.empty()
                                ? "dataset cache not found at '" + corpus.dir +
                                      "'; run `xrtrace fetch-dataset` first"
                                : "Virus Popper 30 Mb/s 60 FPS trace not found in '" + corpus.dir +
                                      "'";

    if (corpus.target) {
        const auto& t = corpus.traces[*corpus.target];
        criterion_1(t);
        criterion_2(t);
        criterion_3(t);
        criterion_4(t);
        criterion_5(t);
        criterion_6(corpus);
        criterion_7(t);
    } else {
        skip(1, "mean video rate 29.76 Mb/s +- 0.05", why);
        skip(2, "lag-1 ACF: F 0.518 +- 0.02, dF -0.392 +- 0.02", why);
        skip(3, "overflow p99 at T=6 exceeds 8 Mb/s", why);
        skip(4, "OLS N=6: residual p95 15 kB +- 3, halved at T=6", why);
        skip(5, "residual std grid monotone in N for every tau", why);
        skip(6, "CM vs CRM residual IQR within 30% per trace", why);
        skip(7, "S=6 slicing latency/rate targets", why);
    }

    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    criterion_13();

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all executed criteria passed\n";
    return 0;
}
