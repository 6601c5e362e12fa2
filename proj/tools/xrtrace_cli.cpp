// Command-line frontend: ingestion, trace statistics, predictor fitting,
// residual analytics, and slicing simulation, all emitting plot-ready CSV.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "xrtrace/errors.hpp"
#include "xrtrace/ingest.hpp"
#include "xrtrace/plotdata.hpp"
#include "xrtrace/regression.hpp"
#include "xrtrace/slicing.hpp"
#include "xrtrace/stats.hpp"
#include "xrtrace/trace.hpp"

namespace fs = std::filesystem;
using namespace xrtrace;

namespace {

using Params = std::vector<std::pair<std::string, std::string>>;

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v[i]);
    return os.str();
}

struct CommonOut {
    std::string out_dir = ".";
    bool no_timestamp = false;
    std::uint64_t seed = 0;  // reserved for stochastic subcommands

    void attach(CLI::App* cmd) {
        cmd->add_option("--out-dir", out_dir, "Directory for output data files");
        cmd->add_flag("--no-timestamp", no_timestamp,
                      "Suppress the generated-at header line (byte-stable reruns)");
        cmd->add_option("--seed", seed, "Random seed recorded in output headers");
    }

    fs::path file(const std::string& name) const {
        fs::create_directories(out_dir);
        return fs::path(out_dir) / name;
    }
};

int run_ingest(const std::string& log_path, const std::string& out_path, const TraceMeta& meta) {
    auto packets = read_packet_log(log_path);
    ReassemblyReport report;
    auto trace = reassemble_frames(packets, meta, &report);
    write_frame_trace(trace, out_path);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << trace.length() << " frames to " << out_path << "\n";
    return 0;
}

int run_stats(const std::string& trace_path, const std::vector<int>& windows, int max_lag,
              const std::vector<int>& rolling, const CommonOut& out) {
    auto trace = read_frame_trace(trace_path);
    const std::string cmd = "stats " + trace_path;
    Params common{{"trace", trace_path},
                  {"windows", join_ints(windows)},
                  {"max-lag", std::to_string(max_lag)},
                  {"seed", std::to_string(out.seed)}};

    for (int t : windows) {
        auto rates = rate_series(trace, t);
        auto cdf = empirical_cdf(rates);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < cdf.support.size(); ++i)
            rows.push_back({cdf.support[i], cdf.cum_prob[i]});
        write_plot_data(out.file("rate_cdf_T" + std::to_string(t) + ".csv"), cmd, common,
                        {"rate_bps", "cum_prob"}, rows, !out.no_timestamp);
    }
    {
        std::vector<std::vector<double>> rows;
        for (int t : windows) {
            auto rep = overflow_report(trace, t);
            rows.push_back({static_cast<double>(t), rep.std_dev, rep.p95, rep.p99});
        }
        write_plot_data(out.file("overflow.csv"), cmd, common,
                        {"window_T", "std_bps", "p95_bps", "p99_bps"}, rows, !out.no_timestamp);
    }
    {
        auto acf_f = autocorr(trace.sizes, max_lag);
        auto acf_d = autocorr(diff_series(trace), max_lag);
        std::vector<std::vector<double>> rows;
        for (int k = 0; k <= max_lag; ++k)
            rows.push_back({static_cast<double>(k), acf_f.values[static_cast<std::size_t>(k)],
                            acf_d.values[static_cast<std::size_t>(k)]});
        write_plot_data(out.file("acf.csv"), cmd, common, {"lag", "acf_F", "acf_dF"}, rows,
                        !out.no_timestamp);
    }
    if (!rolling.empty()) {
        auto diff = diff_series(trace);
        auto roll = rolling_autocorr(diff, rolling[0], rolling[1], max_lag);
        Params p = common;
        p.push_back({"rolling", join_ints(rolling)});
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < roll.rows.size(); ++i)
            for (int k = 0; k <= max_lag; ++k)
                rows.push_back({static_cast<double>(i), static_cast<double>(k),
                                roll.rows[i][static_cast<std::size_t>(k)],
                                roll.degenerate[i] ? 1.0 : 0.0});
        write_plot_data(out.file("rolling_acf.csv"), cmd, p,
                        {"window_index", "lag", "acf_dF", "degenerate"}, rows, !out.no_timestamp);
    }
    return 0;
}

int run_fit(const std::vector<std::string>& trace_paths, const PredictorConfig& cfg,
            const std::string& scope_str, double holdout, const std::string& out_path) {
    std::vector<FrameTrace> corpus;
    corpus.reserve(trace_paths.size());
    for (const auto& p : trace_paths) corpus.push_back(read_frame_trace(p));

    auto report_residuals = [&](const PredictorModel& model, const FrameTrace& trace) {
        try {
            auto res = residuals(model, trace);
            double mean = 0.0;
            for (double v : res.values) mean += v;
            mean /= static_cast<double>(res.values.size());
            double var = 0.0;
            for (double v : res.values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(res.values.size());
            std::cout << "  trace " << trace.meta.source_id << ": residual mean "
                      << format_double(mean) << " B, std "
                      << format_double(std::sqrt(var)) << " B over " << res.values.size()
                      << " rows\n";
        } catch (const Error& e) {
            std::cout << "  trace " << trace.meta.source_id << ": " << e.what() << "\n";
        }
    };

    if (trace_paths.size() == 1 && scope_str.empty()) {
        const auto& full = corpus[0];
        FrameTrace train = full;
        if (holdout > 0.0) {
            auto cut = static_cast<std::size_t>(static_cast<double>(full.length()) * (1.0 - holdout));
            if (cut < cfg.min_trace_length())
                throw ConfigError("fit: holdout fraction leaves too little training data");
            train.sizes.assign(full.sizes.begin(), full.sizes.begin() + static_cast<long>(cut));
            train.measured_ts.reset();
        }
        auto model = fit_model(train, cfg);
        write_model(model, out_path);
        std::cout << "fit " << to_string(cfg.method) << " model (N=" << cfg.history_n
                  << ", T=" << cfg.horizon_t << ", tau=" << cfg.lookahead_tau << ") -> "
                  << out_path << "\n";
        if (holdout > 0.0) {
            FrameTrace held = full;
            auto cut = train.sizes.size();
            held.sizes.assign(full.sizes.begin() + static_cast<long>(cut), full.sizes.end());
            held.measured_ts.reset();
            std::cout << "holdout evaluation (" << held.sizes.size() << " frames):\n";
            report_residuals(model, held);
        } else {
            std::cout << "in-sample evaluation:\n";
            report_residuals(model, full);
        }
        return 0;
    }

    Scope scope = scope_str.empty() ? Scope::CRM : scope_from_string(scope_str);
    std::vector<std::string> diags;
    auto models = fit_scoped(corpus, scope, cfg, &diags);
    for (const auto& d : diags) std::cerr << "warning: " << d << "\n";
    for (const auto& model : models) {
        std::string key = model.trained_on.empty() ? "all" : model.trained_on[0];
        if (model.scope == Scope::GM) key = "all";
        if (model.scope == Scope::CM) {
            // The group key is the content label; recover it from any member.
            for (const auto& tr : corpus)
                if (!model.trained_on.empty() && tr.meta.source_id == model.trained_on[0])
                    key = tr.meta.content_label;
        }
        fs::path path = out_path + "_" + to_string(model.scope) + "_" + key + ".model";
        write_model(model, path);
        std::cout << "fit " << to_string(model.scope) << " model '" << key << "' ("
                  << model.trained_on.size() << " trace(s)) -> " << path.string() << "\n";
    }
    return 0;
}

int run_residuals(const std::string& model_path, const std::string& trace_path, int max_lag,
                  const std::vector<int>& grid_n, const std::vector<int>& grid_tau,
                  const CommonOut& out) {
    auto model = read_model(model_path);
    auto trace = read_frame_trace(trace_path);
    const std::string cmd = "residuals " + model_path + " " + trace_path;
    Params common{{"model", model_path},
                  {"trace", trace_path},
                  {"max-lag", std::to_string(max_lag)},
                  {"seed", std::to_string(out.seed)}};

    auto res = residuals(model, trace);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < res.values.size(); ++i)
            rows.push_back({static_cast<double>(i), res.values[i]});
        write_plot_data(out.file("residuals.csv"), cmd, common, {"row", "w_bytes"}, rows,
                        !out.no_timestamp);
    }
    {
        auto rel = relative_residuals(model, trace);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < rel.size(); ++i)
            rows.push_back({static_cast<double>(i), rel[i]});
        write_plot_data(out.file("residuals_relative.csv"), cmd, common, {"row", "w_relative"},
                        rows, !out.no_timestamp);
    }
    {
        auto ccdf = residual_ccdf(res.values);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < ccdf.support.size(); ++i)
            rows.push_back({ccdf.support[i], ccdf.tail_prob[i]});
        write_plot_data(out.file("residual_ccdf.csv"), cmd, common, {"w_bytes", "tail_prob"},
                        rows, !out.no_timestamp);
    }
    {
        auto acf = residual_acf(res.values, max_lag);
        std::vector<std::vector<double>> rows;
        for (int k = 0; k <= max_lag; ++k)
            rows.push_back({static_cast<double>(k), acf.values[static_cast<std::size_t>(k)]});
        write_plot_data(out.file("residual_acf.csv"), cmd, common, {"lag", "acf_w"}, rows,
                        !out.no_timestamp);
    }
    if (!grid_n.empty() && !grid_tau.empty()) {
        auto grid = residual_std_grid(trace, model.config, grid_n, grid_tau);
        Params p = common;
        p.push_back({"grid-N", join_ints(grid_n)});
        p.push_back({"grid-tau", join_ints(grid_tau)});
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < grid_n.size(); ++i)
            for (std::size_t j = 0; j < grid_tau.size(); ++j)
                rows.push_back({static_cast<double>(grid_n[i]), static_cast<double>(grid_tau[j]),
                                grid[i][j]});
        write_plot_data(out.file("residual_std_grid.csv"), cmd, p, {"N", "tau", "std_bytes"},
                        rows, !out.no_timestamp);
    }
    return 0;
}

int run_schedule(const std::string& trace_path, const std::string& kind_str, int period_s,
                 double ps, int history_n, const std::vector<int>& sweep_s,
                 const std::vector<double>& sweep_ps_set, const CommonOut& out) {
    auto trace = read_frame_trace(trace_path);
    SchedKind kind = sched_kind_from_string(kind_str);
    const std::string cmd = "schedule " + trace_path;
    Params common{{"trace", trace_path},
                  {"kind", to_string(kind)},
                  {"S", std::to_string(period_s)},
                  {"ps", format_double(ps)},
                  {"N", std::to_string(history_n)},
                  {"seed", std::to_string(out.seed)}};

    auto summary_row = [](double param, const ScheduleSummary& s) {
        return std::vector<double>{param,          s.mean_latency_s, s.p95_latency_s,
                                   s.max_latency_s, s.mean_rate_bps,  s.livelock ? 1.0 : 0.0};
    };
    const std::vector<std::string> summary_cols{"param",         "mean_latency_s",
                                               "p95_latency_s", "max_latency_s",
                                               "mean_rate_bps", "livelock"};

    if (!sweep_s.empty() || !sweep_ps_set.empty()) {
        std::vector<SweepRow> rows = !sweep_s.empty()
                                          ? sweep_period(trace, kind, sweep_s, history_n, ps)
                                          : sweep_ps(trace, kind, period_s, history_n, sweep_ps_set);
        Params p = common;
        p.push_back({"sweep", !sweep_s.empty() ? "S=" + join_ints(sweep_s)
                                               : "ps=" + join_doubles(sweep_ps_set)});
        std::vector<std::vector<double>> data;
        for (const auto& row : rows) {
            if (row.failed) {
                std::cerr << "warning: sweep point " << format_double(row.param)
                          << " failed: " << row.error << "\n";
                continue;
            }
            data.push_back(summary_row(row.param, row.summary));
        }
        write_plot_data(out.file("sweep.csv"), cmd, p, summary_cols, data, !out.no_timestamp);
        return 0;
    }

    auto policy = make_policy(trace, kind, period_s, history_n, ps);
    auto run = simulate(trace, policy);
    write_plot_data(out.file("schedule_summary.csv"), cmd, common, summary_cols,
                    {summary_row(static_cast<double>(period_s), run.summary)},
                    !out.no_timestamp);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t t = 0; t < run.latencies.size(); ++t)
            rows.push_back({static_cast<double>(t), run.latencies[t],
                            t < run.capacities.size() ? run.capacities[t] : 0.0});
        write_plot_data(out.file("schedule_latency.csv"), cmd, common,
                        {"frame", "latency_s", "capacity_bytes"}, rows, !out.no_timestamp);
    }
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < run.backlog.size(); ++k)
            rows.push_back({static_cast<double>(k), run.backlog[k]});
        write_plot_data(out.file("schedule_backlog.csv"), cmd, common, {"epoch", "backlog_bytes"},
                        rows, !out.no_timestamp);
    }
    if (run.summary.livelock)
        std::cerr << "warning: queue never drained; unbounded latency reported\n";
    return 0;
}

int run_fetch(std::string url, std::string dir) {
    if (dir.empty()) {
        const char* env = std::getenv("XRTRACE_DATASET_DIR");
        dir = env ? env : "dataset-cache";
    }
    if (url.empty()) {
        const char* env = std::getenv("XRTRACE_DATASET_URL");
        if (!env) {
            std::cerr << "fetch-dataset: no URL given; set XRTRACE_DATASET_URL or pass --url\n";
            return 2;
        }
        url = env;
    }
    fs::create_directories(dir);
    fs::path archive = fs::path(dir) / "dataset.tar.gz";
    std::string fetch = "curl -fsSL -o '" + archive.string() + "' '" + url + "'";
    if (std::system(fetch.c_str()) != 0) {
        std::cerr << "fetch-dataset: download failed from " << url << "\n";
        return 2;
    }
    std::string extract = "tar -xzf '" + archive.string() + "' -C '" + dir + "'";
    if (std::system(extract.c_str()) != 0) {
        std::cerr << "fetch-dataset: could not extract " << archive.string() << "\n";
        return 2;
    }
    std::cout << "dataset cached under " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"XR traffic trace analysis and predictive slicing toolkit"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Reassemble a packet log into a frame trace");
    std::string log_path, ingest_out = "trace.csv";
    TraceMeta meta;
    ingest->add_option("packet_log", log_path, "Packet log CSV")->required();
    ingest->add_option("--out", ingest_out, "Output frame-trace file");
    ingest->add_option("--content", meta.content_label, "Content label");
    ingest->add_option("--rate", meta.target_rate_bps, "Nominal bitrate R in bit/s")->required();
    ingest->add_option("--fps", meta.frame_rate_fps, "Frame rate phi in FPS")->required();
    ingest->add_option("--source", meta.source_id, "Source identifier");

    // stats
    auto* stats = app.add_subcommand("stats", "Rate, overflow and autocorrelation statistics");
    std::string stats_trace;
    std::vector<int> windows{1};
    int max_lag = 50;
    std::vector<int> rolling;
    CommonOut stats_out;
    stats->add_option("trace", stats_trace, "Frame-trace file")->required();
    stats->add_option("--windows", windows, "Moving-average window sizes T")->delimiter(',');
    stats->add_option("--max-lag", max_lag, "Maximum ACF lag");
    stats->add_option("--rolling", rolling, "Rolling ACF as window,shift (frames)")
        ->delimiter(',')
        ->expected(2);
    stats_out.attach(stats);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a frame-size predictor");
    std::vector<std::string> fit_traces;
    std::string method = "ols", scope_str, fit_out = "model";
    PredictorConfig cfg;
    double holdout = 0.0;
    fit->add_option("traces", fit_traces, "Frame-trace file(s)")->required();
    fit->add_option("--method", method, "ols | quantile | huber");
    fit->add_option("--scope", scope_str, "GM | CM | CRM (multi-trace normalized fits)");
    fit->add_option("--N", cfg.history_n, "History length");
    fit->add_option("--T", cfg.horizon_t, "Averaging horizon");
    fit->add_option("--tau", cfg.lookahead_tau, "Look-ahead");
    fit->add_option("--ps", cfg.ps, "Quantile level p_s");
    fit->add_option("--delta", cfg.delta, "Huber threshold in bytes (0 = mean(|F|)/4)");
    fit->add_option("--holdout", holdout, "Hold out this trailing fraction for evaluation");
    fit->add_option("--out", fit_out, "Model file (or prefix for scoped fits)");

    // residuals
    auto* resid = app.add_subcommand("residuals", "Residual series and analytics for a model");
    std::string resid_model, resid_trace;
    int resid_lag = 50;
    std::vector<int> grid_n, grid_tau;
    CommonOut resid_out;
    resid->add_option("model", resid_model, "Model file")->required();
    resid->add_option("trace", resid_trace, "Frame-trace file")->required();
    resid->add_option("--max-lag", resid_lag, "Maximum residual ACF lag");
    resid->add_option("--grid-N", grid_n, "N grid for the std heatmap")->delimiter(',');
    resid->add_option("--grid-tau", grid_tau, "tau grid for the std heatmap")->delimiter(',');
    resid_out.attach(resid);

    // schedule
    auto* sched = app.add_subcommand("schedule", "Predictive slicing simulation");
    std::string sched_trace, kind = "cs";
    int period_s = 6, sched_n = 6;
    double ps = 0.95;
    std::vector<int> sweep_s;
    std::vector<double> sweep_ps_set;
    CommonOut sched_out;
    sched->add_option("trace", sched_trace, "Frame-trace file")->required();
    sched->add_option("--kind", kind, "cs | fs");
    sched->add_option("--S", period_s, "Scheduling period in frames");
    sched->add_option("--ps", ps, "Quantile level p_s of the capacity predictors");
    sched->add_option("--N", sched_n, "Predictor history length");
    sched->add_option("--sweep-S", sweep_s, "Sweep over scheduling periods")->delimiter(',');
    sched->add_option("--sweep-ps", sweep_ps_set, "Sweep over quantile levels")->delimiter(',');
    sched_out.attach(sched);

    // fetch-dataset
    auto* fetch = app.add_subcommand("fetch-dataset", "Download the public trace corpus");
    std::string url, dataset_dir;
    fetch->add_option("--url", url, "Archive URL (default: XRTRACE_DATASET_URL)");
    fetch->add_option("--dir", dataset_dir, "Cache directory (default: XRTRACE_DATASET_DIR)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return run_ingest(log_path, ingest_out, meta);
        if (stats->parsed()) return run_stats(stats_trace, windows, max_lag, rolling, stats_out);
        if (fit->parsed()) {
            cfg.method = method_from_string(method);
            if (cfg.method == Method::quantile && cfg.ps == 0.0)
                throw ConfigError("fit: --ps is required with --method quantile");
            return run_fit(fit_traces, cfg, scope_str, holdout, fit_out);
        }
        if (resid->parsed())
            return run_residuals(resid_model, resid_trace, resid_lag, grid_n, grid_tau, resid_out);
        if (sched->parsed())
            return run_schedule(sched_trace, kind, period_s, ps, sched_n, sweep_s, sweep_ps_set,
                                sched_out);
        if (fetch->parsed()) return run_fetch(url, dataset_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
