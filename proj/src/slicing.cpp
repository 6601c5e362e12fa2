#include "xrtrace/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "xrtrace/errors.hpp"

namespace xrtrace {

std::string to_string(SchedKind k) { return k == SchedKind::CS ? "CS" : "FS"; }

SchedKind sched_kind_from_string(const std::string& s) {
    if (s == "CS" || s == "cs") return SchedKind::CS;
    if (s == "FS" || s == "fs") return SchedKind::FS;
    throw ConfigError("unknown scheduler kind '" + s + "'");
}

void SlicePolicy::validate() const {
    if (period_s < 1) throw ConfigError("SlicePolicy: S must be >= 1");
    if (kind == SchedKind::CS) {
        if (models.size() != 1)
            throw ConfigError("CS policy carries exactly one model, got " +
                              std::to_string(models.size()));
        if (models[0].config.horizon_t != period_s || models[0].config.lookahead_tau != 1)
            throw ConfigError("CS model must have T=S and tau=1");
    } else {
        if (models.size() != static_cast<std::size_t>(period_s))
            throw ConfigError("FS policy carries S models, got " + std::to_string(models.size()));
        const int n = models[0].config.history_n;
        for (std::size_t l = 0; l < models.size(); ++l) {
            if (models[l].config.horizon_t != 1 ||
                models[l].config.lookahead_tau != static_cast<int>(l) + 1)
                throw ConfigError("FS model " + std::to_string(l) + " must have T=1, tau=" +
                                  std::to_string(l + 1));
            if (models[l].config.history_n != n)
                throw ConfigError("FS models must share the same N");
        }
    }
}

SlicePolicy make_policy(const FrameTrace& training, SchedKind kind, int period_s, int history_n,
                        double ps, bool normalized) {
    SlicePolicy policy;
    policy.kind = kind;
    policy.period_s = period_s;
    PredictorConfig cfg;
    cfg.history_n = history_n;
    cfg.method = Method::quantile;
    cfg.ps = ps;
    if (kind == SchedKind::CS) {
        cfg.horizon_t = period_s;
        cfg.lookahead_tau = 1;
        policy.models.push_back(fit_model(training, cfg, normalized));
    } else {
        cfg.horizon_t = 1;
        for (int tau = 1; tau <= period_s; ++tau) {
            cfg.lookahead_tau = tau;
            policy.models.push_back(fit_model(training, cfg, normalized));
        }
    }
    policy.validate();
    return policy;
}

std::vector<double> allocate_cs(const SlicePolicy& policy, std::span<const double> history,
                                double q, const TraceMeta& meta) {
    const int s = policy.period_s;
    const double pred = std::max(policy.models[0].predict(history, meta), 0.0);
    return std::vector<double>(static_cast<std::size_t>(s), pred + q / s);
}

std::vector<double> allocate_fs(const SlicePolicy& policy, std::span<const double> history,
                                double q, const TraceMeta& meta) {
    std::vector<double> caps;
    caps.reserve(policy.models.size());
    for (std::size_t l = 0; l < policy.models.size(); ++l) {
        double c = std::max(policy.models[l].predict(history, meta), 0.0);
        if (l == 0) c += q;
        caps.push_back(c);
    }
    return caps;
}

namespace {

struct Pending {
    std::size_t frame;
    double remaining;
};

using Allocator =
    std::function<std::vector<double>(std::size_t epoch, std::size_t start_frame, double q)>;

ScheduleRun run_engine(const FrameTrace& trace, int period_s, const Allocator& alloc,
                       std::size_t warmup_frames) {
    trace.validate();
    if (period_s < 1) throw ConfigError("simulate: S must be >= 1");
    const auto n = trace.sizes.size();
    const double phi = trace.meta.frame_rate_fps;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    ScheduleRun run;
    run.warmup_frames = std::min(warmup_frames, n);
    run.latencies.assign(n, kInf);

    std::deque<Pending> queue;
    const std::size_t s = static_cast<std::size_t>(period_s);
    // Hard cap on drain epochs after the last frame so a trickling queue
    // cannot spin forever; hitting it is reported as a livelock.
    const std::size_t max_intervals = n + std::max<std::size_t>(100 * n, 10000);

    std::vector<double> epoch_caps;
    double epoch_served = 0.0;
    for (std::size_t u = 0;; ++u) {
        if (u % s == 0) {
            if (u > 0 && u >= n && epoch_served == 0.0 && !queue.empty()) {
                run.summary.livelock = true;  // nothing drained for a whole epoch
                break;
            }
            if (u >= n && queue.empty()) break;
            if (u >= max_intervals) {
                run.summary.livelock = true;
                break;
            }
            double q = 0.0;
            for (const auto& p : queue) q += p.remaining;
            run.backlog.push_back(q);
            epoch_caps = alloc(u / s, u, q);
            if (epoch_caps.size() != s)
                throw ConfigError("allocator returned " + std::to_string(epoch_caps.size()) +
                                  " capacities for S=" + std::to_string(period_s));
            epoch_served = 0.0;
        }
        if (u < n) queue.push_back({u, trace.sizes[u]});

        const double budget = epoch_caps[u % s];
        if (budget < 0.0) throw ConfigError("negative capacity at interval " + std::to_string(u));
        run.capacities.push_back(budget);
        double served = 0.0;
        while (!queue.empty() && served < budget) {
            auto& head = queue.front();
            const double d = std::min(head.remaining, budget - served);
            head.remaining -= d;
            served += d;
            if (head.remaining <= 0.0) {
                // Completion tracked in frame-interval units so the critically
                // loaded case yields latency 1/phi without rounding.
                const double done_frames =
                    static_cast<double>(u) + served / budget - static_cast<double>(head.frame);
                run.latencies[head.frame] = done_frames / phi;
                queue.pop_front();
            }
        }
        run.served_bytes += served;
        epoch_served += served;
    }
    for (const auto& p : queue) run.final_backlog += p.remaining;

    // Summary over post-warm-up frames; capacity averaged over the intervals
    // in which frames still arrive (the drain tail past the trace end would
    // otherwise bias the scheduled rate).
    std::vector<double> lat(run.latencies.begin() + static_cast<long>(run.warmup_frames),
                            run.latencies.end());
    if (!lat.empty()) {
        double acc = 0.0, mx = 0.0;
        for (double v : lat) {
            acc += v;
            mx = std::max(mx, v);
        }
        run.summary.frames_counted = lat.size();
        run.summary.mean_latency_s = acc / static_cast<double>(lat.size());
        run.summary.max_latency_s = mx;
        run.summary.p95_latency_s = percentile_nearest_rank(lat, 0.95);
        if (std::isinf(mx)) run.summary.livelock = true;
    }
    const std::size_t cap_end = std::min(run.capacities.size(), n);
    if (cap_end > run.warmup_frames) {
        double acc = 0.0;
        for (std::size_t u = run.warmup_frames; u < cap_end; ++u) acc += run.capacities[u];
        run.summary.mean_rate_bps =
            acc / static_cast<double>(cap_end - run.warmup_frames) * phi * 8.0;
    }
    return run;
}

}  // namespace

ScheduleRun simulate(const FrameTrace& trace, const SlicePolicy& policy) {
    policy.validate();
    const int n_hist = policy.models[0].config.history_n;
    const auto n = trace.sizes.size();
    const std::size_t s = static_cast<std::size_t>(policy.period_s);
    // Warm-up: epochs without N recorded frames of history run at the nominal
    // CBR budget and are excluded from the summary.
    std::size_t warmup = 0;
    while (warmup < static_cast<std::size_t>(n_hist)) warmup += s;
    const double nominal = trace.meta.expected_frame_bytes();

    Allocator alloc = [&](std::size_t /*epoch*/, std::size_t start, double q) {
        if (start < static_cast<std::size_t>(n_hist))
            return std::vector<double>(s, nominal + q / static_cast<double>(s));
        const std::size_t t_end = std::min(start, n);  // drain phase reuses latest history
        std::vector<double> history(static_cast<std::size_t>(n_hist));
        for (int j = 0; j < n_hist; ++j)
            history[static_cast<std::size_t>(j)] = trace.sizes[t_end - 1 - static_cast<std::size_t>(j)];
        return policy.kind == SchedKind::CS ? allocate_cs(policy, history, q, trace.meta)
                                            : allocate_fs(policy, history, q, trace.meta);
    };
    return run_engine(trace, policy.period_s, alloc, warmup);
}

ScheduleRun simulate_fixed(const FrameTrace& trace, std::span<const double> capacities,
                           int period_s) {
    const std::size_t s = static_cast<std::size_t>(period_s);
    Allocator alloc = [&](std::size_t, std::size_t start, double) {
        std::vector<double> caps(s, 0.0);
        for (std::size_t l = 0; l < s; ++l)
            if (start + l < capacities.size()) caps[l] = capacities[start + l];
        return caps;
    };
    return run_engine(trace, period_s, alloc, 0);
}

std::vector<SweepRow> sweep_period(const FrameTrace& trace, SchedKind kind,
                                   std::span<const int> s_set, int history_n, double ps) {
    std::vector<SweepRow> rows;
    for (int s : s_set) {
        SweepRow row;
        row.param = s;
        try {
            auto policy = make_policy(trace, kind, s, history_n, ps);
            row.summary = simulate(trace, policy).summary;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SweepRow> sweep_ps(const FrameTrace& trace, SchedKind kind, int period_s,
                               int history_n, std::span<const double> ps_set) {
    std::vector<SweepRow> rows;
    for (double ps : ps_set) {
        SweepRow row;
        row.param = ps;
        try {
            auto policy = make_policy(trace, kind, period_s, history_n, ps);
            row.summary = simulate(trace, policy).summary;
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace xrtrace
