#ifndef XRTRACE_SLICING_HPP
#define XRTRACE_SLICING_HPP

#include <functional>
#include <span>
#include <vector>

#include "xrtrace/regression.hpp"
#include "xrtrace/trace.hpp"

namespace xrtrace {

enum class SchedKind { CS, FS };

std::string to_string(SchedKind k);
SchedKind sched_kind_from_string(const std::string& s);

// Capacity policy for one slice. CS carries a single predictor with T = S and
// tau = 1; FS carries S next-frame predictors with tau = 1..S.
struct SlicePolicy {
    SchedKind kind = SchedKind::CS;
    int period_s = 1;
    std::vector<PredictorModel> models;

    void validate() const;
};

// Trains the quantile predictors a policy needs on the given trace.
SlicePolicy make_policy(const FrameTrace& training, SchedKind kind, int period_s, int history_n,
                        double ps, bool normalized = false);

struct ScheduleSummary {
    double mean_latency_s = 0.0;
    double p95_latency_s = 0.0;
    double max_latency_s = 0.0;
    double mean_rate_bps = 0.0;  // mean scheduled capacity, warm-up excluded
    std::size_t frames_counted = 0;
    bool livelock = false;
};

struct ScheduleRun {
    std::vector<double> capacities;  // service budget in bytes per frame interval
    std::vector<double> latencies;   // seconds per frame; +inf if never delivered
    std::vector<double> backlog;     // q in bytes at each scheduling epoch
    std::size_t warmup_frames = 0;   // excluded from the summary
    double served_bytes = 0.0;
    double final_backlog = 0.0;
    ScheduleSummary summary;
};

// One CS epoch: every interval gets the T=S prediction plus q/S.
// history is newest-first in bytes; q is the epoch backlog in bytes.
std::vector<double> allocate_cs(const SlicePolicy& policy, std::span<const double> history,
                                double q, const TraceMeta& meta);

// One FS epoch: interval l gets the tau=l next-frame prediction; the whole
// backlog is added to the first interval.
std::vector<double> allocate_fs(const SlicePolicy& policy, std::span<const double> history,
                                double q, const TraceMeta& meta);

// Deterministic fluid FIFO queue. Frame t arrives at t/phi; during interval u
// the server drains capacities[u] bytes spread evenly over the interval.
// Latency is the completion time of a frame's last byte minus its arrival.
// Epoch backlog is measured at the scheduling instant, before that epoch's
// first frame arrives. After the last frame the epoch loop keeps draining
// until the queue empties; a queue that stops draining entirely is flagged as
// a livelock and the run completes with unbounded latencies.
ScheduleRun simulate(const FrameTrace& trace, const SlicePolicy& policy);

// Same queue driven by an explicit per-interval budget (may extend past the
// trace to drain the queue). Used by tests and capacity replay.
ScheduleRun simulate_fixed(const FrameTrace& trace, std::span<const double> capacities,
                           int period_s = 1);

struct SweepRow {
    double param = 0.0;  // S or p_s
    ScheduleSummary summary;
    bool failed = false;
    std::string error;
};

std::vector<SweepRow> sweep_period(const FrameTrace& trace, SchedKind kind,
                                   std::span<const int> s_set, int history_n, double ps);
std::vector<SweepRow> sweep_ps(const FrameTrace& trace, SchedKind kind, int period_s,
                               int history_n, std::span<const double> ps_set);

}  // namespace xrtrace

#endif
