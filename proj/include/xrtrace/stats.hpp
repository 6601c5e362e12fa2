#ifndef XRTRACE_STATS_HPP
#define XRTRACE_STATS_HPP

#include <span>
#include <vector>

#include "xrtrace/trace.hpp"

namespace xrtrace {

// Right-continuous empirical CDF: P(X <= support[i]) = cum_prob[i].
struct Ecdf {
    std::vector<double> support;   // sorted, unique
    std::vector<double> cum_prob;  // non-decreasing, ends at 1

    double operator()(double x) const;
};

// Overflow statistics of the moving-average rate against the nominal R.
struct OverflowReport {
    int window_t = 1;
    double std_dev = 0.0;  // bit/s
    double p95 = 0.0;      // bit/s
    double p99 = 0.0;      // bit/s
};

// Sample autocorrelation, values[k] for lag k = 0..max_lag; values[0] = 1.
struct AcfResult {
    std::vector<double> values;
};

struct RollingAcfResult {
    std::vector<std::vector<double>> rows;  // one ACF per window
    std::vector<bool> degenerate;           // zero-variance windows (rows hold NaN)
    int window = 0;
    int shift = 0;
};

// Nearest-rank percentile: the ceil(p*n)-th order statistic, p in (0, 1].
double percentile_nearest_rank(std::vector<double> samples, double p);

// Moving-average bitrate in bit/s: windowed_mean(trace, T) * phi * 8.
std::vector<double> rate_series(const FrameTrace& trace, int window_t);

Ecdf empirical_cdf(std::span<const double> samples);

OverflowReport overflow_report(const FrameTrace& trace, int window_t);

// Biased sample ACF: values[k] = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2.
AcfResult autocorr(std::span<const double> series, int max_lag);

// ACF per rolling window; row i covers series[i*shift .. i*shift + window).
// Zero-variance windows are flagged and filled with NaN instead of failing.
RollingAcfResult rolling_autocorr(std::span<const double> series, int window, int shift,
                                  int max_lag);

}  // namespace xrtrace

#endif
