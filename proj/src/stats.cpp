#include "xrtrace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xrtrace/errors.hpp"

namespace xrtrace {

double Ecdf::operator()(double x) const {
    auto it = std::upper_bound(support.begin(), support.end(), x);
    if (it == support.begin()) return 0.0;
    return cum_prob[static_cast<std::size_t>(it - support.begin()) - 1];
}

double percentile_nearest_rank(std::vector<double> samples, double p) {
    if (samples.empty()) throw InsufficientDataError("percentile: empty sample");
    if (!(p > 0.0 && p <= 1.0))
        throw RangeError("percentile: p=" + std::to_string(p) + " outside (0, 1]");
    std::sort(samples.begin(), samples.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
    rank = std::max<std::size_t>(rank, 1);
    return samples[rank - 1];
}

std::vector<double> rate_series(const FrameTrace& trace, int window_t) {
    const double phi = trace.meta.frame_rate_fps;
    auto w = windowed_mean(trace, window_t);
    for (auto& v : w.values) v *= phi * 8.0;
    return std::move(w.values);
}

Ecdf empirical_cdf(std::span<const double> samples) {
    if (samples.empty()) throw InsufficientDataError("empirical_cdf: empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    Ecdf cdf;
    const double n = static_cast<double>(sorted.size());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        cdf.support.push_back(sorted[i]);
        cdf.cum_prob.push_back(static_cast<double>(j) / n);
        i = j;
    }
    return cdf;
}

OverflowReport overflow_report(const FrameTrace& trace, int window_t) {
    auto rates = rate_series(trace, window_t);
    const double target = trace.meta.target_rate_bps;
    std::vector<double> overflow(rates.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        overflow[i] = rates[i] - target;
        mean += overflow[i];
    }
    mean /= static_cast<double>(overflow.size());
    double var = 0.0;
    for (double v : overflow) var += (v - mean) * (v - mean);
    var /= static_cast<double>(overflow.size());

    OverflowReport rep;
    rep.window_t = window_t;
    rep.std_dev = std::sqrt(var);
    rep.p95 = percentile_nearest_rank(overflow, 0.95);
    rep.p99 = percentile_nearest_rank(overflow, 0.99);
    return rep;
}

AcfResult autocorr(std::span<const double> series, int max_lag) {
    const auto n = series.size();
    if (max_lag < 0) throw RangeError("autocorr: max_lag must be >= 0");
    if (n <= static_cast<std::size_t>(max_lag))
        throw InsufficientDataError("autocorr: series length " + std::to_string(n) +
                                    " must exceed max_lag " + std::to_string(max_lag));
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (double v : series) denom += (v - mean) * (v - mean);
    if (denom == 0.0) throw DegenerateSeriesError("autocorr: series has zero variance");

    AcfResult res;
    res.values.resize(static_cast<std::size_t>(max_lag) + 1);
    for (int k = 0; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t)
            num += (series[t] - mean) * (series[t + k] - mean);
        res.values[static_cast<std::size_t>(k)] = num / denom;
    }
    return res;
}

RollingAcfResult rolling_autocorr(std::span<const double> series, int window, int shift,
                                  int max_lag) {
    if (window <= max_lag)
        throw RangeError("rolling_autocorr: window " + std::to_string(window) +
                         " must exceed max_lag " + std::to_string(max_lag));
    if (shift < 1) throw RangeError("rolling_autocorr: shift must be >= 1");
    if (static_cast<std::size_t>(window) > series.size())
        throw InsufficientDataError("rolling_autocorr: window " + std::to_string(window) +
                                    " exceeds series length " + std::to_string(series.size()));
    RollingAcfResult res;
    res.window = window;
    res.shift = shift;
    const std::size_t n_rows = (series.size() - window) / static_cast<std::size_t>(shift) + 1;
    for (std::size_t i = 0; i < n_rows; ++i) {
        auto sub = series.subspan(i * static_cast<std::size_t>(shift),
                                  static_cast<std::size_t>(window));
        try {
            res.rows.push_back(autocorr(sub, max_lag).values);
            res.degenerate.push_back(false);
        } catch (const DegenerateSeriesError&) {
            res.rows.emplace_back(static_cast<std::size_t>(max_lag) + 1,
                                  std::numeric_limits<double>::quiet_NaN());
            res.degenerate.push_back(true);
        }
    }
    return res;
}

}  // namespace xrtrace
