#include "xrtrace/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xrtrace/errors.hpp"

namespace xrtrace {

void TraceMeta::validate() const {
    if (!(target_rate_bps > 0.0))
        throw RangeError("TraceMeta: target rate R must be positive, got " +
                         std::to_string(target_rate_bps));
    if (!(frame_rate_fps > 0.0))
        throw RangeError("TraceMeta: frame rate phi must be positive, got " +
                         std::to_string(frame_rate_fps));
    double ef = expected_frame_bytes();
    if (!std::isfinite(ef) || !(ef > 0.0))
        throw RangeError("TraceMeta: expected frame size R/(8 phi) is not finite and positive");
}

void FrameTrace::validate() const {
    meta.validate();
    if (sizes.empty()) throw InsufficientDataError("FrameTrace: empty size sequence");
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (!(sizes[i] > 0.0))
            throw RangeError("FrameTrace: non-positive size " + std::to_string(sizes[i]) +
                             " at frame " + std::to_string(i));
}

WindowedSeries windowed_mean(const FrameTrace& trace, int window_t) {
    const auto len = trace.sizes.size();
    if (window_t < 1 || static_cast<std::size_t>(window_t) > len)
        throw RangeError("windowed_mean: T=" + std::to_string(window_t) +
                         " outside [1, " + std::to_string(len) + "]");
    WindowedSeries out;
    out.window_t = window_t;
    out.values.reserve(len - window_t + 1);
    if (window_t == 1) {
        out.values = trace.sizes;  // bit-exact identity
        return out;
    }
    double acc = 0.0;
    for (int i = 0; i < window_t; ++i) acc += trace.sizes[i];
    out.values.push_back(acc / window_t);
    for (std::size_t t = 1; t + window_t <= len; ++t) {
        acc += trace.sizes[t + window_t - 1] - trace.sizes[t - 1];
        out.values.push_back(acc / window_t);
    }
    return out;
}

std::vector<double> diff_series(const FrameTrace& trace) {
    if (trace.sizes.size() < 2)
        throw InsufficientDataError("diff_series: need at least 2 frames, got " +
                                    std::to_string(trace.sizes.size()));
    std::vector<double> d(trace.sizes.size() - 1);
    for (std::size_t k = 0; k + 1 < trace.sizes.size(); ++k)
        d[k] = trace.sizes[k + 1] - trace.sizes[k];
    return d;
}

FrameTrace synth_trace(const TraceMeta& meta, std::size_t n_frames, double noise_std,
                       double lag1_coeff, std::uint64_t seed) {
    meta.validate();
    if (n_frames < 1) throw RangeError("synth_trace: n_frames must be >= 1");
    if (noise_std < 0.0) throw RangeError("synth_trace: noise_std must be >= 0");

    const double mu = meta.expected_frame_bytes();
    FrameTrace trace;
    trace.meta = meta;
    trace.sizes.resize(n_frames, mu);
    if (noise_std == 0.0) return trace;

    const double rho = 1.0 + 2.0 * lag1_coeff;
    if (!(rho > -1.0 && rho < 1.0))
        throw StabilityError("synth_trace: lag1_coeff=" + std::to_string(lag1_coeff) +
                             " maps to AR(1) coefficient " + std::to_string(rho) +
                             ", outside (-1, 1)");

    const double sigma_e = noise_std * std::sqrt(1.0 - rho * rho);
    const double floor = std::max(1.0, 1e-6 * mu);  // sizes stay strictly positive
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    double x = noise_std * gauss(rng);  // stationary start
    for (std::size_t t = 0; t < n_frames; ++t) {
        if (t > 0) x = rho * x + sigma_e * gauss(rng);
        trace.sizes[t] = std::max(mu + x, floor);
    }
    return trace;
}

}  // namespace xrtrace
