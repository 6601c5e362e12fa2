#ifndef XRTRACE_TRACE_HPP
#define XRTRACE_TRACE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xrtrace {

// Stream-level metadata: nominal bitrate R [bit/s] and frame rate phi [FPS].
struct TraceMeta {
    std::string content_label;
    double target_rate_bps = 0.0;   // R
    double frame_rate_fps = 0.0;    // phi
    std::string source_id;

    // Nominal per-frame payload R / (8 phi), in bytes.
    double expected_frame_bytes() const { return target_rate_bps / (8.0 * frame_rate_fps); }

    void validate() const;
};

// Per-frame video payload sizes in bytes, one entry per frame interval 1/phi.
// Frame timestamps are nominal (t/phi); measured arrival times from ingestion
// are kept as optional metadata only.
struct FrameTrace {
    TraceMeta meta;
    std::vector<double> sizes;  // bytes, strictly positive
    std::optional<std::vector<double>> measured_ts;  // seconds, from capture

    std::size_t length() const { return sizes.size(); }
    void validate() const;
};

// Output of a forward moving average over T frames.
struct WindowedSeries {
    std::vector<double> values;
    int window_t = 1;
    int start_offset = 0;
};

// Forward moving average: out[t] = mean(sizes[t .. t+T-1]).
// Trailing partial windows are dropped, so the output has len - T + 1 entries.
WindowedSeries windowed_mean(const FrameTrace& trace, int window_t);

// First difference: out[k] = sizes[k+1] - sizes[k].
std::vector<double> diff_series(const FrameTrace& trace);

// Synthetic quasi-CBR trace for self-contained tests.
//
// Sizes are generated as F(t) = mu + X(t) with mu = R/(8 phi) and X a
// stationary AR(1) process X(t) = rho X(t-1) + e(t), rho = 1 + 2 lag1_coeff.
// With that mapping the frame increments dF(t) = F(t) - F(t-1) have an
// analytic lag-1 autocorrelation of exactly lag1_coeff, mimicking the
// negative frame-to-frame correlation of the measured streams. noise_std is
// the marginal standard deviation of the frame size. Stationarity requires
// lag1_coeff in (-1, 0); any other value raises StabilityError (noise_std = 0
// is exempt and yields an exactly constant trace).
FrameTrace synth_trace(const TraceMeta& meta, std::size_t n_frames, double noise_std,
                       double lag1_coeff, std::uint64_t seed);

}  // namespace xrtrace

#endif
