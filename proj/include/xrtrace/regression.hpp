#ifndef XRTRACE_REGRESSION_HPP
#define XRTRACE_REGRESSION_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrtrace/stats.hpp"
#include "xrtrace/trace.hpp"

namespace xrtrace {

enum class Method { ols, quantile, huber };
enum class Scope { GM, CM, CRM };

std::string to_string(Method m);
std::string to_string(Scope s);
Method method_from_string(const std::string& s);
Scope scope_from_string(const std::string& s);

// Hyperparameters of one linear frame-size predictor.
struct PredictorConfig {
    int history_n = 0;    // N: past samples used as features
    int horizon_t = 1;    // T: width of the forward average being predicted
    int lookahead_tau = 1;
    Method method = Method::ols;
    double ps = 0.0;      // quantile level, required iff method == quantile
    double delta = 0.0;   // huber threshold in bytes; 0 = mean(|target|)/4 default

    void validate() const;
    std::size_t min_trace_length() const;
};

// Supervised dataset: one row per admissible time index. features[i] holds
// the N most recent frame sizes, newest first; targets[i] is the T-frame
// forward average tau frames ahead.
struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<double> targets;

    std::size_t rows() const { return targets.size(); }
};

struct PredictorModel {
    PredictorConfig config;
    std::vector<double> theta;  // length N+1, intercept first
    bool normalized = false;    // theta in units of the expected frame size
    Scope scope = Scope::CRM;
    std::vector<std::string> trained_on;

    // history is newest-first, in bytes; result in bytes.
    double predict(std::span<const double> history, const TraceMeta& meta) const;
};

struct ResidualSeries {
    PredictorConfig config;
    std::vector<double> values;  // bytes (or dimensionless when relative)
};

Dataset build_dataset(const FrameTrace& trace, const PredictorConfig& config);

// Least-squares fit with intercept. Near-collinear histories are common in
// quasi-CBR traces, so a tiny ridge fallback (lambda = 1e-10 * scale^2) kicks
// in on rank deficiency unless disabled, in which case SingularityError is
// thrown.
std::vector<double> fit_ols(const Dataset& data, bool ridge_fallback = true);

// Pinball-loss fit via iteratively reweighted least squares with a
// geometrically decayed smoothing epsilon; 500-iteration budget, convergence
// when theta moves by < 1e-9 relative. The intercept-only case returns the
// lower order statistic at rank ceil(ps * n).
std::vector<double> fit_quantile(const Dataset& data, double ps);

// Huber fit via IRLS; quadratic within delta, linear beyond.
std::vector<double> fit_huber(const Dataset& data, double delta);

double pinball_loss(const Dataset& data, std::span<const double> theta, double ps);

// Build dataset + dispatch on config.method. When normalized, the trace is
// rescaled to units of the expected frame size before fitting.
PredictorModel fit_model(const FrameTrace& trace, const PredictorConfig& config,
                         bool normalized = false);

// Sizes rescaled to units of the expected frame size R/(8 phi).
FrameTrace normalize(const FrameTrace& trace);

// Maps a normalized weight vector back to bytes: the intercept scales by the
// expected frame size, slope weights are unchanged in effect.
std::vector<double> denormalize_theta(std::span<const double> theta_norm, double target_rate_bps,
                                      double frame_rate_fps);

// GM: one model pooled over all (normalized) traces; CM: one per content
// label; CRM: one per trace. Groups too short to fit are skipped with a
// diagnostic.
std::vector<PredictorModel> fit_scoped(std::span<const FrameTrace> corpus, Scope scope,
                                       const PredictorConfig& config,
                                       std::vector<std::string>* diagnostics = nullptr);

// Prediction errors w = target - prediction, aligned as in build_dataset.
// eval_config may change tau/T but must keep the model's N.
ResidualSeries residuals(const PredictorModel& model, const FrameTrace& trace,
                         const PredictorConfig& eval_config);
ResidualSeries residuals(const PredictorModel& model, const FrameTrace& trace);

// Residuals divided by the expected frame size (dimensionless).
std::vector<double> relative_residuals(const PredictorModel& model, const FrameTrace& trace);

// Complementary CDF of a residual series: tail_prob[i] = P(X > support[i]).
struct Ccdf {
    std::vector<double> support;
    std::vector<double> tail_prob;
};
Ccdf residual_ccdf(std::span<const double> series);

AcfResult residual_acf(std::span<const double> series, int max_lag);

// std(w) for a model refit at every (N, tau) grid point; rows index N_set,
// columns index tau_set.
std::vector<std::vector<double>> residual_std_grid(const FrameTrace& trace,
                                                   const PredictorConfig& base,
                                                   std::span<const int> n_set,
                                                   std::span<const int> tau_set);

// Model files: '#' header (method, N, T, tau, ps/delta, scope, normalized,
// trained_on), then one theta value per line at full precision.
void write_model(const PredictorModel& model, const std::filesystem::path& path);
PredictorModel read_model(const std::filesystem::path& path);

}  // namespace xrtrace

#endif
