#include "xrtrace/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "xrtrace/errors.hpp"
#include "xrtrace/ingest.hpp"

namespace xrtrace {

std::string to_string(Method m) {
    switch (m) {
        case Method::ols: return "ols";
        case Method::quantile: return "quantile";
        case Method::huber: return "huber";
    }
    return "?";
}

std::string to_string(Scope s) {
    switch (s) {
        case Scope::GM: return "GM";
        case Scope::CM: return "CM";
        case Scope::CRM: return "CRM";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "ols") return Method::ols;
    if (s == "quantile") return Method::quantile;
    if (s == "huber") return Method::huber;
    throw ConfigError("unknown method '" + s + "'");
}

Scope scope_from_string(const std::string& s) {
    if (s == "GM" || s == "gm") return Scope::GM;
    if (s == "CM" || s == "cm") return Scope::CM;
    if (s == "CRM" || s == "crm") return Scope::CRM;
    throw ConfigError("unknown scope '" + s + "'");
}

void PredictorConfig::validate() const {
    if (history_n < 0) throw ConfigError("N must be >= 0");
    if (horizon_t < 1) throw ConfigError("T must be >= 1");
    if (lookahead_tau < 1) throw ConfigError("tau must be >= 1");
    if (method == Method::quantile) {
        if (!(ps > 0.0 && ps < 1.0))
            throw ConfigError("quantile method needs p_s in (0, 1), got " + std::to_string(ps));
    } else if (ps != 0.0) {
        throw ConfigError("p_s is only meaningful for the quantile method");
    }
    if (method != Method::huber && delta != 0.0)
        throw ConfigError("delta is only meaningful for the huber method");
    if (method == Method::huber && delta < 0.0)
        throw ConfigError("huber delta must be >= 0 (0 selects the mean(|F|)/4 default)");
}

std::size_t PredictorConfig::min_trace_length() const {
    return static_cast<std::size_t>(history_n + lookahead_tau + horizon_t);
}

Dataset build_dataset(const FrameTrace& trace, const PredictorConfig& config) {
    config.validate();
    const auto len = static_cast<long>(trace.sizes.size());
    const long n = config.history_n;
    const long tau = config.lookahead_tau;
    const long t_avg = config.horizon_t;
    if (len < static_cast<long>(config.min_trace_length()))
        throw InsufficientDataError("build_dataset: trace length " + std::to_string(len) +
                                    " below minimum " +
                                    std::to_string(config.min_trace_length()) +
                                    " for N=" + std::to_string(n) + ", tau=" +
                                    std::to_string(tau) + ", T=" + std::to_string(t_avg));
    Dataset data;
    // Rows exist for t in [N-1, len - tau - T]; t = -1 is legal when N = 0.
    for (long t = n - 1; t <= len - tau - t_avg; ++t) {
        std::vector<double> row(static_cast<std::size_t>(n));
        for (long j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = trace.sizes[static_cast<std::size_t>(t - j)];
        double target = 0.0;
        for (long i = 0; i < t_avg; ++i) target += trace.sizes[static_cast<std::size_t>(t + tau + i)];
        data.features.push_back(std::move(row));
        data.targets.push_back(target / static_cast<double>(t_avg));
    }
    return data;
}

namespace {

// Design matrix with the intercept column first.
Eigen::MatrixXd design_matrix(const Dataset& data) {
    const auto rows = static_cast<Eigen::Index>(data.rows());
    const auto n = rows > 0 ? static_cast<Eigen::Index>(data.features[0].size()) : 0;
    Eigen::MatrixXd x(rows, n + 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
        x(i, 0) = 1.0;
        const auto& f = data.features[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < n; ++j) x(i, j + 1) = f[static_cast<std::size_t>(j)];
    }
    return x;
}

Eigen::VectorXd target_vector(const Dataset& data) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.rows()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = data.targets[static_cast<std::size_t>(i)];
    return y;
}

void check_fit_inputs(const Dataset& data) {
    if (data.rows() == 0) throw InsufficientDataError("fit: empty dataset");
    const auto cols = data.features[0].size() + 1;
    if (data.rows() < cols)
        throw InsufficientDataError("fit: " + std::to_string(data.rows()) +
                                    " rows for " + std::to_string(cols) + " parameters");
}

// Weighted least squares through QR of sqrt(W) X; falls back to a tiny ridge
// when the weighted design loses rank.
Eigen::VectorXd solve_wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& sqrt_w, bool ridge_fallback,
                          bool* used_ridge = nullptr) {
    Eigen::MatrixXd xw = sqrt_w.asDiagonal() * x;
    Eigen::VectorXd yw = sqrt_w.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() == x.cols()) {
        if (used_ridge) *used_ridge = false;
        return qr.solve(yw);
    }
    if (!ridge_fallback)
        throw SingularityError("fit: design matrix is rank deficient (rank " +
                               std::to_string(qr.rank()) + " of " + std::to_string(x.cols()) +
                               ") and the ridge fallback is disabled");
    const double scale2 = xw.squaredNorm() / static_cast<double>(xw.size());
    const double lambda = 1e-10 * scale2;
    Eigen::MatrixXd gram = xw.transpose() * xw;
    gram.diagonal().array() += lambda;
    if (used_ridge) *used_ridge = true;
    return gram.ldlt().solve(xw.transpose() * yw);
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

double quantile_lower(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

double pinball(double r, double p) { return r * (p - (r < 0.0 ? 1.0 : 0.0)); }

}  // namespace

double pinball_loss(const Dataset& data, std::span<const double> theta, double ps) {
    Eigen::MatrixXd x = design_matrix(data);
    Eigen::VectorXd y = target_vector(data);
    Eigen::Map<const Eigen::VectorXd> th(theta.data(), static_cast<Eigen::Index>(theta.size()));
    Eigen::VectorXd r = y - x * th;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) loss += pinball(r(i), ps);
    return loss;
}

std::vector<double> fit_ols(const Dataset& data, bool ridge_fallback) {
    check_fit_inputs(data);
    Eigen::MatrixXd x = design_matrix(data);
    Eigen::VectorXd y = target_vector(data);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(x.rows());
    return to_std(solve_wls(x, y, w, ridge_fallback));
}

std::vector<double> fit_quantile(const Dataset& data, double ps) {
    check_fit_inputs(data);
    if (!(ps > 0.0 && ps < 1.0))
        throw ConfigError("fit_quantile: p_s must be in (0, 1), got " + std::to_string(ps));

    // Intercept-only: the documented tie-breaking convention, exactly.
    if (data.features[0].empty())
        return {quantile_lower(data.targets, ps)};

    Eigen::MatrixXd x = design_matrix(data);
    Eigen::VectorXd y = target_vector(data);
    const Eigen::Index n = y.size();

    Eigen::VectorXd theta =
        solve_wls(x, y, Eigen::VectorXd::Ones(n), /*ridge_fallback=*/true);

    const double scale = std::max(y.cwiseAbs().mean(), 1e-300);
    const double eps_floor = 1e-13 * scale;
    double eps = 1e-2 * scale;

    auto total_loss = [&](const Eigen::VectorXd& th) {
        Eigen::VectorXd r = y - x * th;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) loss += pinball(r(i), ps);
        return loss;
    };

    // Snap to the nearest vertex of the pinball objective: an optimum
    // interpolates d active rows, and IRLS at the epsilon floor only gets
    // O(sqrt(eps)) close to it. Re-solving on the d smallest-residual rows
    // recovers the exact corner when it does better.
    auto snap_once = [&](const Eigen::VectorXd& th) {
        const Eigen::Index d = x.cols();
        Eigen::VectorXd r = y - x * th;
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::nth_element(order.begin(), order.begin() + d, order.end(),
                         [&](Eigen::Index a, Eigen::Index b) {
                             return std::abs(r(a)) < std::abs(r(b));
                         });
        Eigen::MatrixXd a(d, d);
        Eigen::VectorXd b(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            a.row(i) = x.row(order[static_cast<std::size_t>(i)]);
            b(i) = y(order[static_cast<std::size_t>(i)]);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < d) return th;
        Eigen::VectorXd candidate = qr.solve(b);
        return total_loss(candidate) <= total_loss(th) ? candidate : th;
    };
    auto polish = [&](Eigen::VectorXd th) {
        if (n < x.cols()) return th;
        // Iterate the snap to a fixed point: each accepted move changes the
        // active set, so this walks vertex to vertex while the loss drops.
        double loss = total_loss(th);
        for (int round = 0; round < 20; ++round) {
            Eigen::VectorXd next = snap_once(th);
            const double next_loss = total_loss(next);
            if (next_loss >= loss * (1.0 - 1e-14)) break;
            th = next;
            loss = next_loss;
        }
        return th;
    };

    constexpr int kBudget = 500;
    // At the epsilon floor the reweighted system is nearly singular and the
    // iterates can jitter indefinitely; cap the floor phase and rely on the
    // best-loss iterate plus the vertex polish for the final answer.
    constexpr int kFloorBudget = 80;
    double best_loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = theta;
    int stagnant = 0;
    int floor_iters = 0;
    for (int iter = 0; iter < kBudget; ++iter) {
        Eigen::VectorXd r = y - x * theta;
        double loss = 0.0;
        Eigen::VectorXd sqrt_w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            loss += pinball(r(i), ps);
            const double q = r(i) >= 0.0 ? ps : 1.0 - ps;
            sqrt_w(i) = std::sqrt(q / std::max(std::abs(r(i)), eps));
        }
        if (loss < best_loss - 1e-9 * std::max(best_loss, 1e-300)) {
            best_loss = loss;
            best_theta = theta;
            stagnant = 0;
        } else {
            if (loss < best_loss) {
                best_loss = loss;
                best_theta = theta;
            }
            ++stagnant;
        }
        Eigen::VectorXd next = solve_wls(x, y, sqrt_w, /*ridge_fallback=*/true);
        const double move = (next - theta).norm();
        const double ref = std::max(theta.norm(), 1e-300);
        theta = next;
        if (eps <= eps_floor && move < 1e-9 * ref) {
            if (total_loss(theta) < best_loss) best_theta = theta;
            return to_std(polish(best_theta));
        }
        if (eps <= eps_floor && (stagnant > 20 || ++floor_iters > kFloorBudget))
            return to_std(polish(best_theta));
        eps = std::max(eps * 0.7, eps_floor);
    }
    throw ConvergenceError("fit_quantile: no convergence within 500 iterations", best_loss);
}

std::vector<double> fit_huber(const Dataset& data, double delta) {
    check_fit_inputs(data);
    if (!(delta > 0.0)) throw ConfigError("fit_huber: delta must be > 0");

    Eigen::MatrixXd x = design_matrix(data);
    Eigen::VectorXd y = target_vector(data);
    const Eigen::Index n = y.size();

    Eigen::VectorXd theta =
        solve_wls(x, y, Eigen::VectorXd::Ones(n), /*ridge_fallback=*/true);
    constexpr int kBudget = 200;
    for (int iter = 0; iter < kBudget; ++iter) {
        Eigen::VectorXd r = y - x * theta;
        Eigen::VectorXd sqrt_w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = std::abs(r(i));
            sqrt_w(i) = a <= delta ? 1.0 : std::sqrt(delta / a);
        }
        Eigen::VectorXd next = solve_wls(x, y, sqrt_w, /*ridge_fallback=*/true);
        const double move = (next - theta).norm();
        const double ref = std::max(theta.norm(), 1e-300);
        theta = next;
        if (move < 1e-9 * ref) return to_std(theta);
    }
    Eigen::VectorXd r = y - x * theta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = std::abs(r(i));
        loss += a <= delta ? 0.5 * a * a : delta * (a - 0.5 * delta);
    }
    throw ConvergenceError("fit_huber: no convergence within 200 iterations", loss);
}

double PredictorModel::predict(std::span<const double> history, const TraceMeta& meta) const {
    const auto n = static_cast<std::size_t>(config.history_n);
    if (history.size() < n)
        throw ConfigError("predict: need " + std::to_string(n) + " history samples, got " +
                          std::to_string(history.size()));
    if (theta.size() != n + 1)
        throw ConfigError("predict: theta length " + std::to_string(theta.size()) +
                          " does not match N+1 = " + std::to_string(n + 1));
    // For a normalized model only the intercept carries units; slope weights
    // apply to raw bytes unchanged.
    double pred = normalized ? theta[0] * meta.expected_frame_bytes() : theta[0];
    for (std::size_t j = 0; j < n; ++j) pred += theta[j + 1] * history[j];
    return pred;
}

FrameTrace normalize(const FrameTrace& trace) {
    trace.validate();
    const double scale = trace.meta.expected_frame_bytes();
    FrameTrace out = trace;
    for (auto& s : out.sizes) s /= scale;
    return out;
}

std::vector<double> denormalize_theta(std::span<const double> theta_norm, double target_rate_bps,
                                      double frame_rate_fps) {
    TraceMeta meta{"", target_rate_bps, frame_rate_fps, ""};
    meta.validate();
    if (theta_norm.empty()) throw ConfigError("denormalize_theta: empty theta");
    std::vector<double> theta(theta_norm.begin(), theta_norm.end());
    theta[0] *= meta.expected_frame_bytes();
    return theta;
}

namespace {

std::vector<double> dispatch_fit(const Dataset& data, const PredictorConfig& config) {
    switch (config.method) {
        case Method::ols:
            return fit_ols(data);
        case Method::quantile:
            return fit_quantile(data, config.ps);
        case Method::huber: {
            double delta = config.delta;
            if (delta == 0.0) {
                double acc = 0.0;
                for (double t : data.targets) acc += std::abs(t);
                delta = acc / static_cast<double>(data.rows()) / 4.0;
            }
            return fit_huber(data, delta);
        }
    }
    throw ConfigError("unknown method");
}

}  // namespace

PredictorModel fit_model(const FrameTrace& trace, const PredictorConfig& config,
                         bool normalized) {
    config.validate();
    PredictorModel model;
    model.config = config;
    model.normalized = normalized;
    model.scope = Scope::CRM;
    model.trained_on = {trace.meta.source_id};
    auto data = normalized ? build_dataset(normalize(trace), config)
                           : build_dataset(trace, config);
    model.theta = dispatch_fit(data, config);
    return model;
}

std::vector<PredictorModel> fit_scoped(std::span<const FrameTrace> corpus, Scope scope,
                                       const PredictorConfig& config,
                                       std::vector<std::string>* diagnostics) {
    config.validate();
    if (corpus.empty()) throw InsufficientDataError("fit_scoped: empty corpus");

    // Group key: "" for GM (one pool), content label for CM, source id for CRM.
    std::map<std::string, std::pair<Dataset, std::vector<std::string>>> groups;
    for (const auto& trace : corpus) {
        std::string key;
        if (scope == Scope::CM) {
            if (trace.meta.content_label.empty())
                throw ConfigError("fit_scoped: CM requires content labels, trace '" +
                                  trace.meta.source_id + "' has none");
            key = trace.meta.content_label;
        } else if (scope == Scope::CRM) {
            key = trace.meta.source_id;
        }
        auto& [pool, sources] = groups[key];
        try {
            auto data = build_dataset(normalize(trace), config);
            pool.features.insert(pool.features.end(), data.features.begin(), data.features.end());
            pool.targets.insert(pool.targets.end(), data.targets.begin(), data.targets.end());
            sources.push_back(trace.meta.source_id);
        } catch (const InsufficientDataError& e) {
            if (diagnostics)
                diagnostics->push_back("skipping trace '" + trace.meta.source_id +
                                       "' in group '" + key + "': " + e.what());
        }
    }

    std::vector<PredictorModel> models;
    for (auto& [key, entry] : groups) {
        auto& [pool, sources] = entry;
        if (pool.rows() == 0) {
            if (diagnostics)
                diagnostics->push_back("group '" + key + "' empty after filtering, skipped");
            continue;
        }
        PredictorModel model;
        model.config = config;
        model.normalized = true;
        model.scope = scope;
        model.trained_on = sources;
        model.theta = dispatch_fit(pool, config);
        models.push_back(std::move(model));
    }
    return models;
}

ResidualSeries residuals(const PredictorModel& model, const FrameTrace& trace,
                         const PredictorConfig& eval_config) {
    if (eval_config.history_n != model.config.history_n)
        throw ConfigError("residuals: evaluation N=" + std::to_string(eval_config.history_n) +
                          " differs from model N=" + std::to_string(model.config.history_n));
    auto data = build_dataset(trace, eval_config);
    ResidualSeries out;
    out.config = eval_config;
    out.values.reserve(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i)
        out.values.push_back(data.targets[i] - model.predict(data.features[i], trace.meta));
    return out;
}

ResidualSeries residuals(const PredictorModel& model, const FrameTrace& trace) {
    return residuals(model, trace, model.config);
}

std::vector<double> relative_residuals(const PredictorModel& model, const FrameTrace& trace) {
    auto res = residuals(model, trace);
    const double scale = trace.meta.expected_frame_bytes();
    for (auto& v : res.values) v /= scale;
    return std::move(res.values);
}

Ccdf residual_ccdf(std::span<const double> series) {
    auto cdf = empirical_cdf(series);
    Ccdf out;
    out.support = std::move(cdf.support);
    out.tail_prob.reserve(cdf.cum_prob.size());
    for (double p : cdf.cum_prob) out.tail_prob.push_back(1.0 - p);
    return out;
}

AcfResult residual_acf(std::span<const double> series, int max_lag) {
    return autocorr(series, max_lag);
}

std::vector<std::vector<double>> residual_std_grid(const FrameTrace& trace,
                                                   const PredictorConfig& base,
                                                   std::span<const int> n_set,
                                                   std::span<const int> tau_set) {
    if (n_set.empty() || tau_set.empty())
        throw ConfigError("residual_std_grid: empty N or tau grid");
    std::vector<std::vector<double>> grid;
    for (int n : n_set) {
        std::vector<double> row;
        for (int tau : tau_set) {
            PredictorConfig cfg = base;
            cfg.history_n = n;
            cfg.lookahead_tau = tau;
            auto model = fit_model(trace, cfg);
            auto res = residuals(model, trace);
            double mean = std::accumulate(res.values.begin(), res.values.end(), 0.0) /
                          static_cast<double>(res.values.size());
            double var = 0.0;
            for (double v : res.values) var += (v - mean) * (v - mean);
            var /= static_cast<double>(res.values.size());
            row.push_back(std::sqrt(var));
        }
        grid.push_back(std::move(row));
    }
    return grid;
}

void write_model(const PredictorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path.string());
    out << "# method=" << to_string(model.config.method) << "\n";
    out << "# N=" << model.config.history_n << "\n";
    out << "# T=" << model.config.horizon_t << "\n";
    out << "# tau=" << model.config.lookahead_tau << "\n";
    if (model.config.method == Method::quantile)
        out << "# ps=" << format_double(model.config.ps) << "\n";
    if (model.config.method == Method::huber)
        out << "# delta=" << format_double(model.config.delta) << "\n";
    out << "# scope=" << to_string(model.scope) << "\n";
    out << "# normalized=" << (model.normalized ? 1 : 0) << "\n";
    out << "# trained_on=";
    for (std::size_t i = 0; i < model.trained_on.size(); ++i)
        out << (i ? ";" : "") << model.trained_on[i];
    out << "\n";
    for (double v : model.theta) out << format_double(v) << "\n";
    if (!out) throw Error("write failed: " + path.string());
}

PredictorModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path.string());
    PredictorModel model;
    model.config.ps = 0.0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.erase(body.begin());
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            std::string key = body.substr(0, eq);
            std::string val = body.substr(eq + 1);
            try {
                if (key == "method") model.config.method = method_from_string(val);
                else if (key == "N") model.config.history_n = std::stoi(val);
                else if (key == "T") model.config.horizon_t = std::stoi(val);
                else if (key == "tau") model.config.lookahead_tau = std::stoi(val);
                else if (key == "ps") model.config.ps = std::stod(val);
                else if (key == "delta") model.config.delta = std::stod(val);
                else if (key == "scope") model.scope = scope_from_string(val);
                else if (key == "normalized") model.normalized = val == "1" || val == "true";
                else if (key == "trained_on") {
                    std::stringstream ss(val);
                    std::string item;
                    while (std::getline(ss, item, ';'))
                        if (!item.empty()) model.trained_on.push_back(item);
                }
            } catch (const std::exception& e) {
                throw ParseError("bad model header '" + key + "': " + e.what(), line_no);
            }
            continue;
        }
        try {
            std::size_t pos = 0;
            double v = std::stod(line, &pos);
            if (pos != line.size() && line.find_first_not_of(" \r", pos) != std::string::npos)
                throw std::invalid_argument("trailing characters");
            model.theta.push_back(v);
        } catch (const std::exception&) {
            throw ParseError("invalid theta value '" + line + "'", line_no);
        }
    }
    model.config.validate();
    if (model.theta.size() != static_cast<std::size_t>(model.config.history_n) + 1)
        throw ParseError("model file has " + std::to_string(model.theta.size()) +
                         " theta values, expected N+1 = " +
                         std::to_string(model.config.history_n + 1));
    return model;
}

}  // namespace xrtrace
