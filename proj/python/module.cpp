// Python bindings for the core trace-analysis and slicing operations.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xrtrace/ingest.hpp"
#include "xrtrace/regression.hpp"
#include "xrtrace/slicing.hpp"
#include "xrtrace/stats.hpp"
#include "xrtrace/trace.hpp"

namespace py = pybind11;
using namespace xrtrace;

PYBIND11_MODULE(_xrtrace, m) {
    m.doc() = "XR traffic trace analysis, frame-size prediction, and slicing simulation";

    py::class_<TraceMeta>(m, "TraceMeta")
        .def(py::init<>())
        .def(py::init([](std::string content, double rate, double fps, std::string source) {
                 return TraceMeta{std::move(content), rate, fps, std::move(source)};
             }),
             py::arg("content_label") = "", py::arg("target_rate_bps") = 0.0,
             py::arg("frame_rate_fps") = 0.0, py::arg("source_id") = "")
        .def_readwrite("content_label", &TraceMeta::content_label)
        .def_readwrite("target_rate_bps", &TraceMeta::target_rate_bps)
        .def_readwrite("frame_rate_fps", &TraceMeta::frame_rate_fps)
        .def_readwrite("source_id", &TraceMeta::source_id)
        .def("expected_frame_bytes", &TraceMeta::expected_frame_bytes);

    py::class_<FrameTrace>(m, "FrameTrace")
        .def(py::init<>())
        .def(py::init([](TraceMeta meta, std::vector<double> sizes) {
                 FrameTrace t;
                 t.meta = std::move(meta);
                 t.sizes = std::move(sizes);
                 t.validate();
                 return t;
             }),
             py::arg("meta"), py::arg("sizes"))
        .def_readwrite("meta", &FrameTrace::meta)
        .def_readwrite("sizes", &FrameTrace::sizes)
        .def("__len__", &FrameTrace::length);

    py::enum_<Method>(m, "Method")
        .value("ols", Method::ols)
        .value("quantile", Method::quantile)
        .value("huber", Method::huber);
    py::enum_<Scope>(m, "Scope")
        .value("GM", Scope::GM)
        .value("CM", Scope::CM)
        .value("CRM", Scope::CRM);
    py::enum_<SchedKind>(m, "SchedKind").value("CS", SchedKind::CS).value("FS", SchedKind::FS);

    py::class_<PredictorConfig>(m, "PredictorConfig")
        .def(py::init<>())
        .def_readwrite("history_n", &PredictorConfig::history_n)
        .def_readwrite("horizon_t", &PredictorConfig::horizon_t)
        .def_readwrite("lookahead_tau", &PredictorConfig::lookahead_tau)
        .def_readwrite("method", &PredictorConfig::method)
        .def_readwrite("ps", &PredictorConfig::ps)
        .def_readwrite("delta", &PredictorConfig::delta);

    py::class_<PredictorModel>(m, "PredictorModel")
        .def(py::init<>())
        .def_readwrite("config", &PredictorModel::config)
        .def_readwrite("theta", &PredictorModel::theta)
        .def_readwrite("normalized", &PredictorModel::normalized)
        .def_readwrite("scope", &PredictorModel::scope)
        .def_readwrite("trained_on", &PredictorModel::trained_on)
        .def("predict", [](const PredictorModel& self, const std::vector<double>& history,
                           const TraceMeta& meta) { return self.predict(history, meta); });

    py::class_<Dataset>(m, "Dataset")
        .def_readwrite("features", &Dataset::features)
        .def_readwrite("targets", &Dataset::targets)
        .def("rows", &Dataset::rows);

    py::class_<OverflowReport>(m, "OverflowReport")
        .def_readonly("window_t", &OverflowReport::window_t)
        .def_readonly("std_dev", &OverflowReport::std_dev)
        .def_readonly("p95", &OverflowReport::p95)
        .def_readonly("p99", &OverflowReport::p99);

    py::class_<ScheduleSummary>(m, "ScheduleSummary")
        .def_readonly("mean_latency_s", &ScheduleSummary::mean_latency_s)
        .def_readonly("p95_latency_s", &ScheduleSummary::p95_latency_s)
        .def_readonly("max_latency_s", &ScheduleSummary::max_latency_s)
        .def_readonly("mean_rate_bps", &ScheduleSummary::mean_rate_bps)
        .def_readonly("frames_counted", &ScheduleSummary::frames_counted)
        .def_readonly("livelock", &ScheduleSummary::livelock);

    py::class_<ScheduleRun>(m, "ScheduleRun")
        .def_readonly("capacities", &ScheduleRun::capacities)
        .def_readonly("latencies", &ScheduleRun::latencies)
        .def_readonly("backlog", &ScheduleRun::backlog)
        .def_readonly("warmup_frames", &ScheduleRun::warmup_frames)
        .def_readonly("served_bytes", &ScheduleRun::served_bytes)
        .def_readonly("final_backlog", &ScheduleRun::final_backlog)
        .def_readonly("summary", &ScheduleRun::summary);

    py::class_<SlicePolicy>(m, "SlicePolicy")
        .def_readwrite("kind", &SlicePolicy::kind)
        .def_readwrite("period_s", &SlicePolicy::period_s)
        .def_readwrite("models", &SlicePolicy::models);

    m.def("windowed_mean",
          [](const FrameTrace& t, int w) { return windowed_mean(t, w).values; },
          py::arg("trace"), py::arg("window_t"));
    m.def("diff_series", &diff_series);
    m.def("synth_trace", &synth_trace, py::arg("meta"), py::arg("n_frames"),
          py::arg("noise_std"), py::arg("lag1_coeff"), py::arg("seed"));
    m.def("rate_series", &rate_series, py::arg("trace"), py::arg("window_t"));
    m.def("overflow_report", &overflow_report);
    m.def("autocorr",
          [](const std::vector<double>& x, int max_lag) { return autocorr(x, max_lag).values; });
    m.def("build_dataset", &build_dataset);
    m.def("fit_ols", &fit_ols, py::arg("data"), py::arg("ridge_fallback") = true);
    m.def("fit_quantile", &fit_quantile);
    m.def("fit_huber", &fit_huber);
    m.def("fit_model", &fit_model, py::arg("trace"), py::arg("config"),
          py::arg("normalized") = false);
    m.def("normalize", &normalize);
    m.def("denormalize_theta", [](const std::vector<double>& th, double r, double phi) {
        return denormalize_theta(th, r, phi);
    });
    m.def("residuals", [](const PredictorModel& model, const FrameTrace& trace) {
        return residuals(model, trace).values;
    });
    m.def("relative_residuals", &relative_residuals);
    m.def("make_policy", &make_policy, py::arg("training"), py::arg("kind"), py::arg("period_s"),
          py::arg("history_n"), py::arg("ps"), py::arg("normalized") = false);
    m.def("simulate", &simulate);
    m.def("simulate_fixed", [](const FrameTrace& t, const std::vector<double>& caps, int s) {
        return simulate_fixed(t, caps, s);
    }, py::arg("trace"), py::arg("capacities"), py::arg("period_s") = 1);
    m.def("read_frame_trace", &read_frame_trace);
    m.def("write_frame_trace", &write_frame_trace);
    m.def("read_model", &read_model);
    m.def("write_model", &write_model);
}
