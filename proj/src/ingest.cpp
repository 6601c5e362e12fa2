#include "xrtrace/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "xrtrace/errors.hpp"

namespace xrtrace {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    double v = 0.0;
    auto first = s.data();
    auto last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line_no);
    return v;
}

long parse_long(const std::string& s, int line_no, const char* what) {
    long v = 0;
    auto first = s.data();
    auto last = s.data() + s.size();
    while (first != last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line_no);
    return v;
}

Direction parse_direction(const std::string& s, int line_no) {
    if (s == "downlink") return Direction::downlink;
    if (s == "uplink") return Direction::uplink;
    throw ParseError("unknown direction '" + s + "'", line_no);
}

PacketKind parse_kind(const std::string& s, int line_no) {
    if (s == "video") return PacketKind::video;
    if (s == "feedback") return PacketKind::feedback;
    if (s == "tracking") return PacketKind::tracking;
    if (s == "other") return PacketKind::other;
    throw ParseError("unknown packet kind '" + s + "'", line_no);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::vector<FrameAssembly> assemble(std::span<const PacketRecord> packets,
                                    ReassemblyReport* report) {
    if (packets.empty()) throw InsufficientDataError("reassemble: empty packet log");

    std::map<long, FrameAssembly> by_id;
    long last_id = -1;
    bool reordered = false;
    for (const auto& p : packets) {
        if (p.direction != Direction::downlink || p.kind != PacketKind::video) continue;
        if (!(p.payload_bytes > 0.0))
            throw RangeError("reassemble: non-positive payload " +
                             std::to_string(p.payload_bytes) + " for frame id " +
                             std::to_string(p.frame_id));
        auto [it, inserted] = by_id.try_emplace(p.frame_id);
        auto& fa = it->second;
        if (inserted) {
            fa.frame_id = p.frame_id;
            fa.first_ts = p.timestamp;
            fa.last_ts = p.timestamp;
            if (p.frame_id < last_id) reordered = true;
            last_id = std::max(last_id, p.frame_id);
        }
        fa.total_bytes += p.payload_bytes;
        fa.fragment_count += 1;
        fa.first_ts = std::min(fa.first_ts, p.timestamp);
        fa.last_ts = std::max(fa.last_ts, p.timestamp);
    }
    if (by_id.empty())
        throw InsufficientDataError("reassemble: no downlink video packets in log");

    std::vector<FrameAssembly> frames;
    frames.reserve(by_id.size());
    for (auto& [id, fa] : by_id) frames.push_back(fa);
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameAssembly& a, const FrameAssembly& b) {
                         return a.first_ts < b.first_ts;
                     });

    if (report) {
        report->reordered = reordered;
        if (reordered)
            report->warnings.push_back("non-monotonic frame ids; frames sorted by first timestamp");
        // Gaps in the id sequence are surfaced, never imputed.
        long prev = frames.front().frame_id;
        for (std::size_t i = 1; i < frames.size(); ++i) {
            long id = frames[i].frame_id;
            for (long g = prev + 1; g < id; ++g) report->missing_frame_ids.push_back(g);
            prev = std::max(prev, id);
        }
        if (!report->missing_frame_ids.empty())
            report->warnings.push_back(std::to_string(report->missing_frame_ids.size()) +
                                       " frame id(s) missing from the capture");
    }
    return frames;
}

FrameTrace reassemble_frames(std::span<const PacketRecord> packets, const TraceMeta& meta,
                             ReassemblyReport* report) {
    meta.validate();
    auto frames = assemble(packets, report);
    FrameTrace trace;
    trace.meta = meta;
    trace.sizes.reserve(frames.size());
    std::vector<double> ts;
    ts.reserve(frames.size());
    for (const auto& fa : frames) {
        trace.sizes.push_back(fa.total_bytes);
        ts.push_back(fa.first_ts);
    }
    trace.measured_ts = std::move(ts);
    trace.validate();
    return trace;
}

std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open packet log: " + path.string());
    std::vector<PacketRecord> packets;
    std::string line;
    int line_no = 0;
    double prev_ts = -1e300;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_csv(line);
        if (f.size() != 5)
            throw ParseError("expected 5 columns (timestamp,frame_id,payload_bytes,"
                             "direction,kind), got " + std::to_string(f.size()), line_no);
        PacketRecord p;
        p.timestamp = parse_double(f[0], line_no, "timestamp");
        p.frame_id = parse_long(f[1], line_no, "frame_id");
        p.payload_bytes = parse_double(f[2], line_no, "payload_bytes");
        p.direction = parse_direction(f[3], line_no);
        p.kind = parse_kind(f[4], line_no);
        if (!(p.payload_bytes > 0.0))
            throw ParseError("non-positive payload size " + f[2], line_no);
        if (p.timestamp < prev_ts)
            throw ParseError("timestamps must be non-decreasing within one log", line_no);
        prev_ts = p.timestamp;
        packets.push_back(p);
    }
    return packets;
}

FrameTrace read_frame_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open frame trace: " + path.string());

    FrameTrace trace;
    bool have_r = false, have_phi = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.erase(body.begin());
            auto eq = body.find('=');
            if (eq == std::string::npos) continue;  // free-form comment
            std::string key = body.substr(0, eq);
            std::string val = body.substr(eq + 1);
            if (key == "content") trace.meta.content_label = val;
            else if (key == "source") trace.meta.source_id = val;
            else if (key == "R") { trace.meta.target_rate_bps = parse_double(val, line_no, "R"); have_r = true; }
            else if (key == "phi") { trace.meta.frame_rate_fps = parse_double(val, line_no, "phi"); have_phi = true; }
            continue;
        }
        auto f = split_csv(line);
        if (f.size() != 3)
            throw ParseError("expected 3 columns (index,nominal_time_s,size_bytes), got " +
                             std::to_string(f.size()), line_no);
        long idx = parse_long(f[0], line_no, "index");
        if (idx != static_cast<long>(trace.sizes.size()))
            throw ParseError("frame index " + std::to_string(idx) + " out of order, expected " +
                             std::to_string(trace.sizes.size()), line_no);
        parse_double(f[1], line_no, "nominal_time_s");
        double size = parse_double(f[2], line_no, "size_bytes");
        if (!(size > 0.0))
            throw ParseError("non-positive frame size " + f[2], line_no);
        trace.sizes.push_back(size);
    }
    if (!have_r) throw ParseError("missing '# R=' header in " + path.string());
    if (!have_phi) throw ParseError("missing '# phi=' header in " + path.string());
    trace.validate();
    return trace;
}

void write_frame_trace(const FrameTrace& trace, const std::filesystem::path& path) {
    trace.validate();
    std::ofstream out(path, std::ios::binary);  // keep '\n' endings everywhere
    if (!out) throw Error("cannot write frame trace: " + path.string());
    out << "# content=" << trace.meta.content_label << "\n";
    out << "# R=" << format_double(trace.meta.target_rate_bps) << "\n";
    out << "# phi=" << format_double(trace.meta.frame_rate_fps) << "\n";
    out << "# source=" << trace.meta.source_id << "\n";
    const double phi = trace.meta.frame_rate_fps;
    for (std::size_t t = 0; t < trace.sizes.size(); ++t)
        out << t << "," << format_double(static_cast<double>(t) / phi) << ","
            << format_double(trace.sizes[t]) << "\n";
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace xrtrace
