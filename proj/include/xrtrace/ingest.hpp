#ifndef XRTRACE_INGEST_HPP
#define XRTRACE_INGEST_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrtrace/trace.hpp"

namespace xrtrace {

enum class Direction { downlink, uplink };
enum class PacketKind { video, feedback, tracking, other };

// One transport-layer fragment, as decoded from a capture log.
struct PacketRecord {
    double timestamp = 0.0;  // seconds
    long frame_id = 0;
    double payload_bytes = 0.0;
    Direction direction = Direction::downlink;
    PacketKind kind = PacketKind::video;
};

struct FrameAssembly {
    long frame_id = 0;
    double total_bytes = 0.0;
    int fragment_count = 0;
    double first_ts = 0.0;
    double last_ts = 0.0;
};

// Non-fatal observations gathered while reassembling a log.
struct ReassemblyReport {
    std::vector<std::string> warnings;
    std::vector<long> missing_frame_ids;  // gaps in the id sequence, not imputed
    bool reordered = false;               // non-monotonic frame ids encountered
};

// Sums downlink video fragments per frame id; frames ordered by first
// fragment timestamp. Everything else (uplink, feedback, tracking) is
// discarded. Measured first-fragment timestamps are kept in the trace.
FrameTrace reassemble_frames(std::span<const PacketRecord> packets, const TraceMeta& meta,
                             ReassemblyReport* report = nullptr);

std::vector<FrameAssembly> assemble(std::span<const PacketRecord> packets,
                                    ReassemblyReport* report = nullptr);

// Packet-log CSV: timestamp,frame_id,payload_bytes,direction,kind
// with direction in {downlink, uplink} and kind in {video, feedback,
// tracking, other}; '#' lines are comments.
std::vector<PacketRecord> read_packet_log(const std::filesystem::path& path);

// Frame-trace file: '#' header lines carrying content label, R (bit/s) and
// phi (frame/s), then one "index,nominal_time_s,size_bytes" row per frame.
// write/read round-trips bit-exactly ('\n' line endings, '.' decimals).
FrameTrace read_frame_trace(const std::filesystem::path& path);
void write_frame_trace(const FrameTrace& trace, const std::filesystem::path& path);

// Shortest decimal rendering that parses back to the same double.
std::string format_double(double v);

}  // namespace xrtrace

#endif
