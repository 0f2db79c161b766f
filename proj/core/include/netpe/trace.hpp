#pragma once

/// @file trace.hpp
/// @brief Per-interrupt and per-millisecond trace records, their on-disk
/// encoding, and windowed aggregation.
///
/// On-disk grammar (schema version 1). Every line is
///
///     line   := length TAB json LF
///     length := decimal byte count of `json`
///
/// The first line is the header object (`"kind":"header"`); each following
/// line is one record whose `"kind"` is `"irq"`, `"sample"` or `"end"`.
/// At most one `end` record closes the stream. Timestamps are microseconds
/// since simulation start; they never decrease across the stream and
/// strictly increase within each record kind.

#include "netpe/error.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace netpe::trace {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kSampleCadenceUs = 1000.0;

/// Activity between two NIC-interrupt records, logged at interrupt assertion.
struct InterruptRecord {
    double timestamp_us = 0.0;
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_descriptors = 0;
    std::uint64_t tx_descriptors = 0;
    std::vector<std::uint64_t> sleep_entries;  ///< per c-state, since last record
    std::vector<double> sleep_residency_us;    ///< per c-state, since last record
    double joules_since_last = 0.0;

    friend bool operator==(const InterruptRecord&, const InterruptRecord&) = default;
};

/// Counter snapshot taken on a fixed 1 ms cadence. Values are deltas since
/// the previous sample. Last-level-cache misses are not modeled and are 0.
struct PeriodicSample {
    double timestamp_us = 0.0;
    double instructions = 0.0;
    double cycles = 0.0;
    double llc_misses = 0.0;
    double joules = 0.0;

    friend bool operator==(const PeriodicSample&, const PeriodicSample&) = default;
};

/// Stream trailer at the end of simulated time. `activity` covers the span
/// since the last interrupt record (its timestamp is the end time), `tail`
/// the span since the last periodic sample.
struct EndRecord {
    InterruptRecord activity;
    PeriodicSample tail;

    double timestamp_us() const noexcept { return activity.timestamp_us; }

    friend bool operator==(const EndRecord&, const EndRecord&) = default;
};

using Record = std::variant<InterruptRecord, PeriodicSample, EndRecord>;

double timestamp_of(const Record& r);

struct TraceHeader {
    int schema_version = kSchemaVersion;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::uint32_t itr_ticks = 0;
    std::vector<std::string> cstate_names;

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceStream {
    TraceHeader header;
    std::vector<Record> records;

    friend bool operator==(const TraceStream&, const TraceStream&) = default;
};

/// Parse failure carrying the records decoded before the faulty one.
class TraceParseError : public ParseError {
public:
    TraceParseError(std::size_t offset, const std::string& reason, TraceStream partial)
        : ParseError(offset, reason), partial_(std::move(partial)) {}

    const TraceStream& partial() const noexcept { return partial_; }

private:
    TraceStream partial_;
};

/// Append-only writer. The header goes out on construction; records must
/// arrive in timestamp order.
class TraceWriter {
public:
    TraceWriter(std::ostream& out, const TraceHeader& header);

    /// @throws Error("trace") on timestamp regression or records after `end`.
    void emit(const Record& record);
    void flush();

private:
    std::ostream* out_;
    std::size_t cstates_;
    double last_any_ = -1.0;
    std::optional<double> last_irq_;
    std::optional<double> last_sample_;
    bool closed_ = false;
};

/// Validates ordering and shape of an in-memory record sequence using the
/// same rules as TraceWriter::emit.
void check_records(const TraceHeader& header, const std::vector<Record>& records);

/// Parses a complete stream. Throws TraceParseError (a ParseError) with the
/// byte offset of the offending line, VersionError on schema mismatch.
TraceStream parse(std::istream& in);
TraceStream parse_string(const std::string& text);

void write(std::ostream& out, const TraceStream& stream);
std::string to_string(const TraceStream& stream);

/// Whole-trace or per-window activity totals.
struct WindowStats {
    double start_us = 0.0;
    double end_us = 0.0;
    std::uint64_t interrupts = 0;
    std::uint64_t rx_bytes = 0;
    std::uint64_t tx_bytes = 0;
    std::uint64_t rx_descriptors = 0;
    std::uint64_t tx_descriptors = 0;
    double joules = 0.0;
    double instructions = 0.0;
    double cycles = 0.0;

    double duration_s() const noexcept { return (end_us - start_us) * 1e-6; }
    double rx_bytes_per_s() const noexcept;
    double tx_bytes_per_s() const noexcept;
    double interrupts_per_s() const noexcept;
    double watts() const noexcept;

    friend bool operator==(const WindowStats&, const WindowStats&) = default;
};

/// End of the trace span: the `end` record's timestamp, else the last
/// record timestamp, else 0.
double span_end_us(const TraceStream& trace);

/// Sums over every record. Interrupt-chain quantities (bytes, descriptors,
/// joules) come from `irq` and `end.activity`; instructions and cycles from
/// `sample` and `end.tail`.
WindowStats totals(const TraceStream& trace);

/// Tiles [0, span_end) with windows of `window_us` (the last one may be
/// short) and assigns each record to the window holding its timestamp. A
/// record stamped exactly at span_end belongs to the last window.
std::vector<WindowStats> aggregate(const TraceStream& trace, double window_us);

} // namespace netpe::trace
