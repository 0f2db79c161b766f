#include "netpe/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace netpe::trace {

using nlohmann::json;

namespace {

class TraceError : public Error {
public:
    explicit TraceError(const std::string& message) : Error("trace", message) {}
};

json encode_activity(const InterruptRecord& r) {
    return json{{"t_us", r.timestamp_us},
                {"rx_bytes", r.rx_bytes},
                {"tx_bytes", r.tx_bytes},
                {"rx_desc", r.rx_descriptors},
                {"tx_desc", r.tx_descriptors},
                {"sleep_entries", r.sleep_entries},
                {"sleep_us", r.sleep_residency_us},
                {"joules", r.joules_since_last}};
}

json encode_sample(const PeriodicSample& s) {
    return json{{"t_us", s.timestamp_us},
                {"instructions", s.instructions},
                {"cycles", s.cycles},
                {"llc_misses", s.llc_misses},
                {"joules", s.joules}};
}

json encode(const Record& record) {
    return std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            json j;
            if constexpr (std::is_same_v<T, InterruptRecord>) {
                j = encode_activity(r);
                j["kind"] = "irq";
            } else if constexpr (std::is_same_v<T, PeriodicSample>) {
                j = encode_sample(r);
                j["kind"] = "sample";
            } else {
                j = encode_activity(r.activity);
                j["tail"] = encode_sample(r.tail);
                j["kind"] = "end";
            }
            return j;
        },
        record);
}

json encode_header(const TraceHeader& h) {
    return json{{"kind", "header"},
                {"schema_version", h.schema_version},
                {"config_digest", h.config_digest},
                {"seed", h.seed},
                {"itr_ticks", h.itr_ticks},
                {"cstates", h.cstate_names}};
}

void write_line(std::ostream& out, const json& j) {
    const std::string text = j.dump();
    out << text.size() << '\t' << text << '\n';
}

// Field access that reports missing / mistyped keys as a plain message.
template <typename T>
T field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw TraceError(std::string("missing field '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw TraceError(std::string("field '") + key + "' has the wrong type");
    }
}

InterruptRecord decode_activity(const json& j) {
    InterruptRecord r;
    r.timestamp_us = field<double>(j, "t_us");
    r.rx_bytes = field<std::uint64_t>(j, "rx_bytes");
    r.tx_bytes = field<std::uint64_t>(j, "tx_bytes");
    r.rx_descriptors = field<std::uint64_t>(j, "rx_desc");
    r.tx_descriptors = field<std::uint64_t>(j, "tx_desc");
    r.sleep_entries = field<std::vector<std::uint64_t>>(j, "sleep_entries");
    r.sleep_residency_us = field<std::vector<double>>(j, "sleep_us");
    r.joules_since_last = field<double>(j, "joules");
    return r;
}

PeriodicSample decode_sample(const json& j) {
    PeriodicSample s;
    s.timestamp_us = field<double>(j, "t_us");
    s.instructions = field<double>(j, "instructions");
    s.cycles = field<double>(j, "cycles");
    s.llc_misses = field<double>(j, "llc_misses");
    s.joules = field<double>(j, "joules");
    return s;
}

Record decode(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "irq") {
        return decode_activity(j);
    }
    if (kind == "sample") {
        return decode_sample(j);
    }
    if (kind == "end") {
        return EndRecord{decode_activity(j), decode_sample(field<json>(j, "tail"))};
    }
    throw TraceError("unknown record kind '" + kind + "'");
}

TraceHeader decode_header(const json& j) {
    if (field<std::string>(j, "kind") != "header") {
        throw TraceError("first line is not a header");
    }
    TraceHeader h;
    h.schema_version = field<int>(j, "schema_version");
    if (h.schema_version != kSchemaVersion) {
        throw VersionError("trace schema version " + std::to_string(h.schema_version) +
                           " is not supported (expected " + std::to_string(kSchemaVersion) +
                           ")");
    }
    h.config_digest = field<std::string>(j, "config_digest");
    h.seed = field<std::uint64_t>(j, "seed");
    h.itr_ticks = field<std::uint32_t>(j, "itr_ticks");
    h.cstate_names = field<std::vector<std::string>>(j, "cstates");
    return h;
}

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void check_activity(const InterruptRecord& r, std::size_t cstates) {
    if (r.sleep_entries.size() != cstates || r.sleep_residency_us.size() != cstates) {
        throw TraceError("sleep statistics do not match the header's c-state count");
    }
    if (!nonneg(r.joules_since_last) ||
        !std::all_of(r.sleep_residency_us.begin(), r.sleep_residency_us.end(), nonneg)) {
        throw TraceError("negative or non-finite energy/residency");
    }
}

void check_sample(const PeriodicSample& s) {
    if (!nonneg(s.instructions) || !nonneg(s.cycles) || !nonneg(s.llc_misses) ||
        !nonneg(s.joules)) {
        throw TraceError("negative or non-finite sample counter");
    }
}

// Ordering state shared by the writer and the validators.
struct OrderCheck {
    std::size_t cstates = 0;
    double last_any = -1.0;
    std::optional<double> last_irq;
    std::optional<double> last_sample;
    bool closed = false;

    void accept(const Record& record) {
        if (closed) {
            throw TraceError("record after end-of-stream");
        }
        const double t = timestamp_of(record);
        if (!nonneg(t)) {
            throw TraceError("timestamp must be finite and >= 0");
        }
        if (t < last_any) {
            throw TraceError("timestamp regression");
        }
        if (const auto* irq = std::get_if<InterruptRecord>(&record)) {
            if (last_irq && t <= *last_irq) {
                throw TraceError("interrupt timestamps must strictly increase");
            }
            check_activity(*irq, cstates);
            last_irq = t;
        } else if (const auto* s = std::get_if<PeriodicSample>(&record)) {
            if (last_sample && t <= *last_sample) {
                throw TraceError("sample timestamps must strictly increase");
            }
            check_sample(*s);
            last_sample = t;
        } else {
            const auto& end = std::get<EndRecord>(record);
            check_activity(end.activity, cstates);
            check_sample(end.tail);
            if (end.tail.timestamp_us != t) {
                throw TraceError("end record tail timestamp differs from its activity");
            }
            closed = true;
        }
        last_any = t;
    }
};

} // namespace

double timestamp_of(const Record& r) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, EndRecord>) {
                return x.timestamp_us();
            } else {
                return x.timestamp_us;
            }
        },
        r);
}

TraceWriter::TraceWriter(std::ostream& out, const TraceHeader& header)
    : out_(&out), cstates_(header.cstate_names.size()) {
    write_line(*out_, encode_header(header));
}

void TraceWriter::emit(const Record& record) {
    OrderCheck check{cstates_, last_any_, last_irq_, last_sample_, closed_};
    check.accept(record);
    last_any_ = check.last_any;
    last_irq_ = check.last_irq;
    last_sample_ = check.last_sample;
    closed_ = check.closed;
    write_line(*out_, encode(record));
}

void TraceWriter::flush() { out_->flush(); }

void check_records(const TraceHeader& header, const std::vector<Record>& records) {
    OrderCheck check;
    check.cstates = header.cstate_names.size();
    for (const auto& r : records) {
        check.accept(r);
    }
}

TraceStream parse(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    TraceStream out;
    OrderCheck check;
    std::size_t pos = 0;
    bool have_header = false;

    while (pos < text.size()) {
        const std::size_t line_start = pos;
        auto fail = [&](const std::string& reason) -> void {
            throw TraceParseError(line_start, reason, out);
        };
        std::size_t len = 0;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits > 12) {
                fail("length field too long");
            }
            len = len * 10 + static_cast<std::size_t>(text[pos] - '0');
            ++pos;
            ++digits;
        }
        if (digits == 0 || pos >= text.size() || text[pos] != '\t') {
            fail("malformed length field");
        }
        ++pos;
        if (text.size() - pos < len + 1) {
            fail("truncated record");
        }
        if (text[pos + len] != '\n') {
            fail("record length does not match its payload");
        }
        json j;
        try {
            j = json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                            text.begin() + static_cast<std::ptrdiff_t>(pos + len));
        } catch (const json::parse_error& e) {
            fail(std::string("invalid JSON: ") + e.what());
        }
        try {
            if (!have_header) {
                out.header = decode_header(j);
                check.cstates = out.header.cstate_names.size();
                have_header = true;
            } else {
                Record r = decode(j);
                check.accept(r);
                out.records.push_back(std::move(r));
            }
        } catch (const VersionError&) {
            throw;
        } catch (const Error& e) {
            fail(e.what());
        }
        pos += len + 1;
    }
    if (!have_header) {
        throw TraceParseError(0, "missing header", out);
    }
    return out;
}

TraceStream parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

void write(std::ostream& out, const TraceStream& stream) {
    TraceWriter w(out, stream.header);
    for (const auto& r : stream.records) {
        w.emit(r);
    }
    w.flush();
}

std::string to_string(const TraceStream& stream) {
    std::ostringstream out;
    write(out, stream);
    return out.str();
}

namespace {

double rate(double amount, double seconds) { return seconds > 0.0 ? amount / seconds : 0.0; }

void add_activity(WindowStats& w, const InterruptRecord& r) {
    w.rx_bytes += r.rx_bytes;
    w.tx_bytes += r.tx_bytes;
    w.rx_descriptors += r.rx_descriptors;
    w.tx_descriptors += r.tx_descriptors;
    w.joules += r.joules_since_last;
}

void add_sample(WindowStats& w, const PeriodicSample& s) {
    w.instructions += s.instructions;
    w.cycles += s.cycles;
}

void add(WindowStats& w, const Record& record) {
    if (const auto* irq = std::get_if<InterruptRecord>(&record)) {
        ++w.interrupts;
        add_activity(w, *irq);
    } else if (const auto* s = std::get_if<PeriodicSample>(&record)) {
        add_sample(w, *s);
    } else {
        const auto& end = std::get<EndRecord>(record);
        add_activity(w, end.activity);
        add_sample(w, end.tail);
    }
}

} // namespace

double WindowStats::rx_bytes_per_s() const noexcept {
    return rate(static_cast<double>(rx_bytes), duration_s());
}
double WindowStats::tx_bytes_per_s() const noexcept {
    return rate(static_cast<double>(tx_bytes), duration_s());
}
double WindowStats::interrupts_per_s() const noexcept {
    return rate(static_cast<double>(interrupts), duration_s());
}
double WindowStats::watts() const noexcept { return rate(joules, duration_s()); }

double span_end_us(const TraceStream& trace) {
    if (trace.records.empty()) {
        return 0.0;
    }
    return timestamp_of(trace.records.back());
}

WindowStats totals(const TraceStream& trace) {
    WindowStats w;
    w.end_us = span_end_us(trace);
    for (const auto& r : trace.records) {
        add(w, r);
    }
    return w;
}

std::vector<WindowStats> aggregate(const TraceStream& trace, double window_us) {
    if (!(std::isfinite(window_us) && window_us > 0.0)) {
        throw DomainError("aggregation window must be > 0");
    }
    const double span = span_end_us(trace);
    std::size_t n = 1;
    if (span > 0.0) {
        n = static_cast<std::size_t>(std::ceil(span / window_us));
        n = std::max<std::size_t>(n, 1);
        // Guard against ceil() overshooting by one on exact multiples.
        while (n > 1 && static_cast<double>(n - 1) * window_us >= span) {
            --n;
        }
    }
    std::vector<WindowStats> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].start_us = static_cast<double>(i) * window_us;
        out[i].end_us = (i + 1 == n) ? std::max(span, out[i].start_us)
                                     : static_cast<double>(i + 1) * window_us;
    }
    for (const auto& r : trace.records) {
        const double t = timestamp_of(r);
        auto idx = static_cast<std::size_t>(std::floor(t / window_us));
        idx = std::min(idx, n - 1);
        add(out[idx], r);
    }
    return out;
}

} // namespace netpe::trace
