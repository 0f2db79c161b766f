#pragma once

/// @file codec.hpp
/// @brief JSON encoding of every configuration and result type, the shared
/// config-file grammar, and content digests.
///
/// Decoders reject unknown keys and wrong types with a ConfigError naming
/// the dotted path of the offending field. Encoders always emit the fully
/// expanded form (presets resolved), so `encode(decode(x))` is canonical.

#include "netpe/fit.hpp"
#include "netpe/model.hpp"
#include "netpe/sim.hpp"
#include "netpe/sweep.hpp"
#include "netpe/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace netpe::codec {

using json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

// ---- analytic model ------------------------------------------------------

json encode(const model::PowerModel& p);
model::PowerModel decode_power(const json& j, const std::string& path,
                               const model::PowerModel& base = {});

json encode(const model::AnalyticScenario& s);
model::AnalyticScenario decode_scenario(const json& j, const std::string& path = "scenario",
                                        const model::AnalyticScenario& base = {});

json encode(const model::CurvePoint& p);
json encode(const std::vector<model::CurvePoint>& points);

/// Δ grid: either `{"deltas": [...]}` or `{"lo", "hi", "step"}`.
std::vector<double> decode_delta_grid(const json& j, const std::string& path);

// ---- simulator -----------------------------------------------------------

json encode(const sim::SimConfig& c);
sim::SimConfig decode_sim(const json& j, const std::string& path = "sim",
                          const sim::SimConfig& base = {});

json encode(const sim::WorkloadSpec& w);
sim::WorkloadSpec decode_workload(const json& j, const std::string& path = "workload",
                                  const sim::WorkloadSpec& base = {});

/// Summary of a run without the per-request latency list or trace.
json encode_summary(const sim::SimResult& r);

// ---- sweep / fit -----------------------------------------------------------

json encode(const sweep::SweepGrid& g);
sweep::SweepGrid decode_grid(const json& j, const std::string& path = "sweep");

json encode(const sweep::Metrics& m);
sweep::Metrics decode_metrics(const json& j, const std::string& path);

json encode(const sweep::SweepPoint& p);
sweep::SweepPoint decode_point(const json& j, const std::string& path);

json encode(const sweep::Markers& m);

json encode(const fit::PowerFitOptions& o);
fit::PowerFitOptions decode_fit_options(const json& j, const std::string& path,
                                        const fit::PowerFitOptions& base = {});

/// Fit report record: `{"kind":"fit_report","schema_version":1,...}`.
json encode_fit_report(const fit::FitResult& r, std::optional<std::uint32_t> itr_ticks);
fit::FitResult decode_fit_report(const json& j);

json encode(const trace::WindowStats& w);

// ---- shared config file ------------------------------------------------------

struct SweepSettings {
    sweep::SweepGrid grid = sweep::SweepGrid::defaults();
    std::uint64_t seed_base = 1;
    unsigned threads = 1;
};

struct FitSettings {
    std::optional<std::uint32_t> itr_ticks;  ///< select one itr from a sweep
    double known_t_detect_s = 0.0;
    fit::PowerFitOptions options{};
};

/// The one config grammar shared by every CLI subcommand. Every section is
/// optional; absent sections keep the defaults below.
struct ConfigFile {
    int schema_version = kConfigSchemaVersion;
    model::AnalyticScenario scenario{};
    std::vector<double> curve_deltas = model::delta_range(0.05, 1.0, 0.05);
    sim::SimConfig sim{};
    sim::WorkloadSpec workload{};
    SweepSettings sweep{};
    FitSettings fit{};
};

/// @throws ConfigError (unknown keys, wrong types) or VersionError.
ConfigFile decode_config(const json& j);
ConfigFile load_config_file(const std::string& path);
json encode(const ConfigFile& c);

// ---- digests -------------------------------------------------------------------

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Digest of the canonical encoding of a run's inputs. The record_trace
/// flag is excluded: it changes what is written, not what is simulated.
std::string config_digest(const sim::SimConfig& config, const sim::WorkloadSpec& workload);

/// Parses JSON text, converting syntax errors to ParseError.
json parse_json(std::string_view text, std::size_t base_offset = 0);

} // namespace netpe::codec
