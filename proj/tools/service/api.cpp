#include "api.hpp"

#include "netpe/codec.hpp"
#include "netpe/model.hpp"
#include "netpe/sweep.hpp"
#include "netpe/trace.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <sstream>

namespace netpe::service {

namespace {

using codec::json;

struct HttpError {
    int status;
    std::string code;
    std::string message;
    std::string field;
};

Response json_response(int status, json body) {
    body["schema_version"] = kApiSchemaVersion;
    return Response{status, body.dump(), "application/json"};
}

Response error_response(const HttpError& e) {
    json err{{"code", e.code}, {"message", e.message}};
    if (!e.field.empty()) {
        err["field"] = e.field;
    }
    return json_response(e.status, json{{"error", err}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) {
                parts.push_back(cur);
            }
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        parts.push_back(cur);
    }
    return parts;
}

std::size_t query_size(const Request& r, const std::string& key, std::size_t fallback) {
    const auto it = r.query.find(key);
    if (it == r.query.end()) {
        return fallback;
    }
    std::size_t v = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw HttpError{400, "config", "expected a nonnegative integer", key};
    }
    return v;
}

double query_positive(const Request& r, const std::string& key) {
    const auto it = r.query.find(key);
    if (it == r.query.end()) {
        throw HttpError{400, "config", "required", key};
    }
    double v = 0.0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !(std::isfinite(v) && v > 0.0)) {
        throw HttpError{400, "config", "must be a number > 0", key};
    }
    return v;
}

struct Page {
    std::size_t offset;
    std::size_t limit;
};

Page page_of(const Request& r) {
    Page p{query_size(r, "offset", 0), query_size(r, "limit", kDefaultLimit)};
    if (p.limit == 0 || p.limit > kMaxLimit) {
        throw HttpError{400, "config", "must lie in [1, " + std::to_string(kMaxLimit) + "]", "limit"};
    }
    return p;
}

template <typename T, typename Enc>
json paginate(const std::vector<T>& items, const Page& page, Enc&& encode) {
    json out = json::array();
    for (std::size_t i = page.offset; i < items.size() && i < page.offset + page.limit; ++i) {
        out.push_back(encode(items[i]));
    }
    json j{{"total", items.size()}, {"offset", page.offset}, {"limit", page.limit}, {"items", out}};
    if (page.offset + page.limit < items.size()) {
        j["next_offset"] = page.offset + page.limit;
    }
    return j;
}

std::string url_of(ArtifactKind kind, const std::string& digest) {
    return "/v1/" + std::string(kind_segment(kind)) + "/" + digest;
}

class Handler {
public:
    explicit Handler(const Repository& repo) : repo_(repo) {}

    Response dispatch(const Request& r) const {
        const auto parts = split_path(r.path);
        if (parts.empty() || parts[0] != "v1") {
            throw HttpError{404, "not_found", "unknown path " + r.path, ""};
        }
        if (parts.size() == 3 && parts[1] == "model" && parts[2] == "eval") {
            require(r, "POST");
            return eval_model(r);
        }
        require(r, "GET");
        if (parts.size() == 1) {
            return descriptor();
        }
        const auto kind = kind_from_segment(parts[1]);
        if (!kind) {
            throw HttpError{404, "not_found", "unknown collection " + parts[1], ""};
        }
        if (parts.size() == 2) {
            return listing(*kind);
        }
        const std::string& digest = parts[2];
        const std::string bytes = load(*kind, digest);
        if (parts.size() == 3) {
            return artifact(*kind, digest, bytes);
        }
        if (parts.size() == 4 && *kind == ArtifactKind::Sweep && parts[3] == "points") {
            const auto file = sweep::sweep_from_string(bytes);
            return json_response(200, paginate(file.points, page_of(r), [](const sweep::SweepPoint& p) {
                                     return codec::encode(p);
                                 }));
        }
        if (parts.size() == 4 && *kind == ArtifactKind::Sweep && parts[3] == "markers") {
            return markers(digest, bytes);
        }
        if (parts.size() == 4 && *kind == ArtifactKind::Trace && parts[3] == "window") {
            return trace_window(r, digest, bytes);
        }
        throw HttpError{404, "not_found", "unknown path " + r.path, ""};
    }

private:
    static void require(const Request& r, const char* method) {
        if (r.method != method) {
            throw HttpError{405, "method_not_allowed", r.method + " not allowed on " + r.path, ""};
        }
    }

    std::string load(ArtifactKind kind, const std::string& digest) const {
        auto bytes = repo_.get(kind, digest);
        if (!bytes) {
            throw HttpError{404, "not_found",
                            "no " + std::string(kind_segment(kind)) + " artifact with digest " + digest, ""};
        }
        return std::move(*bytes);
    }

    static Response descriptor() {
        json endpoints = json::array({"GET /v1", "GET /v1/sweeps", "GET /v1/sweeps/{digest}",
                                      "GET /v1/sweeps/{digest}/points?offset&limit",
                                      "GET /v1/sweeps/{digest}/markers", "GET /v1/traces",
                                      "GET /v1/traces/{digest}",
                                      "GET /v1/traces/{digest}/window?window_us&offset&limit",
                                      "GET /v1/fits", "GET /v1/fits/{digest}", "GET /v1/scenarios",
                                      "GET /v1/scenarios/{digest}", "POST /v1/model/eval"});
        return json_response(200, json{{"endpoints", endpoints},
                                       {"pagination",
                                        {{"default_limit", kDefaultLimit}, {"max_limit", kMaxLimit}}}});
    }

    Response listing(ArtifactKind kind) const {
        std::map<std::string, std::vector<std::string>> by_digest;
        for (const auto& [name, digest] : repo_.names(kind)) {
            by_digest[digest].push_back(name);
        }
        json items = json::array();
        for (const auto& d : repo_.list(kind)) {
            json item{{"digest", d}, {"url", url_of(kind, d)}, {"names", by_digest[d]}};
            items.push_back(item);
        }
        return json_response(200, json{{"items", items}});
    }

    Response artifact(ArtifactKind kind, const std::string& digest, const std::string& bytes) const {
        json out{{"digest", digest}, {"url", url_of(kind, digest)}};
        switch (kind) {
        case ArtifactKind::Sweep: {
            const auto file = sweep::sweep_from_string(bytes);
            out["grid"] = codec::encode(file.grid);
            out["seed_base"] = file.seed_base;
            out["config"] = codec::encode(file.config);
            out["workload"] = codec::encode(file.workload);
            out["point_count"] = file.points.size();
            break;
        }
        case ArtifactKind::Trace: {
            const auto t = trace::parse_string(bytes);
            out["header"] = {{"schema_version", t.header.schema_version},
                             {"config_digest", t.header.config_digest},
                             {"seed", t.header.seed},
                             {"itr_ticks", t.header.itr_ticks},
                             {"cstates", t.header.cstate_names}};
            out["record_count"] = t.records.size();
            out["span_us"] = trace::span_end_us(t);
            out["totals"] = codec::encode(trace::totals(t));
            break;
        }
        case ArtifactKind::Fit:
            out["report"] = codec::parse_json(bytes);
            break;
        case ArtifactKind::Scenario:
            out["config"] = codec::encode(codec::decode_config(codec::parse_json(bytes)));
            break;
        }
        return json_response(200, out);
    }

    static Response markers(const std::string& digest, const std::string& bytes) {
        const auto file = sweep::sweep_from_string(bytes);
        if (file.points.empty()) {
            throw HttpError{404, "not_found", "sweep " + digest + " has no points", ""};
        }
        const auto kind = file.workload.workload_kind();
        const auto lat = sweep::latency_objective(kind);
        json frontier = json::array();
        for (const auto& p : sweep::pareto_front(file.points, lat, sweep::Objective::Energy)) {
            frontier.push_back(codec::encode(p));
        }
        return json_response(
            200, json{{"digest", digest},
                      {"workload_kind", kind == sim::WorkloadKind::Open ? "open" : "closed"},
                      {"latency_metric", lat == sweep::Objective::P99Latency ? "p99_latency_us" : "total_time_us"},
                      {"markers", codec::encode(sweep::find_markers(file.points, kind))},
                      {"frontier", frontier}});
    }

    static Response trace_window(const Request& r, const std::string& digest, const std::string& bytes) {
        const double window = query_positive(r, "window_us");
        const Page page = page_of(r);
        const auto t = trace::parse_string(bytes);
        const auto windows = trace::aggregate(t, window);
        json body = paginate(windows, page, [](const trace::WindowStats& w) { return codec::encode(w); });
        body["digest"] = digest;
        body["window_us"] = window;
        body["totals"] = codec::encode(trace::totals(t));
        return json_response(200, body);
    }

    static Response eval_model(const Request& r) {
        json body;
        try {
            body = codec::parse_json(r.body);
        } catch (const ParseError& e) {
            throw HttpError{400, "parse", e.what(), ""};
        }
        if (!body.is_object()) {
            throw HttpError{400, "config", "request body must be a JSON object", ""};
        }
        model::AnalyticScenario scenario;
        std::vector<double> deltas = model::delta_range(0.05, 1.0, 0.05);
        for (auto it = body.begin(); it != body.end(); ++it) {
            if (it.key() == "scenario") {
                scenario = codec::decode_scenario(it.value(), "scenario");
            } else if (it.key() == "deltas") {
                deltas = codec::decode_delta_grid(json{{"deltas", it.value()}}, "");
            } else if (it.key() == "grid") {
                deltas = codec::decode_delta_grid(it.value(), "grid");
            } else {
                throw HttpError{400, "config", "unknown key", it.key()};
            }
        }
        if (body.contains("deltas") && body.contains("grid")) {
            throw HttpError{400, "config", "give either deltas or grid, not both", "deltas"};
        }
        const auto points = model::curve_sweep(scenario, deltas);
        return json_response(200, json{{"scenario", codec::encode(scenario)}, {"points", codec::encode(points)}});
    }

    const Repository& repo_;
};

} // namespace

Response ApiService::handle(const Request& request) const {
    try {
        return Handler(*repo_).dispatch(request);
    } catch (const HttpError& e) {
        return error_response(e);
    } catch (const ConfigError& e) {
        return error_response({400, e.code(), e.detail(), e.field()});
    } catch (const DomainError& e) {
        return error_response({400, e.code(), e.what(), ""});
    } catch (const VersionError& e) {
        return error_response({500, e.code(), e.what(), ""});
    } catch (const Error& e) {
        return error_response({500, e.code(), e.what(), ""});
    } catch (const std::exception& e) {
        return error_response({500, "internal", e.what(), ""});
    }
}

void install_routes(httplib::Server& server, const ApiService& api) {
    auto bridge = [&api](const httplib::Request& hreq, httplib::Response& hres) {
        Request req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) {
            req.query[k] = v;
        }
        req.body = hreq.body;
        const Response res = api.handle(req);
        hres.status = res.status;
        hres.set_content(res.body, res.content_type.c_str());
    };
    server.Get(R"(/v1.*)", bridge);
    server.Post(R"(/v1.*)", bridge);
    server.Put(R"(/v1.*)", bridge);
    server.Delete(R"(/v1.*)", bridge);
}

bool serve(const ApiService& api, const std::string& host, int port) {
    httplib::Server server;
    install_routes(server, api);
    return server.listen(host, port);
}

} // namespace netpe::service
