#pragma once

/// @file api.hpp
/// @brief Read-mostly HTTP API over a Repository.
///
/// `handle()` is a pure request → response mapping so the whole API can be
/// exercised without sockets; `serve()` binds it to an HTTP listener.
///
///     GET  /v1                                 descriptor
///     GET  /v1/{sweeps|traces|fits|scenarios}  listing
///     GET  /v1/sweeps/{digest}                 header (grid, seeds, config)
///     GET  /v1/sweeps/{digest}/points          ?offset&limit
///     GET  /v1/sweeps/{digest}/markers         markers + Pareto frontier
///     GET  /v1/traces/{digest}                 header + totals
///     GET  /v1/traces/{digest}/window          ?window_us&offset&limit
///     GET  /v1/fits/{digest}                   fit report
///     GET  /v1/scenarios/{digest}              stored config file
///     POST /v1/model/eval                      {"scenario":{...},"deltas":[...]}

#include "repository.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace httplib {
class Server;
}

namespace netpe::service {

inline constexpr int kApiSchemaVersion = 1;
inline constexpr std::size_t kDefaultLimit = 100;
inline constexpr std::size_t kMaxLimit = 1000;

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

class ApiService {
public:
    explicit ApiService(const Repository& repo) : repo_(&repo) {}

    /// Never throws; failures map to JSON error bodies (400, 404, 405, 500).
    Response handle(const Request& request) const;

private:
    const Repository* repo_;
};

/// Routes every `/v1` request on `server` through `api.handle`.
void install_routes(httplib::Server& server, const ApiService& api);

/// Blocks serving `api` until the process is stopped. Returns false when the
/// address cannot be bound.
bool serve(const ApiService& api, const std::string& host, int port);

} // namespace netpe::service
