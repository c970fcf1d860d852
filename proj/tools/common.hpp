#pragma once

#include <iostream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "scimesh/clock.hpp"
#include "scimesh/errors.hpp"
#include "scimesh/scenario/stream_tasks.hpp"

namespace tool {

// "NAME: detail" on stderr, non-zero exit for shells to branch on.
inline int fail(const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
}

// --clock real|simulated. Simulated clocks auto-advance: paced loops jump
// time forward themselves and finish instantly, which is the test mode.
inline std::unique_ptr<scimesh::Clock> make_clock(const std::string& kind,
                                                  int64_t start_seconds) {
    if (kind == "real") return std::make_unique<scimesh::RealClock>();
    if (kind == "simulated")
        return std::make_unique<scimesh::SimClock>(start_seconds * 1000, true);
    throw scimesh::Error(scimesh::Errc::INVALID_ARGUMENT,
                         "--clock must be 'real' or 'simulated'");
}

// One gateway HTTP round trip; 2xx returns the parsed body, anything else
// is re-raised as the typed error the gateway reported.
inline nlohmann::json gateway_call(const std::string& url, const std::string& method,
                                   const std::string& path, const std::string& token,
                                   const nlohmann::json* body) {
    auto ep = scimesh::scenario::parse_endpoint(url);
    httplib::Client cli(ep.host, ep.port);
    cli.set_connection_timeout(5, 0);
    cli.set_read_timeout(30, 0);
    httplib::Headers hdrs;
    if (!token.empty()) hdrs.insert({"Authorization", "Bearer " + token});
    std::string payload = body ? body->dump() : "";
    httplib::Result res;
    if (method == "GET")
        res = cli.Get(path, hdrs);
    else if (method == "POST")
        res = cli.Post(path, hdrs, payload, "application/json");
    else if (method == "PUT")
        res = cli.Put(path, hdrs, payload, "application/json");
    else
        res = cli.Delete(path, hdrs, payload, "application/json");
    if (!res)
        throw scimesh::Error(scimesh::Errc::IO_ERROR, "no response from gateway at " + url);
    nlohmann::json parsed = nlohmann::json::object();
    if (!res->body.empty()) {
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw scimesh::Error(scimesh::Errc::IO_ERROR, "unparseable gateway response");
        }
    }
    if (res->status >= 400) {
        std::string name = parsed.value("error", std::string("IO_ERROR"));
        std::string detail = parsed.value("detail", "http " + std::to_string(res->status));
        throw scimesh::Error(scimesh::errc_from_name(name).value_or(scimesh::Errc::IO_ERROR),
                             detail);
    }
    return parsed;
}

}  // namespace tool
