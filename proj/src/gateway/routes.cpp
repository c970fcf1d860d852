#include "scimesh/gateway/routes.hpp"

#include "scimesh/errors.hpp"
#include "scimesh/util.hpp"

namespace scimesh::gateway {

RouteTable RouteTable::defaults() {
    RouteTable t;
    t.rows_ = {
        {"GET", "/v1/status", "status", "status.read", "read"},
        {"POST", "/v1/jobs", "scheduler", "jobs.submit", "submit"},
        {"GET", "/v1/jobs/{id}", "scheduler", "jobs.read", "read"},
        {"DELETE", "/v1/jobs/{id}", "scheduler", "jobs.cancel", "submit"},
        {"POST", "/v1/workflows", "scheduler", "jobs.submit", "submit"},
        {"POST", "/v1/streams", "dsn", "streams.provision", "stream_provision"},
        {"GET", "/v1/streams/{id}", "dsn", "streams.read", "read"},
        {"DELETE", "/v1/streams/{id}", "dsn", "streams.provision", "stream_provision"},
        // Delegation authority comes with holding the token; policy still applies.
        {"POST", "/v1/tokens/delegate", "admin", "tokens.delegate", "submit", true},
        {"POST", "/v1/policies", "admin", "admin.policies", "admin"},
        {"POST", "/v1/reservations", "admin", "admin.reservations", "admin"},
        {"GET", "/v1/reservations", "admin", "admin.reservations", "admin"},
        {"POST", "/v1/reservations/{id}/approve", "admin", "admin.reservations", "admin"},
        {"GET", "/v1/audit", "admin", "admin.audit", "admin"},
        {"GET", "/v1/metrics", "admin", "admin.metrics", "admin"},
        {"POST", "/v1/tokens", "admin", "admin.tokens", "admin"},
        {"DELETE", "/v1/tokens/{id}", "admin", "admin.tokens", "admin"},
        {"POST", "/v1/templates", "admin", "admin.templates", "admin"},
        {"PUT", "/v1/profile", "admin", "admin.profile", "admin"},
        {"GET", "/v1/profile", "admin", "admin.profile", "admin"},
    };
    return t;
}

RouteMatch RouteTable::route(const std::string& method, const std::string& path) const {
    auto path_parts = util::split(path, '/');
    for (const auto& row : rows_) {
        if (row.method != method) continue;
        auto pattern_parts = util::split(row.pattern, '/');
        if (pattern_parts.size() != path_parts.size()) continue;
        bool ok = true;
        std::map<std::string, std::string> params;
        for (size_t i = 0; i < pattern_parts.size() && ok; ++i) {
            const auto& pp = pattern_parts[i];
            if (pp.size() >= 2 && pp.front() == '{' && pp.back() == '}') {
                if (path_parts[i].empty())
                    ok = false;
                else
                    params[pp.substr(1, pp.size() - 2)] = path_parts[i];
            } else if (pp != path_parts[i]) {
                ok = false;
            }
        }
        if (!ok) continue;
        return {row.service, row.action, row.endpoint_class, path, row.scope_exempt,
                std::move(params)};
    }
    throw Error(Errc::NOT_FOUND, "no route for " + method + " " + path);
}

}  // namespace scimesh::gateway
