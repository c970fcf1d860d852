#pragma once

#include <map>
#include <string>
#include <vector>

namespace scimesh::gateway {

struct RouteMatch {
    std::string service;         // status | scheduler | dsn | admin
    std::string action;          // scope string the caller must hold
    std::string endpoint_class;  // rate-limit class
    std::string resource;        // the request path
    bool scope_exempt = false;   // action checked by policy only, not token scopes
    std::map<std::string, std::string> params;  // captured {placeholders}
};

/// Static method+pattern routing table. Patterns use {name} segments.
class RouteTable {
  public:
    struct Row {
        std::string method;
        std::string pattern;
        std::string service;
        std::string action;
        std::string endpoint_class;
        bool scope_exempt = false;
    };

    static RouteTable defaults();

    /// Throws NOT_FOUND.
    RouteMatch route(const std::string& method, const std::string& path) const;

    const std::vector<Row>& rows() const { return rows_; }

  private:
    std::vector<Row> rows_;
};

}  // namespace scimesh::gateway
