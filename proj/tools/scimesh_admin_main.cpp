#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw scimesh::Error(scimesh::Errc::IO_ERROR, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scimesh admin client"};
    app.require_subcommand(1);
    std::string gateway = "http://127.0.0.1:8080";
    std::string token;
    bool json_out = false;
    app.add_option("--gateway", gateway, "gateway base URL");
    app.add_option("--token", token, "bearer token")->envname("SCIMESH_TOKEN");
    app.add_flag("--json", json_out, "print raw response bodies");

    // issue-token
    auto* issue = app.add_subcommand("issue-token", "mint a token for a subject");
    std::string subject, project;
    std::vector<std::string> scopes;
    int64_t ttl = 3600;
    bool mfa = false;
    int max_enclave = 3;
    issue->add_option("--subject", subject)->required();
    issue->add_option("--project", project)->required();
    issue->add_option("--scope", scopes, "may repeat")->required();
    issue->add_option("--ttl", ttl, "seconds");
    issue->add_flag("--mfa", mfa, "mark the identity as MFA-verified");
    issue->add_option("--max-enclave", max_enclave);

    // revoke-token
    auto* revoke = app.add_subcommand("revoke-token", "revoke a token and its descendants");
    std::string token_id;
    revoke->add_option("--id", token_id, "token id")->required();

    // load-policies
    auto* loadpol = app.add_subcommand("load-policies", "replace the active policy set");
    std::string pol_file;
    loadpol->add_option("--file", pol_file)->required();

    // add-template
    auto* addtmpl = app.add_subcommand("add-template", "register channel template(s)");
    std::string tmpl_file;
    addtmpl->add_option("--file", tmpl_file)->required();

    // add-reservation
    auto* addresv = app.add_subcommand("add-reservation", "request a reservation window");
    std::string r_project, r_tier = "urgent";
    int64_t r_start = 0, r_end = 0;
    int r_cap = 1;
    addresv->add_option("--project", r_project)->required();
    addresv->add_option("--start", r_start, "unix seconds")->required();
    addresv->add_option("--end", r_end, "unix seconds")->required();
    addresv->add_option("--node-cap", r_cap)->required();
    addresv->add_option("--tier", r_tier, "elevated tier inside the window");

    // approve-reservation
    auto* approve = app.add_subcommand("approve-reservation", "activate a pending reservation");
    std::string resv_id;
    approve->add_option("--id", resv_id)->required();

    // audit-query
    auto* auditq = app.add_subcommand("audit-query", "fetch audit records as JSONL");
    std::string q_subject, q_verdict, q_request;
    int64_t q_from = -1, q_to = -1;
    auditq->add_option("--subject", q_subject);
    auditq->add_option("--verdict", q_verdict, "allow|deny");
    auditq->add_option("--request-id", q_request);
    auditq->add_option("--from-ms", q_from);
    auditq->add_option("--to-ms", q_to);

    // profile-set
    auto* profset = app.add_subcommand("profile-set", "switch the active environment profile");
    std::string profile_name;
    profset->add_option("--name", profile_name)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        json resp;
        if (issue->parsed()) {
            json body{{"subject", subject}, {"project", project},  {"scopes", scopes},
                      {"ttl_seconds", ttl}, {"mfa", mfa},          {"max_enclave", max_enclave}};
            resp = tool::gateway_call(gateway, "POST", "/v1/tokens", token, &body);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << resp["token"].get<std::string>() << "\n";
        } else if (revoke->parsed()) {
            resp = tool::gateway_call(gateway, "DELETE", "/v1/tokens/" + token_id, token,
                                      nullptr);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << "revoked " << resp["revoked"] << "\n";
        } else if (loadpol->parsed()) {
            json body = json::parse(slurp(pol_file));
            resp = tool::gateway_call(gateway, "POST", "/v1/policies", token, &body);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << "loaded " << resp["rules"] << " rules\n";
        } else if (addtmpl->parsed()) {
            json body = json::parse(slurp(tmpl_file));
            resp = tool::gateway_call(gateway, "POST", "/v1/templates", token, &body);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << "added " << resp["added"] << " template(s)\n";
        } else if (addresv->parsed()) {
            json body{{"project", r_project},
                      {"start", r_start},
                      {"end", r_end},
                      {"node_cap", r_cap},
                      {"elevated_tier", r_tier}};
            resp = tool::gateway_call(gateway, "POST", "/v1/reservations", token, &body);
            if (json_out) {
                std::cout << resp.dump() << "\n";
            } else if (resp.value("status", "") == "pending-approval") {
                std::cout << "pending-approval " << resp["reservation_id"].get<std::string>()
                          << "\n";
            } else {
                std::cout << "active " << resp.value("window_id", std::string()) << "\n";
            }
        } else if (approve->parsed()) {
            resp = tool::gateway_call(gateway, "POST", "/v1/reservations/" + resv_id + "/approve",
                                      token, nullptr);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << "active " << resp.value("window_id", std::string()) << "\n";
        } else if (auditq->parsed()) {
            std::string path = "/v1/audit";
            char sep = '?';
            auto add = [&](const std::string& key, const std::string& val) {
                path += sep + key + "=" + val;
                sep = '&';
            };
            if (!q_subject.empty()) add("subject", q_subject);
            if (!q_verdict.empty()) add("verdict", q_verdict);
            if (!q_request.empty()) add("request_id", q_request);
            if (q_from >= 0) add("from_ms", std::to_string(q_from));
            if (q_to >= 0) add("to_ms", std::to_string(q_to));
            resp = tool::gateway_call(gateway, "GET", path, token, nullptr);
            for (const auto& rec : resp["records"]) std::cout << rec.dump() << "\n";
        } else if (profset->parsed()) {
            json body{{"profile", profile_name}};
            resp = tool::gateway_call(gateway, "PUT", "/v1/profile", token, &body);
            if (json_out)
                std::cout << resp.dump() << "\n";
            else
                std::cout << "profile " << resp["profile"].get<std::string>() << " (level "
                          << resp["level"] << ")\n";
        }
        return 0;
    } catch (const std::exception& e) {
        return tool::fail(e);
    }
}
