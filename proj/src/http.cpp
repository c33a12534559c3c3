#include "kgrag/http.hpp"

#include <httplib.h>

#include "kgrag/error.hpp"

namespace kgrag::http {

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorKind::Config, "endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.base = url;
        ep.path = "/";
    } else {
        ep.base = url.substr(0, path_start);
        ep.path = url.substr(path_start);
    }
    if (ep.base.size() <= scheme_end + 3) throw Error(ErrorKind::Config, "endpoint URL has no host: " + url);
    return ep;
}

Result HttplibTransport::post(const std::string& url, const std::string& body, const Headers& headers,
                              std::chrono::milliseconds timeout) {
    const auto ep = parse_endpoint(url);
    httplib::Client client(ep.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    Result r;
    auto res = client.Post(ep.path, h, body, "application/json");
    if (!res) {
        r.error = httplib::to_string(res.error());
        return r;
    }
    r.transport_ok = true;
    r.status = res->status;
    r.body = res->body;
    return r;
}

} // namespace kgrag::http
