#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace kgrag::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Endpoint {
    std::string base; ///< scheme://host[:port]
    std::string path; ///< begins with '/'
};

/// Split "http://host:8080/v1/score" into base and path. Throws Config.
Endpoint parse_endpoint(const std::string& url);

struct Result {
    bool transport_ok = false; ///< false: connection/timeout failure, no status
    int status = 0;
    std::string body;
    std::string error;
};

/// POST seam so clients can be exercised without a network.
class Transport {
public:
    virtual ~Transport() = default;
    virtual Result post(const std::string& url, const std::string& body, const Headers& headers,
                        std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport. A fresh connection per call, so one
/// instance may be shared by concurrent workers.
class HttplibTransport final : public Transport {
public:
    Result post(const std::string& url, const std::string& body, const Headers& headers,
                std::chrono::milliseconds timeout) override;
};

} // namespace kgrag::http
