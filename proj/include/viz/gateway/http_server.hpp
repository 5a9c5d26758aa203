// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "viz/error.hpp"
#include "viz/gateway/marketplace.hpp"

namespace httplib {
class Server;
}

namespace viz::gateway {

// HTTP status for each error code.
int http_status(Errc code) noexcept;
// {"error": token, "message": text[, "violations": [...]]}
nlohmann::ordered_json error_body(const Error& e);

// JSON over HTTP/1.1 in front of a Marketplace. Endpoints are listed in docs/api.md.
class HttpServer {
public:
    explicit HttpServer(Marketplace& market);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port; throws io-error.
    int bind(const std::string& host, int port);
    // Serves until stop(). Requires bind().
    void listen();
    void stop();
    bool running() const;

private:
    void routes();

    Marketplace& market_;
    std::unique_ptr<httplib::Server> srv_;
};

}  // namespace viz::gateway
