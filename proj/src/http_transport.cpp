// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#include "recipe_tune/http_transport.hpp"

#include <httplib.h>

#include "recipe_tune/error.hpp"

namespace recipe_tune {

namespace {

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigInvalid, "endpoint URL needs a scheme: '" + url + "'");
    }
    auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::ConfigInvalid, "unsupported URL scheme '" + scheme + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::seconds timeout) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    auto result = client.Post(path, h, body, "application/json");
    if (!result) {
        throw Error(ErrorCode::TransportError,
                    "POST " + url + " failed: " + httplib::to_string(result.error()));
    }
    return {result->status, result->body};
}

bool is_retryable_status(int status) {
    return status == 429 || status >= 500;
}

} // namespace recipe_tune

namespace recipe_tune {

std::string base64_encode(std::string_view bytes) {
    return httplib::detail::base64_encode(std::string(bytes));
}

} // namespace recipe_tune
