// Copyright (C) 2024 The recipe-tune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace recipe_tune {

struct HttpResponse {
    int status = 0;
    std::string body;
};

// POSTs a JSON body to an absolute http(s) URL. Connection-level failures
// throw Error(TransportError); any HTTP status is returned to the caller.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       std::chrono::seconds timeout);

// 429 and 5xx are worth retrying; other non-2xx statuses are not.
bool is_retryable_status(int status);

} // namespace recipe_tune

namespace recipe_tune {

std::string base64_encode(std::string_view bytes);

} // namespace recipe_tune
