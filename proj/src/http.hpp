#pragma once

#include <string>

#include <json.hpp>

namespace hpd::detail {

struct HttpOptions {
  double timeout_seconds = 30.0;
  int retries = 2;  // extra attempts after a retryable failure
  int backoff_ms = 200;
};

// POSTs body to base_url + path and returns the parsed JSON response.
// Network failures, timeouts, 429 and 5xx are retried; any status other
// than 200 ends as a RemoteError, as does a body that is not JSON.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body,
                         const HttpOptions& options);

// First n bytes of a payload, for error messages.
std::string excerpt(const std::string& payload, std::size_t n = 200);

}  // namespace hpd::detail
