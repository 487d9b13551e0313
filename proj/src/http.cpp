#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "http.hpp"

#include <chrono>
#include <thread>

#include "hpd/error.hpp"

namespace hpd::detail {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, without trailing '/'
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' must start with http:// or https://");
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported URL scheme '" + scheme + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string excerpt(const std::string& payload, std::size_t n) {
  if (payload.size() <= n) return payload;
  return payload.substr(0, n) + "...";
}

nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body,
                         const HttpOptions& options) {
  const auto url = parse_url(base_url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(options.timeout_seconds);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string target = url.prefix + path;
  const std::string payload = body.dump();
  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= options.retries;
    auto result = client.Post(target, payload, "application/json");
    if (!result) {
      if (last) {
        throw RemoteError("network",
                          "POST " + base_url + path + " failed: " +
                              httplib::to_string(result.error()),
                          true);
      }
    } else if (result->status == 200) {
      try {
        return nlohmann::json::parse(result->body);
      } catch (const nlohmann::json::parse_error&) {
        throw RemoteError("protocol", "response from " + base_url + path +
                                          " is not JSON: " +
                                          excerpt(result->body));
      }
    } else if (last || !retryable_status(result->status)) {
      throw RemoteError("status",
                        "POST " + base_url + path + " returned HTTP " +
                            std::to_string(result->status) + ": " +
                            excerpt(result->body),
                        retryable_status(result->status));
    }
    std::this_thread::sleep_for(
        std::chrono::milliseconds(options.backoff_ms * (attempt + 1)));
  }
}

}  // namespace hpd::detail
