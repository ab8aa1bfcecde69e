#include "http.hpp"

#include <chrono>

#include <httplib.h>

#include "hallucmap/error.hpp"

namespace hallucmap::detail {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Url split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ProviderError("endpoint '" + endpoint + "' lacks a scheme");
  if (endpoint.compare(0, scheme_end, "http") != 0) {
    throw ProviderError("endpoint '" + endpoint + "': only http:// is supported");
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  Url url{endpoint.substr(0, path_start), path_start == std::string::npos ? "" : endpoint.substr(path_start)};
  while (!url.prefix.empty() && url.prefix.back() == '/') url.prefix.pop_back();
  return url;
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         double timeout_seconds) {
  if (endpoint.empty()) throw ProviderError("provider endpoint is empty");
  const auto url = split_endpoint(endpoint);
  const std::string full = url.origin + url.prefix + path;

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(timeout_seconds);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(url.prefix + path, body.dump(), "application/json");
  if (!res) throw ProviderError("POST " + full + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("POST " + full + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError("POST " + full + " returned invalid JSON: " + e.what());
  }
}

}  // namespace hallucmap::detail
