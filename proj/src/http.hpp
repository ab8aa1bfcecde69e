#pragma once

#include <string>

#include <json.hpp>

namespace hallucmap::detail {

/// POSTs `body` as JSON to endpoint + path and parses the JSON reply. Any
/// transport failure, non-2xx status or unparsable body is a ProviderError
/// naming the URL. Only plain http:// endpoints are supported.
nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         double timeout_seconds);

}  // namespace hallucmap::detail
