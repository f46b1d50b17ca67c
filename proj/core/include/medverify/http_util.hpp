#pragma once

#include <string>
#include <string_view>

namespace medv {

// "https://host:8443/v1" -> origin "https://host:8443", path_prefix "/v1".
struct SplitUrl {
  std::string origin;
  std::string path_prefix;
};

// Throws Error(Config) when the URL has no http:// or https:// scheme.
SplitUrl split_base_url(std::string_view url);

// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view s);

}  // namespace medv
