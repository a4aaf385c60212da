#pragma once

#include <pispin/error.hpp>

#include <regex>
#include <string>

namespace pispin {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;

  std::string origin() const { return scheme + "://" + host + ":" + std::to_string(port); }
};

inline Url parse_url(const std::string& text) {
  static const std::regex re(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(?::(\d{1,5}))?(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw data_error("malformed URL '" + text + "'", "config");
  Url u;
  u.scheme = m[1].str();
  u.host = m[2].str();
  u.port = m[3].matched ? std::stoi(m[3].str()) : (u.scheme == "https" ? 443 : 80);
  if (u.port < 1 || u.port > 65535) throw data_error("port out of range in URL '" + text + "'", "config");
  u.path = m[4].matched ? m[4].str() : "";
  return u;
}

}  // namespace pispin
