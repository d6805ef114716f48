#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ctrnli/llm.hpp"

namespace ctrnli {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint URL needs a scheme: " + url);
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw std::invalid_argument("endpoint URL must be http or https: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, ""};
  }
  auto path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

HttpBackend::HttpBackend(EndpointConfig config) : config_(std::move(config)) {
  auto [origin, path] = split_url(config_.url);
  origin_ = std::move(origin);
  constexpr std::string_view kRoute = "/chat/completions";
  path_ = path.ends_with(kRoute) ? path : path + std::string(kRoute);
  if (!config_.api_key_env.empty()) {
    if (const char* token = std::getenv(config_.api_key_env.c_str())) token_ = token;
  }
}

std::string HttpBackend::send(const ChatRequest& request, const std::string& model) {
  auto messages = nlohmann::json::array();
  for (const auto& m : request.messages()) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const auto& p = request.params();
  nlohmann::json body = {
      {"model", model},
      {"messages", std::move(messages)},
      {"temperature", p.temperature()},
      {"max_tokens", p.max_tokens()},
  };
  if (p.seed()) body["seed"] = *p.seed();

  httplib::Client client(origin_);
  const auto timeout = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(timeout, 0);
  client.set_read_timeout(timeout, 0);
  client.set_write_timeout(timeout, 0);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  auto result = client.Post(path_, headers, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                            "application/json");
  if (!result) {
    throw TransientError("request to " + origin_ + path_ + " failed: " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw TransientError("HTTP " + std::to_string(status) + " from " + origin_ + path_);
  }
  if (status != 200) {
    throw NonRetriableHttpError(status, result->body);
  }
  auto reply = nlohmann::json::parse(result->body, nullptr, false);
  if (reply.is_discarded()) {
    throw TransientError("unparseable response body from " + origin_ + path_);
  }
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransientError(std::string("response without choices[0].message.content: ") + e.what());
  }
}

}  // namespace ctrnli
