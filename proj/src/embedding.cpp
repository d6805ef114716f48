#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ctrnli/exemplars.hpp"
#include "ctrnli/llm.hpp"

namespace ctrnli {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Embedding HashEmbeddingProvider::embed(std::string_view text) {
  const auto base = splitmix64(fnv1a(text) ^ splitmix64(seed_));
  std::vector<double> values(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto bits = splitmix64(base + i) >> 11;  // 53 significant bits
    values[i] = static_cast<double>(bits) * 0x1.0p-52 - 1.0;
  }
  return Embedding(std::move(values));
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::string model, std::size_t dim,
                                             std::string api_key_env)
    : model_(std::move(model)), dim_(dim) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  auto [origin, path] = split_url(url);
  origin_ = std::move(origin);
  constexpr std::string_view kRoute = "/embeddings";
  path_ = path.ends_with(kRoute) ? path : path + std::string(kRoute);
  if (!api_key_env.empty()) {
    if (const char* token = std::getenv(api_key_env.c_str())) token_ = token;
  }
}

Embedding HttpEmbeddingProvider::embed(std::string_view text) {
  const nlohmann::json body = {{"model", model_}, {"input", std::string(text)}};
  httplib::Client client(origin_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto result = client.Post(path_, headers, body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                            "application/json");
  if (!result) {
    throw ProviderUnavailable("embedding request failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw ProviderUnavailable("embedding endpoint returned HTTP " + std::to_string(result->status));
  }
  auto reply = nlohmann::json::parse(result->body, nullptr, false);
  std::vector<double> values;
  try {
    values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderUnavailable(std::string("malformed embedding response: ") + e.what());
  }
  if (values.size() != dim_) throw DimMismatch(values.size(), dim_);
  return Embedding(std::move(values));
}

}  // namespace ctrnli
