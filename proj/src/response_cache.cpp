#include <iostream>

#include <nlohmann/json.hpp>

#include "ctrnli/llm.hpp"

namespace ctrnli {

ResponseCache::ResponseCache(const std::filesystem::path& path) : path_(path) {
  if (std::ifstream in{path}) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto record = nlohmann::json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.is_object() || !record.contains("key") || !record.contains("content") ||
          !record["key"].is_string() || !record["content"].is_string()) {
        ++skipped_;
        continue;
      }
      entries_.try_emplace(record["key"].get<std::string>(), record["content"].get<std::string>());
    }
  }
  bool needs_newline = false;
  if (std::ifstream tail{path, std::ios::binary | std::ios::ate}; tail && tail.tellg() > 0) {
    tail.seekg(-1, std::ios::end);
    needs_newline = tail.get() != '\n';
  }
  out_.open(path, std::ios::app | std::ios::binary);
  if (!out_) {
    throw std::runtime_error("cannot open response cache " + path.string());
  }
  if (needs_newline) out_ << '\n';
  if (skipped_ > 0) {
    std::cerr << "warning: skipped " << skipped_ << " unreadable cache line(s) in " << path << "\n";
  }
}

std::optional<std::string> ResponseCache::lookup(const Digest& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key.hex());
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::insert(const Digest& key, std::string_view model, const std::string& content) {
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.try_emplace(key.hex(), content);
  if (!inserted || !out_.is_open()) return;
  const nlohmann::json record = {{"key", it->first}, {"model", model}, {"content", content}};
  out_ << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  out_.flush();
}

void ResponseCache::flush() {
  std::lock_guard lock(mutex_);
  if (out_.is_open()) out_.flush();
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace ctrnli
