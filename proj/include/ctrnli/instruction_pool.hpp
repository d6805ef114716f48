#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ctrnli {

struct Instruction {
  std::string text;  // trimmed, nonempty
  double f1 = 0.0;   // in [0, 1]

  // Trims `text`; throws std::invalid_argument on empty text or f1 outside [0, 1].
  static Instruction make(std::string_view text, double f1);

  bool operator==(const Instruction&) const = default;
};

/// Bounded set of the best instructions seen so far, kept in ascending F1
/// order. Equal scores keep insertion order.
class InstructionPool {
 public:
  explicit InstructionPool(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Instruction>& items() const { return items_; }

  // Lowest and highest scoring entries; pool must be nonempty.
  const Instruction& worst() const;
  const Instruction& best() const;

  nlohmann::json to_json() const;
  static InstructionPool from_json(const nlohmann::json& doc);

  bool operator==(const InstructionPool&) const = default;

 private:
  friend InstructionPool update_pool(InstructionPool pool, Instruction candidate);

  std::size_t capacity_;
  std::vector<Instruction> items_;
};

// Inserts while below capacity; at capacity, replaces the worst entry only if
// the candidate scores strictly higher.
InstructionPool update_pool(InstructionPool pool, Instruction candidate);

InstructionPool load_pool(const std::filesystem::path& path);
void save_pool(const InstructionPool& pool, const std::filesystem::path& path);

}  // namespace ctrnli
