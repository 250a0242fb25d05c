#pragma once

#include "rfgn/graph.hpp"
#include "rfgn/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace rfgn {

enum class CacheAdvance { Kept, Cleared };

/// External memory for node states h^t. A fresh cache (and a cleared one)
/// holds the input features X exactly; advance_and_maybe_clear is called once
/// per completed pass and resets to X whenever t mod L == 0 for a finite
/// layer budget L. L unset means never clear (the transductive regime).
class NodeStateCache {
 public:
  NodeStateCache(Matrix initial, std::optional<std::uint64_t> layer_budget);

  const Matrix& states() const { return states_; }
  const Matrix& initial() const { return initial_; }
  std::uint64_t step() const { return step_; }
  std::optional<std::uint64_t> layer_budget() const { return layer_budget_; }

  /// Rows for the requested ids, in request order.
  Matrix pull(std::span<const EntityId> ids) const;
  const Matrix& pull_all() const { return states_; }

  /// Replace the targeted rows; ids must be unique within the call and rows
  /// finite. The step counter is untouched.
  void push(std::span<const EntityId> ids, const Matrix& rows);
  void push_all(const Matrix& states);

  CacheAdvance advance_and_maybe_clear();

  void save(const std::string& path) const;
  static NodeStateCache load(const std::string& path,
                             std::optional<std::uint64_t> layer_budget = std::nullopt);

 private:
  Matrix states_;
  Matrix initial_;
  std::uint64_t step_ = 0;
  std::optional<std::uint64_t> layer_budget_;
};

// Snapshot container, also used for the relation table artifact:
// "RFGN" magic, u32 version, u64 rows, u64 cols, rows*cols little-endian f64.
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace rfgn
