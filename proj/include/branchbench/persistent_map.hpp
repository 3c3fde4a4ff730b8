// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "branchbench/types.hpp"

namespace branchbench {

// Persistent (immutable) key-ordered map: updates copy the root-to-leaf
// path and share everything else. Nodes live in a refcounted arena; a
// node's refcount counts parent links plus outside root handles, and
// dropping the last reference frees the node and unrefs its children.
// Not thread-safe; callers serialize writers against readers.

using NodeId = std::uint32_t;
constexpr NodeId kNilNode = 0;

class NodeArena {
 public:
  struct Node {
    bool leaf = true;
    std::uint32_t refs = 0;
    std::uint64_t bytes = 0;  // accounted size of this node alone
    std::uint64_t owner = 0;  // allocator tag, for per-branch attribution
    std::vector<std::pair<Key, Row>> entries;  // leaf payload, key-sorted
    std::vector<Key> seps;   // inner: seps[i] = min key under kids[i+1]
    std::vector<NodeId> kids;
  };

  explicit NodeArena(std::uint32_t fanout = 32) : fanout_(fanout < 4 ? 4 : fanout) {}

  std::uint32_t fanout() const { return fanout_; }
  const Node& node(NodeId id) const { return nodes_[id]; }

  NodeId alloc_leaf(std::vector<std::pair<Key, Row>> entries, std::uint64_t owner);
  NodeId alloc_inner(std::vector<Key> seps, std::vector<NodeId> kids, std::uint64_t owner);

  void ref(NodeId id);
  // Releases one reference; on the last one the node is freed and children
  // are unrefed in cascade. Returns the bytes freed by the cascade.
  std::uint64_t unref(NodeId id);

  std::uint64_t total_bytes() const { return total_bytes_; }
  std::uint64_t peak_bytes() const { return peak_bytes_; }
  std::uint64_t alive_nodes() const { return alive_; }
  const std::map<std::uint64_t, std::uint64_t>& owner_bytes() const { return owner_bytes_; }

 private:
  NodeId alloc_slot();

  std::uint32_t fanout_;
  std::vector<Node> nodes_{1};  // id 0 is the nil node
  std::vector<NodeId> free_;
  std::uint64_t total_bytes_ = 0;
  std::uint64_t peak_bytes_ = 0;
  std::uint64_t alive_ = 0;
  std::map<std::uint64_t, std::uint64_t> owner_bytes_;
};

// All update ops return a new root holding one fresh handle reference; the
// old root keeps its references and the caller decides when to unref it.
NodeId pmap_put(NodeArena& arena, NodeId root, const Key& key, Row row, std::uint64_t owner,
                bool* replaced = nullptr);
NodeId pmap_erase(NodeArena& arena, NodeId root, const Key& key, std::uint64_t owner,
                  bool* erased = nullptr);
const Row* pmap_get(const NodeArena& arena, NodeId root, const Key& key);
// Key-ordered scan over [lo, hi]; callback returns false to stop.
void pmap_scan(const NodeArena& arena, NodeId root, const std::optional<Key>& lo,
               const std::optional<Key>& hi,
               const std::function<bool(const Key&, const Row&)>& fn);
std::uint64_t pmap_count(const NodeArena& arena, NodeId root);
// Builds a tree from key-sorted unique rows bottom-up; returns the root.
NodeId pmap_bulk_build(NodeArena& arena, const std::vector<std::pair<Key, Row>>& rows,
                       std::uint64_t owner);

}  // namespace branchbench
