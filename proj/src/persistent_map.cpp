// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/persistent_map.hpp"

#include <algorithm>
#include <cassert>

namespace branchbench {

namespace {

std::uint64_t key_bytes(const Key& k) { return 8 * k.size(); }

std::uint64_t leaf_bytes(const std::vector<std::pair<Key, Row>>& entries) {
  std::uint64_t n = 16;  // header
  for (const auto& [k, row] : entries) {
    n += key_bytes(k);
    for (const auto& v : row) n += value_bytes(v);
  }
  return n;
}

std::uint64_t inner_bytes(const std::vector<Key>& seps, const std::vector<NodeId>& kids) {
  std::uint64_t n = 16 + 8 * kids.size();
  for (const auto& k : seps) n += key_bytes(k);
  return n;
}

}  // namespace

NodeId NodeArena::alloc_slot() {
  if (!free_.empty()) {
    NodeId id = free_.back();
    free_.pop_back();
    return id;
  }
  assert(nodes_.size() < UINT32_MAX);
  nodes_.emplace_back();
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId NodeArena::alloc_leaf(std::vector<std::pair<Key, Row>> entries, std::uint64_t owner) {
  const NodeId id = alloc_slot();
  Node& n = nodes_[id];
  n.leaf = true;
  n.refs = 1;
  n.owner = owner;
  n.entries = std::move(entries);
  n.seps.clear();
  n.kids.clear();
  n.bytes = leaf_bytes(n.entries);
  total_bytes_ += n.bytes;
  owner_bytes_[owner] += n.bytes;
  peak_bytes_ = std::max(peak_bytes_, total_bytes_);
  ++alive_;
  return id;
}

NodeId NodeArena::alloc_inner(std::vector<Key> seps, std::vector<NodeId> kids,
                              std::uint64_t owner) {
  const NodeId id = alloc_slot();
  Node& n = nodes_[id];
  n.leaf = false;
  n.refs = 1;
  n.owner = owner;
  n.entries.clear();
  n.seps = std::move(seps);
  n.kids = std::move(kids);
  n.bytes = inner_bytes(n.seps, n.kids);
  total_bytes_ += n.bytes;
  owner_bytes_[owner] += n.bytes;
  peak_bytes_ = std::max(peak_bytes_, total_bytes_);
  ++alive_;
  return id;
}

void NodeArena::ref(NodeId id) {
  if (id == kNilNode) return;
  ++nodes_[id].refs;
}

std::uint64_t NodeArena::unref(NodeId id) {
  if (id == kNilNode) return 0;
  Node& n = nodes_[id];
  assert(n.refs > 0);
  if (--n.refs > 0) return 0;
  std::uint64_t freed = n.bytes;
  total_bytes_ -= n.bytes;
  owner_bytes_[n.owner] -= n.bytes;
  --alive_;
  std::vector<NodeId> kids = std::move(n.kids);
  n.entries.clear();
  n.entries.shrink_to_fit();
  n.seps.clear();
  n.bytes = 0;
  free_.push_back(id);
  for (NodeId kid : kids) freed += unref(kid);
  return freed;
}

namespace {

// Result of inserting into / erasing from a subtree: one node, or two with
// the separator (min key of b) after a split.
struct UpResult {
  NodeId a = kNilNode;
  NodeId b = kNilNode;
  Key sep;
  bool split = false;
};

std::size_t route(const NodeArena::Node& n, const Key& key) {
  // Number of separators <= key picks the child.
  return static_cast<std::size_t>(
      std::upper_bound(n.seps.begin(), n.seps.end(), key) - n.seps.begin());
}

UpResult put_rec(NodeArena& arena, NodeId id, const Key& key, Row& row, std::uint64_t owner,
                 bool* replaced) {
  const std::uint32_t fanout = arena.fanout();
  if (id == kNilNode) {
    std::vector<std::pair<Key, Row>> entries;
    entries.emplace_back(key, std::move(row));
    return {arena.alloc_leaf(std::move(entries), owner), kNilNode, {}, false};
  }
  const NodeArena::Node& n = arena.node(id);
  if (n.leaf) {
    std::vector<std::pair<Key, Row>> entries = n.entries;
    auto it = std::lower_bound(entries.begin(), entries.end(), key,
                               [](const auto& e, const Key& k) { return e.first < k; });
    if (it != entries.end() && it->first == key) {
      if (replaced) *replaced = true;
      it->second = std::move(row);
    } else {
      entries.emplace(it, key, std::move(row));
    }
    if (entries.size() <= fanout)
      return {arena.alloc_leaf(std::move(entries), owner), kNilNode, {}, false};
    const std::size_t mid = entries.size() / 2;
    std::vector<std::pair<Key, Row>> right(std::make_move_iterator(entries.begin() + mid),
                                           std::make_move_iterator(entries.end()));
    entries.resize(mid);
    Key sep = right.front().first;
    NodeId a = arena.alloc_leaf(std::move(entries), owner);
    NodeId b = arena.alloc_leaf(std::move(right), owner);
    return {a, b, std::move(sep), true};
  }

  const std::size_t idx = route(n, key);
  UpResult down = put_rec(arena, n.kids[idx], key, row, owner, replaced);

  std::vector<Key> seps = n.seps;
  std::vector<NodeId> kids = n.kids;
  kids[idx] = down.a;
  if (down.split) {
    seps.insert(seps.begin() + idx, down.sep);
    kids.insert(kids.begin() + idx + 1, down.b);
  }
  // The fresh children carry their creation reference; the untouched
  // siblings gain one parent link each.
  for (std::size_t i = 0; i < kids.size(); ++i) {
    const bool fresh = kids[i] == down.a || (down.split && kids[i] == down.b);
    if (!fresh) arena.ref(kids[i]);
  }
  if (kids.size() <= fanout)
    return {arena.alloc_inner(std::move(seps), std::move(kids), owner), kNilNode, {}, false};
  const std::size_t midk = kids.size() / 2;
  Key sep = seps[midk - 1];
  std::vector<Key> rseps(seps.begin() + midk, seps.end());
  std::vector<NodeId> rkids(kids.begin() + midk, kids.end());
  seps.resize(midk - 1);
  kids.resize(midk);
  NodeId a = arena.alloc_inner(std::move(seps), std::move(kids), owner);
  NodeId b = arena.alloc_inner(std::move(rseps), std::move(rkids), owner);
  return {a, b, std::move(sep), true};
}

NodeId erase_rec(NodeArena& arena, NodeId id, const Key& key, std::uint64_t owner,
                 bool* erased) {
  if (id == kNilNode) return kNilNode;
  const NodeArena::Node& n = arena.node(id);
  if (n.leaf) {
    auto it = std::lower_bound(n.entries.begin(), n.entries.end(), key,
                               [](const auto& e, const Key& k) { return e.first < k; });
    if (it == n.entries.end() || it->first != key) {
      arena.ref(id);  // unchanged subtree, shared as-is
      return id;
    }
    if (erased) *erased = true;
    std::vector<std::pair<Key, Row>> entries;
    entries.reserve(n.entries.size() - 1);
    for (const auto& e : n.entries)
      if (e.first != key) entries.push_back(e);
    if (entries.empty()) return kNilNode;
    return arena.alloc_leaf(std::move(entries), owner);
  }

  const std::size_t idx = route(n, key);
  bool hit = false;
  NodeId replacement = erase_rec(arena, n.kids[idx], key, owner, &hit);
  if (erased) *erased = *erased || hit;
  if (!hit) {
    // Nothing changed below; replacement is the old child with an extra
    // reference. Swap it back and share this node.
    arena.unref(replacement);
    arena.ref(id);
    return id;
  }
  std::vector<Key> seps = n.seps;
  std::vector<NodeId> kids = n.kids;
  if (replacement == kNilNode) {
    kids.erase(kids.begin() + idx);
    if (idx == 0) {
      if (!seps.empty()) seps.erase(seps.begin());
    } else {
      seps.erase(seps.begin() + idx - 1);
    }
  } else {
    kids[idx] = replacement;
  }
  if (kids.empty()) return kNilNode;
  if (kids.size() == 1) {
    // Collapse single-child roots/inners; the child already carries either
    // its fresh reference or needs a parent-link transfer.
    NodeId only = kids[0];
    if (only != replacement) arena.ref(only);
    return only;
  }
  for (std::size_t i = 0; i < kids.size(); ++i)
    if (kids[i] != replacement) arena.ref(kids[i]);
  return arena.alloc_inner(std::move(seps), std::move(kids), owner);
}

bool scan_rec(const NodeArena& arena, NodeId id, const std::optional<Key>& lo,
              const std::optional<Key>& hi,
              const std::function<bool(const Key&, const Row&)>& fn) {
  if (id == kNilNode) return true;
  const NodeArena::Node& n = arena.node(id);
  if (n.leaf) {
    auto it = n.entries.begin();
    if (lo)
      it = std::lower_bound(n.entries.begin(), n.entries.end(), *lo,
                            [](const auto& e, const Key& k) { return e.first < k; });
    for (; it != n.entries.end(); ++it) {
      if (hi && it->first > *hi) return false;
      if (!fn(it->first, it->second)) return false;
    }
    return true;
  }
  std::size_t first = lo ? route(n, *lo) : 0;
  for (std::size_t i = first; i < n.kids.size(); ++i) {
    // seps[i-1] is the min key under kids[i]; past hi nothing matches.
    if (hi && i > first && i > 0 && n.seps[i - 1] > *hi) return false;
    if (!scan_rec(arena, n.kids[i], lo, hi, fn)) return false;
  }
  return true;
}

}  // namespace

NodeId pmap_put(NodeArena& arena, NodeId root, const Key& key, Row row, std::uint64_t owner,
                bool* replaced) {
  UpResult up = put_rec(arena, root, key, row, owner, replaced);
  if (!up.split) return up.a;
  std::vector<Key> seps{std::move(up.sep)};
  std::vector<NodeId> kids{up.a, up.b};
  return arena.alloc_inner(std::move(seps), std::move(kids), owner);
}

NodeId pmap_erase(NodeArena& arena, NodeId root, const Key& key, std::uint64_t owner,
                  bool* erased) {
  bool hit = false;
  NodeId out = erase_rec(arena, root, key, owner, &hit);
  if (erased) *erased = hit;
  if (!hit && out == root) {
    // Share path: erase_rec already added a reference for the new handle.
    return out;
  }
  return out;
}

const Row* pmap_get(const NodeArena& arena, NodeId root, const Key& key) {
  NodeId id = root;
  while (id != kNilNode) {
    const NodeArena::Node& n = arena.node(id);
    if (n.leaf) {
      auto it = std::lower_bound(n.entries.begin(), n.entries.end(), key,
                                 [](const auto& e, const Key& k) { return e.first < k; });
      if (it != n.entries.end() && it->first == key) return &it->second;
      return nullptr;
    }
    id = n.kids[route(n, key)];
  }
  return nullptr;
}

void pmap_scan(const NodeArena& arena, NodeId root, const std::optional<Key>& lo,
               const std::optional<Key>& hi,
               const std::function<bool(const Key&, const Row&)>& fn) {
  scan_rec(arena, root, lo, hi, fn);
}

std::uint64_t pmap_count(const NodeArena& arena, NodeId root) {
  std::uint64_t n = 0;
  pmap_scan(arena, root, std::nullopt, std::nullopt, [&](const Key&, const Row&) {
    ++n;
    return true;
  });
  return n;
}

NodeId pmap_bulk_build(NodeArena& arena, const std::vector<std::pair<Key, Row>>& rows,
                       std::uint64_t owner) {
  if (rows.empty()) return kNilNode;
  const std::uint32_t fanout = arena.fanout();
  // Leaf level.
  std::vector<std::pair<Key, NodeId>> level;  // (min key, node)
  for (std::size_t i = 0; i < rows.size(); i += fanout) {
    const std::size_t end = std::min(rows.size(), i + fanout);
    std::vector<std::pair<Key, Row>> entries(rows.begin() + i, rows.begin() + end);
    Key min_key = entries.front().first;  // copy before the move consumes entries
    level.emplace_back(std::move(min_key), arena.alloc_leaf(std::move(entries), owner));
  }
  // Inner levels until one root remains.
  while (level.size() > 1) {
    std::vector<std::pair<Key, NodeId>> next;
    for (std::size_t i = 0; i < level.size(); i += fanout) {
      const std::size_t end = std::min(level.size(), i + fanout);
      std::vector<Key> seps;
      std::vector<NodeId> kids;
      for (std::size_t j = i; j < end; ++j) {
        if (j > i) seps.push_back(level[j].first);
        kids.push_back(level[j].second);
      }
      next.emplace_back(level[i].first, arena.alloc_inner(std::move(seps), std::move(kids), owner));
    }
    level = std::move(next);
  }
  return level.front().second;
}

}  // namespace branchbench
