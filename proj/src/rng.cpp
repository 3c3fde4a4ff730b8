// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/rng.hpp"

// Header-only; this TU pins the header into the build so warnings surface.
namespace branchbench {
static_assert(mix64(0) != 0, "mixer must not fix zero");
static_assert(counter_hash(1, 2, 3, 4) != counter_hash(1, 2, 4, 3),
              "coordinates must not commute");
}  // namespace branchbench
