// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

// Compares the parallel dataset fill against the serial reference: same
// bytes out (verified by table digests), wall time side by side.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "branchbench/csvio.hpp"
#include "branchbench/datagen.hpp"

using namespace branchbench;

namespace {

double run_one(const DataGenConfig& cfg, bool serial, std::uint64_t& digest_out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto ds = serial ? generate_dataset_serial(cfg) : generate_dataset(cfg);
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;
  if (!ds.ok()) {
    fmt::print(stderr, "generation failed: {}\n", ds.error().to_string());
    std::exit(1);
  }
  std::uint64_t digest = 0;
  for (const auto& t : ds.value().tables) digest ^= table_digest(t);
  digest_out = digest;
  return wall.count();
}

}  // namespace

int main(int argc, char** argv) {
  DataGenConfig cfg;
  cfg.warehouses = argc > 1 ? static_cast<std::uint32_t>(std::strtoul(argv[1], nullptr, 10)) : 4;
  cfg.seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 42;
  if (cfg.warehouses == 0) {
    fmt::print(stderr, "usage: datagen_bench [warehouses] [seed]\n");
    return 2;
  }

  fmt::print("dataset fill, {} warehouses, seed {}\n", cfg.warehouses, cfg.seed);
  std::uint64_t serial_digest = 0, parallel_digest = 0;
  const double serial_s = run_one(cfg, /*serial=*/true, serial_digest);
  const double parallel_s = run_one(cfg, /*serial=*/false, parallel_digest);

  fmt::print("  serial    {:8.3f} s   digest {:016x}\n", serial_s, serial_digest);
  fmt::print("  parallel  {:8.3f} s   digest {:016x}\n", parallel_s, parallel_digest);
  if (serial_digest != parallel_digest) {
    fmt::print(stderr, "MISMATCH: parallel fill diverged from the serial reference\n");
    return 1;
  }
  fmt::print("  match, speedup {:.2f}x\n", parallel_s > 0 ? serial_s / parallel_s : 0.0);
  return 0;
}
