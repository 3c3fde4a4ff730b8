// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace branchbench {

// Entry point behind the `branchbench` binary, separated so tests can drive
// it in-process. Returns the process exit code: 0 success, 1 workload
// failure (run errors, timeouts, failure fraction above --fail-threshold),
// 2 usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace branchbench
