// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#include "branchbench/cli.hpp"

int main(int argc, char** argv) { return branchbench::run_cli(argc, argv); }
