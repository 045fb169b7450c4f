// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return splatvox::run_cli(argc, argv, std::cout, std::cerr); }
