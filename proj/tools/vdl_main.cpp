// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "vdl/cli.hpp"

int main(int argc, char** argv) {
  return vdl::cli(std::vector<std::string>(argv + 1, argv + argc));
}
