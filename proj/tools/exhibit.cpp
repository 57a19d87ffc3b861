// SPDX-License-Identifier: Apache-2.0
#include "exhibit/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return exhibit::run_cli(argc, argv, std::cout, std::cerr);
}
