#include <iostream>

#include "warpband_cli.hpp"

int main(int argc, char **argv) { return warpband::cli::run(argc, argv, std::cout, std::cerr); }
