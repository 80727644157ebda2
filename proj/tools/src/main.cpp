#include <iostream>

#include "ranbn_cli/cli.hpp"

int main(int argc, char** argv) { return ranbn::cli::run(argc, argv, std::cout, std::cerr); }
