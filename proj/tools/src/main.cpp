#include <iostream>

#include "utep/cli/commands.hpp"

int main(int argc, char** argv) { return utep::cli::run_cli(argc, argv, std::cout, std::cerr); }
