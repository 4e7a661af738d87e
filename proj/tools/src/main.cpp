#include <iostream>

#include "khl_cli/commands.hpp"

int main(int argc, char** argv) { return khl::cli::run(argc, argv, std::cout, std::cerr); }
