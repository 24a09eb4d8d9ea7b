#include <iostream>

#include "space3/cli/commands.hpp"

int main(int argc, char** argv) { return space3::cli::run(argc, argv, std::cout, std::cerr); }
