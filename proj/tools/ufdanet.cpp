#include <iostream>

#include "ufda/cli/commands.hpp"

int main(int argc, char** argv) { return ufda::cli::run(argc, argv, std::cout, std::cerr); }
