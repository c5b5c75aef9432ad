#include <iostream>

#include "blasso_cli/commands.hpp"

int main(int argc, char** argv) { return blasso::cli::main_entry(argc, argv, std::cout, std::cerr); }
