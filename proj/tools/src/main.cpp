#include <iostream>

#include "ldx/cli/app.hpp"

int main(int argc, char** argv) { return ldx::cli::run(argc, argv, std::cout, std::cerr); }
