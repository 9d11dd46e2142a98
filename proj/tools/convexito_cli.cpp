#include "convexito/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cvx::cli::run(argc, argv, std::cout, std::cerr); }
