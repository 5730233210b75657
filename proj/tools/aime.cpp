#include <iostream>

#include "aime/cli.hpp"

int main(int argc, char** argv) { return aime::cli::run(argc, argv, std::cout, std::cerr); }
