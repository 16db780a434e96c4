#include <iostream>

#include "twa/cli.hpp"

int main(int argc, char** argv) { return twa::run_cli(argc, argv, std::cout, std::cerr); }
